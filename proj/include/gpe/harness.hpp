#pragma once

#include "gpe/correction.hpp"
#include "gpe/estimator.hpp"

#include <optional>
#include <string>

namespace gpe {

/// Configuration error carrying the offending field name.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class RunMode { Mlc, Direct, Both, Adaptive };

std::string mode_name(RunMode mode);
RunMode mode_from_name(const std::string& name);

struct RunConfig {
    std::string domain = "unit-square";
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    double zeta = 1.0;
    int base_n = 6;
    int levels = 4;
    std::string mode = "both";
    double c_mg = 0.1;
    double c_scf = 0.01;
    double scf_lambda_tol = 1e-10;
    double scf_du_tol = 1e-8;
    int scf_max_iters = 100;
    double scf_mixing = 0.6;
    int dense_threshold = 2000;
    double dorfler_theta = 0.5;
    int adaptive_iters = 15;
    int vh_level = 1; // 1-based hierarchy level hosting V_H
    std::string reference_mode = "extra-level"; // extra-level | file
    std::string reference_file;
    std::string out_dir = "out";
    unsigned long seed = 0;

    void validate() const;
    ProblemSpec problem() const;
    RunMode run_mode() const { return mode_from_name(mode); }
    ScfConfig scf() const;
    MlcOptions mlc_options() const;

    /// Hash over every field that influences the reference solution.
    std::string reference_key() const;
};

RunConfig parse_config_file(const std::string& path);
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

/// Reference solution: direct solve one uniform refinement past the study's
/// finest level, with the eigenvalue Richardson-corrected from the last two
/// levels. Cached under GPE_MLC_CACHE_DIR keyed by the config hash.
struct Reference {
    double lambda_ref = 0.0;    // Richardson-corrected
    double lambda_extra = 0.0;  // raw eigenvalue on the extra level
    double lambda_finest = 0.0; // direct eigenvalue on the study's finest level
    FeFunction u_ref;           // on the extra level
    int ref_level = 0;          // index within the extended hierarchy
    bool from_cache = false;
};

Reference reference_solve(const RunConfig& config);
Reference reference_solve(const RunConfig& config, const Hierarchy& extended);

struct LevelRecord {
    int level = 0; // 1-based
    long n_dofs = 0;
    double h_max = 0.0;
    std::optional<double> lambda_mlc, err_mlc, order_mlc, h1_mlc, l2_mlc;
    std::optional<int> scf_mlc, vcycles_mlc;
    std::optional<double> lambda_direct, err_direct, order_direct, h1_direct, l2_direct;
    std::optional<int> scf_direct;
};

struct AdaptiveRecord {
    int iteration = 0; // 0 = initial solve
    long n_dofs = 0;
    double h_max = 0.0;
    double lambda = 0.0;
    double eta = 0.0;
    std::optional<double> err_lambda;
    int scf_iters = 0;
    int vcycles = 0;
    int marked = 0;
};

struct RunResult {
    int exit_code = 0;
    std::vector<LevelRecord> table;
    std::vector<AdaptiveRecord> adaptive;
    WorkReport work;
    std::optional<double> lambda_ref;
    std::vector<std::string> diagnostics;
};

/// Execute the configured study, writing table.csv and report.json (plus
/// exported meshes in adaptive mode) under out_dir.
RunResult run(const RunConfig& config);

struct AdaptiveResult {
    std::vector<AdaptiveRecord> records;
    Hierarchy hierarchy;
    std::vector<EigenPair> pairs; // one per record
    WorkReport work;
};

/// solve -> estimate -> mark -> bisect loop driven by one_correction_step
/// with V_H fixed at the initial mesh.
AdaptiveResult adaptive_loop(const RunConfig& config);

/// Physical trap parameters; the potential is W~(x) = c1 x1^2 + c2 x2^2.
struct PhysicalParams {
    double mass = 1.0;
    double scattering_length = 0.0;
    double n_atoms = 1.0;
    double trap_c1 = 1.0;
    double trap_c2 = 1.0;
    double hbar = 1.0;
    std::string domain = "unit-square";
};

struct NondimResult {
    ProblemSpec spec;
    double lambda_to_mu = 1.0; // mu = lambda_to_mu * lambda
};

/// zeta = 8 pi a N, potential scaled by 2m/hbar^2; the returned factor
/// hbar^2/(2m) maps computed eigenvalues back to the chemical potential.
NondimResult nondimensionalize(const PhysicalParams& params);

} // namespace gpe
