#include "gpe/harness.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gpe {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& field, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field, "expected a number, got '" + value + "'");
    }
}

long parse_long(const std::string& field, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field, "expected an integer, got '" + value + "'");
    }
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12e", v);
    return buf;
}

std::string csv_opt(const std::optional<double>& v) {
    return v ? csv_num(*v) : std::string();
}

std::string csv_opt(const std::optional<int>& v) {
    return v ? std::to_string(*v) : std::string();
}

std::string iso_timestamp() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

json config_json(const RunConfig& c) {
    return json{{"domain", c.domain},
                {"gamma1", c.gamma1},
                {"gamma2", c.gamma2},
                {"zeta", c.zeta},
                {"base_n", c.base_n},
                {"levels", c.levels},
                {"mode", c.mode},
                {"c_mg", c.c_mg},
                {"c_scf", c.c_scf},
                {"scf_lambda_tol", c.scf_lambda_tol},
                {"scf_du_tol", c.scf_du_tol},
                {"scf_max_iters", c.scf_max_iters},
                {"scf_mixing", c.scf_mixing},
                {"dense_threshold", c.dense_threshold},
                {"dorfler_theta", c.dorfler_theta},
                {"adaptive_iters", c.adaptive_iters},
                {"vh_level", c.vh_level},
                {"reference_mode", c.reference_mode},
                {"reference_file", c.reference_file},
                {"out_dir", c.out_dir},
                {"seed", c.seed}};
}

json opt_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

json opt_json(const std::optional<int>& v) {
    return v ? json(*v) : json(nullptr);
}

struct ErrorTools {
    SparseMatrix stiffness;
    SparseMatrix mass;
};

/// H1-seminorm and L2 errors of u (on `level`) against the reference
/// function, both prolonged into the reference space.
std::pair<double, double> function_errors(const Hierarchy& extended, int level,
                                          const FeFunction& u, const Reference& ref,
                                          const ErrorTools& tools) {
    Vector up = extended.composite_interior_map(level, ref.ref_level).apply(u.coeffs);
    const double align = up.dot(tools.mass.apply(ref.u_ref.coeffs));
    if (align < 0.0) {
        up = -up;
    }
    const Vector e = up - ref.u_ref.coeffs;
    return {std::sqrt(std::max(0.0, e.dot(tools.stiffness.apply(e)))),
            std::sqrt(std::max(0.0, e.dot(tools.mass.apply(e))))};
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open output file " + path);
    }
    out << content;
}

} // namespace

std::string mode_name(RunMode mode) {
    switch (mode) {
    case RunMode::Mlc: return "mlc";
    case RunMode::Direct: return "direct";
    case RunMode::Both: return "both";
    case RunMode::Adaptive: return "adaptive";
    }
    return "both";
}

RunMode mode_from_name(const std::string& name) {
    if (name == "mlc") return RunMode::Mlc;
    if (name == "direct") return RunMode::Direct;
    if (name == "both") return RunMode::Both;
    if (name == "adaptive") return RunMode::Adaptive;
    throw ConfigError("mode", "must be one of mlc|direct|both|adaptive, got '" + name + "'");
}

void RunConfig::validate() const {
    try {
        domain_from_name(domain);
    } catch (const std::exception& e) {
        throw ConfigError("domain", e.what());
    }
    mode_from_name(mode);
    if (!(gamma1 > 0.0)) throw ConfigError("gamma1", "must be positive");
    if (!(gamma2 > 0.0)) throw ConfigError("gamma2", "must be positive");
    if (!(zeta >= 0.0)) throw ConfigError("zeta", "must be nonnegative");
    if (base_n < 1) throw ConfigError("base_n", "must be >= 1");
    if (levels < 1) throw ConfigError("levels", "must be >= 1");
    if (!(c_mg > 0.0 && c_mg < 1.0)) throw ConfigError("c_mg", "must be in (0, 1)");
    if (!(c_scf > 0.0)) throw ConfigError("c_scf", "must be positive");
    if (!(scf_lambda_tol > 0.0)) throw ConfigError("scf_lambda_tol", "must be positive");
    if (!(scf_du_tol > 0.0)) throw ConfigError("scf_du_tol", "must be positive");
    if (scf_max_iters < 1) throw ConfigError("scf_max_iters", "must be >= 1");
    if (!(scf_mixing > 0.0 && scf_mixing <= 1.0)) throw ConfigError("scf_mixing", "must be in (0, 1]");
    if (dense_threshold < 1) throw ConfigError("dense_threshold", "must be >= 1");
    if (!(dorfler_theta > 0.0 && dorfler_theta < 1.0)) {
        throw ConfigError("dorfler_theta", "must be in (0, 1), got " + std::to_string(dorfler_theta));
    }
    if (adaptive_iters < 1) throw ConfigError("adaptive_iters", "must be >= 1");
    if (vh_level < 1 || vh_level > levels) {
        throw ConfigError("vh_level", "must be in [1, levels]");
    }
    if (reference_mode != "extra-level" && reference_mode != "file") {
        throw ConfigError("reference_mode", "must be extra-level or file");
    }
    if (reference_mode == "file" && reference_file.empty()) {
        throw ConfigError("reference_file", "required when reference_mode = file");
    }
    if (out_dir.empty()) throw ConfigError("out_dir", "must not be empty");
}

ProblemSpec RunConfig::problem() const {
    return ProblemSpec{domain_from_name(domain), gamma1, gamma2, zeta};
}

ScfConfig RunConfig::scf() const {
    ScfConfig s;
    s.lambda_tol = scf_lambda_tol;
    s.du_tol = scf_du_tol;
    s.max_iters = scf_max_iters;
    s.mixing = scf_mixing;
    s.dense_threshold = dense_threshold;
    return s;
}

MlcOptions RunConfig::mlc_options() const {
    MlcOptions o;
    o.c_mg = c_mg;
    o.c_scf = c_scf;
    o.scf = scf();
    o.vh_level = vh_level - 1;
    return o;
}

std::string RunConfig::reference_key() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%s|%.17g|%.17g|%.17g|%d|%d|%.17g|%.17g|%d|%.17g|%d",
                  domain.c_str(), gamma1, gamma2, zeta, base_n, levels, scf_lambda_tol,
                  scf_du_tol, scf_max_iters, scf_mixing, dense_threshold);
    return fnv1a_hex(buf);
}

void apply_override(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "domain") c.domain = value;
    else if (key == "gamma1") c.gamma1 = parse_double(key, value);
    else if (key == "gamma2") c.gamma2 = parse_double(key, value);
    else if (key == "zeta") c.zeta = parse_double(key, value);
    else if (key == "base_n") c.base_n = static_cast<int>(parse_long(key, value));
    else if (key == "levels") c.levels = static_cast<int>(parse_long(key, value));
    else if (key == "mode") c.mode = value;
    else if (key == "c_mg") c.c_mg = parse_double(key, value);
    else if (key == "c_scf") c.c_scf = parse_double(key, value);
    else if (key == "scf_lambda_tol") c.scf_lambda_tol = parse_double(key, value);
    else if (key == "scf_du_tol") c.scf_du_tol = parse_double(key, value);
    else if (key == "scf_max_iters") c.scf_max_iters = static_cast<int>(parse_long(key, value));
    else if (key == "scf_mixing") c.scf_mixing = parse_double(key, value);
    else if (key == "dense_threshold") c.dense_threshold = static_cast<int>(parse_long(key, value));
    else if (key == "dorfler_theta") c.dorfler_theta = parse_double(key, value);
    else if (key == "adaptive_iters") c.adaptive_iters = static_cast<int>(parse_long(key, value));
    else if (key == "vh_level") c.vh_level = static_cast<int>(parse_long(key, value));
    else if (key == "reference_mode") c.reference_mode = value;
    else if (key == "reference_file") c.reference_file = value;
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "seed") c.seed = static_cast<unsigned long>(parse_long(key, value));
    else throw ConfigError(key, "unknown configuration key");
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config", "cannot open configuration file " + path);
    }
    RunConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config", "line " + std::to_string(lineno) + " is not 'key = value'");
        }
        apply_override(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

Reference reference_solve(const RunConfig& config, const Hierarchy& extended) {
    const int ref_level = extended.levels() - 1;
    const int finest_study = ref_level - 1;
    if (finest_study < 0) {
        throw std::invalid_argument("reference_solve: extended hierarchy needs >= 2 levels");
    }
    const std::string key = config.reference_key();
    std::string cache_path;
    if (const char* dir = std::getenv("GPE_MLC_CACHE_DIR")) {
        std::filesystem::create_directories(dir);
        cache_path = std::string(dir) + "/ref_" + key + ".json";
        std::ifstream in(cache_path);
        if (in) {
            json j;
            in >> j;
            if (j.value("key", "") == key &&
                j.value("n_interior", -1) == extended.mesh(ref_level).n_interior) {
                Reference ref;
                ref.lambda_ref = j.at("lambda_ref").get<double>();
                ref.lambda_extra = j.at("lambda_extra").get<double>();
                ref.lambda_finest = j.at("lambda_finest").get<double>();
                ref.ref_level = ref_level;
                ref.u_ref.level_id = extended.mesh(ref_level).level_id;
                const auto& coeffs = j.at("u_ref");
                ref.u_ref.coeffs.resize(coeffs.size());
                for (std::size_t i = 0; i < coeffs.size(); ++i) {
                    ref.u_ref.coeffs[i] = coeffs[i].get<double>();
                }
                ref.from_cache = true;
                return ref;
            }
        }
    }

    const ProblemSpec spec = config.problem();
    const ScfConfig scf = config.scf();
    const EigenPair at_finest = solve_gpe_direct(extended, finest_study, spec, scf);
    const FeFunction warm{
        extended.mesh(ref_level).level_id,
        extended.composite_interior_map(finest_study, ref_level).apply(at_finest.u.coeffs)};
    const EigenPair at_ref = solve_gpe_direct(extended, ref_level, spec, scf, warm);
    if (!at_finest.converged || !at_ref.converged) {
        throw std::runtime_error("reference_solve: direct reference solve did not converge");
    }

    Reference ref;
    ref.lambda_extra = at_ref.lambda;
    ref.lambda_finest = at_finest.lambda;
    // Richardson step for the second-order eigenvalue sequence; removes the
    // bias a plain extra-level reference leaves in the finest-pair order.
    ref.lambda_ref = (4.0 * at_ref.lambda - at_finest.lambda) / 3.0;
    ref.u_ref = at_ref.u;
    ref.ref_level = ref_level;

    if (!cache_path.empty()) {
        json j;
        j["schema_version"] = 1;
        j["key"] = key;
        j["lambda_ref"] = ref.lambda_ref;
        j["lambda_extra"] = ref.lambda_extra;
        j["lambda_finest"] = ref.lambda_finest;
        j["n_interior"] = extended.mesh(ref_level).n_interior;
        j["u_ref"] = std::vector<double>(ref.u_ref.coeffs.begin(), ref.u_ref.coeffs.end());
        write_text_file(cache_path, j.dump());
    }
    return ref;
}

Reference reference_solve(const RunConfig& config) {
    config.validate();
    Hierarchy extended =
        build_uniform_hierarchy(domain_from_name(config.domain), config.base_n, config.levels);
    auto [fine, p] = refine_regular(extended.finest());
    extended.append(std::move(fine), std::move(p));
    return reference_solve(config, extended);
}

AdaptiveResult adaptive_loop(const RunConfig& config) {
    config.validate();
    const ProblemSpec spec = config.problem();
    const MlcOptions options = config.mlc_options();

    AdaptiveResult result;
    result.hierarchy.meshes.push_back(spec.domain == Domain::UnitSquare
                                          ? build_unit_square(config.base_n)
                                          : build_lshape(config.base_n));
    Hierarchy& hier = result.hierarchy;

    const auto t_start = Clock::now();
    EigenPair pair = solve_gpe_direct(hier, 0, spec, options.scf);
    result.work.mh1_time = seconds_since(t_start);
    result.work.composite_dim = hier.mesh(0).n_interior + 1;

    auto record = [&](int iteration, const EigenPair& p, double eta, int marked, int vcycles) {
        AdaptiveRecord r;
        r.iteration = iteration;
        r.n_dofs = hier.mesh(iteration).n_interior;
        r.h_max = hier.mesh(iteration).max_diameter();
        r.lambda = p.lambda;
        r.eta = eta;
        r.scf_iters = p.scf_iters;
        r.vcycles = vcycles;
        r.marked = marked;
        result.records.push_back(r);
        result.pairs.push_back(p);
    };

    for (int iter = 0; iter < config.adaptive_iters; ++iter) {
        const ZzIndicators est = zz_estimate(hier.mesh(iter), pair.u);
        const std::vector<int> marked = dorfler_mark(est, config.dorfler_theta);
        record(iter, pair, est.total, static_cast<int>(marked.size()),
               iter == 0 ? 0 : result.work.levels.back().vcycles);

        auto [fine, p] = bisect_marked(hier.mesh(iter), marked);
        hier.append(std::move(fine), std::move(p));

        WorkReport::Level stats;
        pair = one_correction_step(hier, spec, iter + 1, pair.lambda, pair.u, options, &stats);
        result.work.levels.push_back(stats);
        result.work.mh_proxy += static_cast<double>(stats.scf_iters) *
                                std::pow(static_cast<double>(result.work.composite_dim), 3);
    }
    const ZzIndicators est = zz_estimate(hier.finest(), pair.u);
    record(config.adaptive_iters, pair, est.total, 0,
           result.work.levels.empty() ? 0 : result.work.levels.back().vcycles);
    result.work.total_time = seconds_since(t_start);
    return result;
}

NondimResult nondimensionalize(const PhysicalParams& params) {
    if (!(params.mass > 0.0)) {
        throw std::invalid_argument("nondimensionalize: mass must be positive");
    }
    if (!(params.hbar > 0.0)) {
        throw std::invalid_argument("nondimensionalize: hbar must be positive");
    }
    if (params.n_atoms < 1.0) {
        throw std::invalid_argument("nondimensionalize: particle count must be >= 1");
    }
    if (params.scattering_length < 0.0) {
        throw std::invalid_argument("nondimensionalize: repulsive interaction required (a >= 0)");
    }
    const double scale = 2.0 * params.mass / (params.hbar * params.hbar);
    NondimResult out;
    out.spec.domain = domain_from_name(params.domain);
    out.spec.gamma1 = scale * params.trap_c1;
    out.spec.gamma2 = scale * params.trap_c2;
    out.spec.zeta = 8.0 * M_PI * params.scattering_length * params.n_atoms;
    out.lambda_to_mu = 1.0 / scale;
    return out;
}

namespace {

std::string uniform_csv(const std::vector<LevelRecord>& rows) {
    std::ostringstream out;
    out << "level,n_dofs,h_max,lambda_mlc,err_mlc,order_mlc,h1_err_mlc,l2_err_mlc,scf_mlc,"
           "vcycles_mlc,lambda_direct,err_direct,order_direct,h1_err_direct,l2_err_direct,"
           "scf_direct\n";
    for (const LevelRecord& r : rows) {
        out << r.level << ',' << r.n_dofs << ',' << csv_num(r.h_max) << ','
            << csv_opt(r.lambda_mlc) << ',' << csv_opt(r.err_mlc) << ',' << csv_opt(r.order_mlc)
            << ',' << csv_opt(r.h1_mlc) << ',' << csv_opt(r.l2_mlc) << ',' << csv_opt(r.scf_mlc)
            << ',' << csv_opt(r.vcycles_mlc) << ',' << csv_opt(r.lambda_direct) << ','
            << csv_opt(r.err_direct) << ',' << csv_opt(r.order_direct) << ','
            << csv_opt(r.h1_direct) << ',' << csv_opt(r.l2_direct) << ',' << csv_opt(r.scf_direct)
            << '\n';
    }
    return out.str();
}

std::string adaptive_csv(const std::vector<AdaptiveRecord>& rows) {
    std::ostringstream out;
    out << "iteration,n_dofs,h_max,lambda,eta,err_lambda,scf_iters,vcycles,marked\n";
    for (const AdaptiveRecord& r : rows) {
        out << r.iteration << ',' << r.n_dofs << ',' << csv_num(r.h_max) << ','
            << csv_num(r.lambda) << ',' << csv_num(r.eta) << ',' << csv_opt(r.err_lambda) << ','
            << r.scf_iters << ',' << r.vcycles << ',' << r.marked << '\n';
    }
    return out.str();
}

json work_json(const WorkReport& work) {
    json levels = json::array();
    for (const auto& l : work.levels) {
        levels.push_back(json{{"level", l.level},
                              {"n_dofs", l.n_dofs},
                              {"vcycles", l.vcycles},
                              {"scf_iters", l.scf_iters},
                              {"scf_converged", l.scf_converged},
                              {"sign_mixed", l.sign_mixed},
                              {"mg_rel_tol", l.mg_rel_tol}});
    }
    return json{{"composite_dim", work.composite_dim},
                {"mh_proxy", work.mh_proxy},
                {"levels", levels}};
}

json timing_json(const WorkReport& work, const std::vector<double>& direct_times) {
    json levels = json::array();
    for (const auto& l : work.levels) {
        levels.push_back(json{{"level", l.level},
                              {"t_aux", l.t_aux},
                              {"t_space", l.t_space},
                              {"t_eigen", l.t_eigen},
                              {"t_total", l.t_total}});
    }
    return json{{"total", work.total_time},
                {"mh1", work.mh1_time},
                {"levels", levels},
                {"direct_levels", direct_times}};
}

} // namespace

RunResult run(const RunConfig& config) {
    config.validate();
    const ProblemSpec spec = config.problem();
    const RunMode mode = config.run_mode();
    std::filesystem::create_directories(config.out_dir);

    RunResult result;
    json report;
    report["schema_version"] = 1;
    report["config"] = config_json(config);
    report["mode"] = config.mode;
    std::vector<double> direct_times;

    if (mode == RunMode::Adaptive) {
        AdaptiveResult a = adaptive_loop(config);
        std::optional<double> lambda_ref;
        if (config.reference_mode == "file") {
            std::ifstream in(config.reference_file);
            if (!in) {
                throw ConfigError("reference_file", "cannot open " + config.reference_file);
            }
            json j;
            in >> j;
            lambda_ref = j.at("lambda_ref").get<double>();
        } else {
            // one regular refinement of the final adaptive mesh keeps the
            // family nested, so errors against it stay positive
            Hierarchy extended = a.hierarchy;
            auto [fine, p] = refine_regular(extended.finest());
            extended.append(std::move(fine), std::move(p));
            const int ref_level = extended.levels() - 1;
            const FeFunction warm{
                extended.mesh(ref_level).level_id,
                extended.composite_interior_map(ref_level - 1, ref_level)
                    .apply(a.pairs.back().u.coeffs)};
            const EigenPair ref =
                solve_gpe_direct(extended, ref_level, spec, config.scf(), warm);
            lambda_ref = ref.lambda;
        }
        for (AdaptiveRecord& r : a.records) {
            if (lambda_ref) {
                r.err_lambda = std::abs(r.lambda - *lambda_ref);
            }
        }
        for (int level = 0; level < a.hierarchy.levels(); ++level) {
            char name[32];
            std::snprintf(name, sizeof(name), "mesh_%03d.txt", level);
            write_mesh(a.hierarchy.mesh(level), config.out_dir + "/" + name);
        }
        result.adaptive = a.records;
        result.work = a.work;
        result.lambda_ref = lambda_ref;
        for (const EigenPair& p : a.pairs) {
            if (!p.converged) {
                result.exit_code = 1;
                result.diagnostics.push_back("non-converged SCF in adaptive iteration");
            }
        }

        json iterations = json::array();
        for (const AdaptiveRecord& r : a.records) {
            iterations.push_back(json{{"iteration", r.iteration},
                                      {"n_dofs", r.n_dofs},
                                      {"h_max", r.h_max},
                                      {"lambda", r.lambda},
                                      {"eta", r.eta},
                                      {"err_lambda", opt_json(r.err_lambda)},
                                      {"scf_iters", r.scf_iters},
                                      {"marked", r.marked}});
        }
        report["iterations"] = iterations;
        report["reference"] = lambda_ref ? json{{"lambda_ref", *lambda_ref}} : json(nullptr);
        report["work"] = work_json(a.work);
        write_text_file(config.out_dir + "/table.csv", adaptive_csv(a.records));
    } else {
        Hierarchy hier = build_uniform_hierarchy(domain_from_name(config.domain), config.base_n,
                                                 config.levels);
        std::optional<Reference> ref;
        std::optional<ErrorTools> tools;
        std::optional<double> lambda_ref;
        Hierarchy extended = hier;
        if (config.reference_mode == "extra-level") {
            auto [fine, p] = refine_regular(extended.finest());
            extended.append(std::move(fine), std::move(p));
            ref = reference_solve(config, extended);
            lambda_ref = ref->lambda_ref;
            tools = ErrorTools{assemble_stiffness(extended.mesh(ref->ref_level)),
                               assemble_mass(extended.mesh(ref->ref_level))};
        } else {
            std::ifstream in(config.reference_file);
            if (!in) {
                throw ConfigError("reference_file", "cannot open " + config.reference_file);
            }
            json j;
            in >> j;
            lambda_ref = j.at("lambda_ref").get<double>();
        }
        result.lambda_ref = lambda_ref;

        std::vector<LevelRecord> rows(config.levels);
        for (int k = 0; k < config.levels; ++k) {
            rows[k].level = k + 1;
            rows[k].n_dofs = hier.mesh(k).n_interior;
            rows[k].h_max = hier.mesh(k).max_diameter();
        }

        if (mode == RunMode::Mlc || mode == RunMode::Both) {
            std::vector<EigenPair> pairs;
            auto [pair, work] = multigrid_scheme(hier, spec, config.mlc_options(), &pairs);
            result.work = work;
            const int base = config.vh_level - 1;
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                const int level = base + static_cast<int>(i);
                LevelRecord& r = rows[level];
                r.lambda_mlc = pairs[i].lambda;
                r.scf_mlc = pairs[i].scf_iters;
                if (lambda_ref) {
                    r.err_mlc = std::abs(pairs[i].lambda - *lambda_ref);
                }
                if (ref && tools) {
                    auto [h1, l2] = function_errors(extended, level, pairs[i].u, *ref, *tools);
                    r.h1_mlc = h1;
                    r.l2_mlc = l2;
                }
                if (!pairs[i].converged) {
                    result.exit_code = 1;
                    result.diagnostics.push_back("non-converged SCF at mlc level " +
                                                 std::to_string(level + 1));
                }
            }
            for (const auto& l : work.levels) {
                if (l.level >= 0 && l.level < config.levels) {
                    rows[l.level].vcycles_mlc = l.vcycles;
                }
            }
        }
        if (mode == RunMode::Direct || mode == RunMode::Both) {
            std::optional<FeFunction> warm;
            for (int k = 0; k < config.levels; ++k) {
                const auto t0 = Clock::now();
                const EigenPair pair = solve_gpe_direct(hier, k, spec, config.scf(), warm);
                direct_times.push_back(seconds_since(t0));
                LevelRecord& r = rows[k];
                r.lambda_direct = pair.lambda;
                r.scf_direct = pair.scf_iters;
                if (lambda_ref) {
                    r.err_direct = std::abs(pair.lambda - *lambda_ref);
                }
                if (ref && tools) {
                    auto [h1, l2] = function_errors(extended, k, pair.u, *ref, *tools);
                    r.h1_direct = h1;
                    r.l2_direct = l2;
                }
                if (!pair.converged) {
                    result.exit_code = 1;
                    result.diagnostics.push_back("non-converged SCF at direct level " +
                                                 std::to_string(k + 1));
                }
                if (k + 1 < config.levels) {
                    warm = FeFunction{hier.mesh(k + 1).level_id,
                                      hier.prolongations[k]
                                          .interior_map(hier.mesh(k), hier.mesh(k + 1))
                                          .apply(pair.u.coeffs)};
                }
            }
        }

        // observed orders between consecutive uniform levels
        auto fill_orders = [](std::vector<LevelRecord>& rs, auto err_member, auto order_member) {
            for (std::size_t k = 1; k < rs.size(); ++k) {
                const auto& prev = rs[k - 1].*err_member;
                const auto& cur = rs[k].*err_member;
                if (prev && cur && *prev > 0.0 && *cur > 0.0) {
                    rs[k].*order_member = std::log2(*prev / *cur);
                }
            }
        };
        fill_orders(rows, &LevelRecord::err_mlc, &LevelRecord::order_mlc);
        fill_orders(rows, &LevelRecord::err_direct, &LevelRecord::order_direct);

        result.table = rows;
        json levels = json::array();
        for (const LevelRecord& r : rows) {
            levels.push_back(json{{"level", r.level},
                                  {"n_dofs", r.n_dofs},
                                  {"h_max", r.h_max},
                                  {"lambda_mlc", opt_json(r.lambda_mlc)},
                                  {"err_mlc", opt_json(r.err_mlc)},
                                  {"order_mlc", opt_json(r.order_mlc)},
                                  {"h1_err_mlc", opt_json(r.h1_mlc)},
                                  {"l2_err_mlc", opt_json(r.l2_mlc)},
                                  {"scf_mlc", opt_json(r.scf_mlc)},
                                  {"lambda_direct", opt_json(r.lambda_direct)},
                                  {"err_direct", opt_json(r.err_direct)},
                                  {"order_direct", opt_json(r.order_direct)},
                                  {"h1_err_direct", opt_json(r.h1_direct)},
                                  {"l2_err_direct", opt_json(r.l2_direct)},
                                  {"scf_direct", opt_json(r.scf_direct)}});
        }
        report["levels"] = levels;
        report["reference"] =
            ref ? json{{"lambda_ref", ref->lambda_ref},
                       {"lambda_extra", ref->lambda_extra},
                       {"lambda_finest", ref->lambda_finest},
                       {"from_cache", ref->from_cache}}
                : (lambda_ref ? json{{"lambda_ref", *lambda_ref}} : json(nullptr));
        report["work"] = work_json(result.work);
        write_text_file(config.out_dir + "/table.csv", uniform_csv(rows));
    }

    report["diagnostics"] = result.diagnostics;
    report["timings"] = timing_json(result.work, direct_times);
    report["timestamp"] = iso_timestamp();
    write_text_file(config.out_dir + "/report.json", report.dump(2) + "\n");
    return result;
}

} // namespace gpe
