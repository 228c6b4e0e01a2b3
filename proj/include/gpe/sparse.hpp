#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gpe {

using Vector = Eigen::VectorXd;

/// Compressed-row symmetric sparse matrix over the dofs of one level.
/// Assembled once and immutable afterwards; safe to share across threads.
class SparseMatrix {
public:
    struct Triplet {
        int row;
        int col;
        double value;
    };

    SparseMatrix() = default;

    static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
    static SparseMatrix identity(int n);
    static SparseMatrix from_dense(const Eigen::MatrixXd& dense, double drop_tol = 0.0);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int nnz() const { return static_cast<int>(values_.size()); }

    void apply(const Vector& x, Vector& y) const;
    Vector apply(const Vector& x) const;

    /// y = A^T x (used to move residuals down a prolongation).
    Vector apply_transpose(const Vector& x) const;

    double coeff(int row, int col) const;
    double max_abs() const;

    /// max_ij |A_ij - A_ji|; zero for exactly symmetric assembly.
    double symmetry_gap() const;

    Eigen::MatrixXd dense() const;

    /// Debug dump, coordinate format "i j value" sorted by (i, j).
    std::string to_coordinate_text() const;

    /// B = P^T * A * P with A = *this (rows == cols == P.rows()).
    SparseMatrix congruence(const SparseMatrix& p) const;

    /// C = (*this) * B.
    SparseMatrix multiply(const SparseMatrix& b) const;

    SparseMatrix scaled(double factor) const;
    SparseMatrix plus(const SparseMatrix& other) const;

    // Row access for smoothers and traversals.
    int row_begin(int row) const { return row_ptr_[row]; }
    int row_end(int row) const { return row_ptr_[row + 1]; }
    int col_index(int k) const { return col_idx_[k]; }
    double value(int k) const { return values_[k]; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

} // namespace gpe
