#include "gpe/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace gpe {

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
    if (rows < 0 || cols < 0) {
        throw std::invalid_argument("SparseMatrix: negative dimension");
    }
    for (const Triplet& t : triplets) {
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
            throw std::invalid_argument("SparseMatrix: triplet index out of range");
        }
    }
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.row_ptr_.assign(rows + 1, 0);
    m.col_idx_.reserve(triplets.size());
    m.values_.reserve(triplets.size());

    std::size_t i = 0;
    for (int r = 0; r < rows; ++r) {
        while (i < triplets.size() && triplets[i].row == r) {
            const int c = triplets[i].col;
            double v = 0.0;
            while (i < triplets.size() && triplets[i].row == r && triplets[i].col == c) {
                v += triplets[i].value;
                ++i;
            }
            if (v != 0.0) {
                m.col_idx_.push_back(c);
                m.values_.push_back(v);
            }
        }
        m.row_ptr_[r + 1] = static_cast<int>(m.col_idx_.size());
    }
    return m;
}

SparseMatrix SparseMatrix::identity(int n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (int i = 0; i < n; ++i) {
        t.push_back({i, i, 1.0});
    }
    return from_triplets(n, n, std::move(t));
}

SparseMatrix SparseMatrix::from_dense(const Eigen::MatrixXd& dense, double drop_tol) {
    std::vector<Triplet> t;
    for (int i = 0; i < dense.rows(); ++i) {
        for (int j = 0; j < dense.cols(); ++j) {
            if (std::abs(dense(i, j)) > drop_tol) {
                t.push_back({i, j, dense(i, j)});
            }
        }
    }
    return from_triplets(static_cast<int>(dense.rows()), static_cast<int>(dense.cols()), std::move(t));
}

void SparseMatrix::apply(const Vector& x, Vector& y) const {
    if (x.size() != cols_) {
        throw std::invalid_argument("SparseMatrix::apply: dimension mismatch");
    }
    y.resize(rows_);
    for (int r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            s += values_[k] * x[col_idx_[k]];
        }
        y[r] = s;
    }
}

Vector SparseMatrix::apply(const Vector& x) const {
    Vector y;
    apply(x, y);
    return y;
}

Vector SparseMatrix::apply_transpose(const Vector& x) const {
    if (x.size() != rows_) {
        throw std::invalid_argument("SparseMatrix::apply_transpose: dimension mismatch");
    }
    Vector y = Vector::Zero(cols_);
    for (int r = 0; r < rows_; ++r) {
        const double xr = x[r];
        if (xr == 0.0) {
            continue;
        }
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            y[col_idx_[k]] += values_[k] * xr;
        }
    }
    return y;
}

double SparseMatrix::coeff(int row, int col) const {
    for (int k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k) {
        if (col_idx_[k] == col) {
            return values_[k];
        }
    }
    return 0.0;
}

double SparseMatrix::max_abs() const {
    double m = 0.0;
    for (double v : values_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

double SparseMatrix::symmetry_gap() const {
    double gap = 0.0;
    for (int r = 0; r < rows_; ++r) {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            gap = std::max(gap, std::abs(values_[k] - coeff(col_idx_[k], r)));
        }
    }
    return gap;
}

Eigen::MatrixXd SparseMatrix::dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows_, cols_);
    for (int r = 0; r < rows_; ++r) {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            d(r, col_idx_[k]) = values_[k];
        }
    }
    return d;
}

std::string SparseMatrix::to_coordinate_text() const {
    std::string out;
    char line[96];
    for (int r = 0; r < rows_; ++r) {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            std::snprintf(line, sizeof(line), "%d %d %.17g\n", r, col_idx_[k], values_[k]);
            out += line;
        }
    }
    return out;
}

SparseMatrix SparseMatrix::congruence(const SparseMatrix& p) const {
    if (rows_ != cols_ || p.rows() != rows_) {
        throw std::invalid_argument("SparseMatrix::congruence: dimension mismatch");
    }
    std::vector<Triplet> t;
    t.reserve(values_.size() * 4);
    for (int i = 0; i < rows_; ++i) {
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const int j = col_idx_[k];
            const double a = values_[k];
            for (int ki = p.row_begin(i); ki < p.row_end(i); ++ki) {
                for (int kj = p.row_begin(j); kj < p.row_end(j); ++kj) {
                    t.push_back({p.col_index(ki), p.col_index(kj),
                                 p.value(ki) * a * p.value(kj)});
                }
            }
        }
    }
    return from_triplets(p.cols(), p.cols(), std::move(t));
}

SparseMatrix SparseMatrix::multiply(const SparseMatrix& b) const {
    if (cols_ != b.rows()) {
        throw std::invalid_argument("SparseMatrix::multiply: dimension mismatch");
    }
    std::vector<Triplet> t;
    for (int r = 0; r < rows_; ++r) {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const int mid = col_idx_[k];
            const double v = values_[k];
            for (int kb = b.row_begin(mid); kb < b.row_end(mid); ++kb) {
                t.push_back({r, b.col_index(kb), v * b.value(kb)});
            }
        }
    }
    return from_triplets(rows_, b.cols(), std::move(t));
}

SparseMatrix SparseMatrix::scaled(double factor) const {
    SparseMatrix m = *this;
    for (double& v : m.values_) {
        v *= factor;
    }
    return m;
}

SparseMatrix SparseMatrix::plus(const SparseMatrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_) {
        throw std::invalid_argument("SparseMatrix::plus: dimension mismatch");
    }
    std::vector<Triplet> t;
    t.reserve(values_.size() + other.values_.size());
    for (int r = 0; r < rows_; ++r) {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            t.push_back({r, col_idx_[k], values_[k]});
        }
        for (int k = other.row_ptr_[r]; k < other.row_ptr_[r + 1]; ++k) {
            t.push_back({r, other.col_idx_[k], other.values_[k]});
        }
    }
    return from_triplets(rows_, cols_, std::move(t));
}

} // namespace gpe
