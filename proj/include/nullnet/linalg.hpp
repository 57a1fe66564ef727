#pragma once

// Dense double-precision matrices and vectors, numerical rank via
// column-pivoted Householder QR, orthonormal null-space bases, and
// orthogonal row-space projectors. Everything here is a pure function
// on immutable inputs; storage is row-major.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace nullnet {

using Vector = std::vector<double>;

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, rows*cols entries

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(m.data); }

inline void require_finite(const Matrix& m, const char* what) {
    if (!all_finite(m)) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: dimension mismatch");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[i * a.cols];
        double* crow = &c.data[i * b.cols];
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = &b.data[k * b.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

inline Vector matvec(const Matrix& a, const Vector& x) {
    if (a.cols != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    Vector y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* row = &a.data[i * a.cols];
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
    return y;
}

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

inline double inf_norm(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (double x : m.data) acc += x * x;
    return std::sqrt(acc);
}

inline double max_abs(const Matrix& m) {
    double r = 0.0;
    for (double x : m.data) r = std::max(r, std::abs(x));
    return r;
}

inline Vector add(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("add: dimension mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vector sub(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("sub: dimension mismatch");
    Vector r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vector scaled(const Vector& v, double a) {
    Vector r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = a * v[i];
    return r;
}

/// Orthonormal set of vectors spanning a subspace of R^ambient_dim.
struct OrthonormalBasis {
    std::size_t ambient_dim = 0;
    std::vector<Vector> vectors;

    std::size_t size() const { return vectors.size(); }
    bool empty() const { return vectors.empty(); }
};

/// Default rank tolerance: max(rows, cols) * machine epsilon * largest column norm.
inline double default_rank_tol(const Matrix& m) {
    double max_col = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) acc += m(i, j) * m(i, j);
        max_col = std::max(max_col, std::sqrt(acc));
    }
    return static_cast<double>(std::max(m.rows, m.cols)) *
           std::numeric_limits<double>::epsilon() * max_col;
}

namespace detail {

// Column-pivoted Householder QR, LINPACK-style norm downdating with a
// recompute guard against cancellation. Reflectors are stored below the
// diagonal of the column-major working array; |R_kk| magnitudes go to
// rdiag. With pivoting the |R_kk| sequence is non-increasing, so the
// numerical rank is the leading run of diagonals above the tolerance.
class PivotedQr {
public:
    explicit PivotedQr(const Matrix& m)
        : rows_(m.rows), cols_(m.cols), steps_(std::min(m.rows, m.cols)),
          a_(m.rows * m.cols), tau_(steps_, 0.0), rdiag_(steps_, 0.0), perm_(m.cols) {
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) a_[j * rows_ + i] = m(i, j);
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        factor();
    }

    std::size_t rank(double tol) const {
        std::size_t r = 0;
        while (r < steps_ && rdiag_[r] > tol) ++r;
        return r;
    }

    // Column j of the full rows_ x rows_ orthogonal factor Q.
    Vector q_column(std::size_t j) const {
        Vector q(rows_, 0.0);
        q[j] = 1.0;
        // Reflectors with index > j act as the identity on e_j.
        std::size_t k = std::min(steps_, j + 1);
        while (k-- > 0) {
            if (tau_[k] == 0.0) continue;
            const double* v = &a_[k * rows_];
            double w = q[k];
            for (std::size_t i = k + 1; i < rows_; ++i) w += v[i] * q[i];
            w *= tau_[k];
            q[k] -= w;
            for (std::size_t i = k + 1; i < rows_; ++i) q[i] -= w * v[i];
        }
        return q;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

private:
    void factor() {
        std::vector<double> cnorm(cols_), cnorm_ref(cols_);
        for (std::size_t j = 0; j < cols_; ++j) {
            cnorm[j] = column_norm(j, 0);
            cnorm_ref[j] = cnorm[j];
        }
        for (std::size_t k = 0; k < steps_; ++k) {
            std::size_t piv = k;
            for (std::size_t j = k + 1; j < cols_; ++j)
                if (cnorm[j] > cnorm[piv]) piv = j;
            if (piv != k) {
                for (std::size_t i = 0; i < rows_; ++i)
                    std::swap(a_[k * rows_ + i], a_[piv * rows_ + i]);
                std::swap(cnorm[k], cnorm[piv]);
                std::swap(cnorm_ref[k], cnorm_ref[piv]);
                std::swap(perm_[k], perm_[piv]);
            }

            double* colk = &a_[k * rows_];
            const double x0 = colk[k];
            double sigma2 = 0.0;
            for (std::size_t i = k + 1; i < rows_; ++i) sigma2 += colk[i] * colk[i];

            if (sigma2 == 0.0) {
                tau_[k] = 0.0;
                rdiag_[k] = std::abs(x0);
            } else {
                const double norm = std::sqrt(x0 * x0 + sigma2);
                const double beta = (x0 >= 0.0) ? -norm : norm;
                tau_[k] = (beta - x0) / beta;
                const double inv = 1.0 / (x0 - beta);
                for (std::size_t i = k + 1; i < rows_; ++i) colk[i] *= inv;
                colk[k] = beta;
                rdiag_[k] = std::abs(beta);

                for (std::size_t j = k + 1; j < cols_; ++j) {
                    double* colj = &a_[j * rows_];
                    double w = colj[k];
                    for (std::size_t i = k + 1; i < rows_; ++i) w += colk[i] * colj[i];
                    w *= tau_[k];
                    colj[k] -= w;
                    for (std::size_t i = k + 1; i < rows_; ++i) colj[i] -= w * colk[i];
                }
            }

            for (std::size_t j = k + 1; j < cols_; ++j) {
                if (cnorm[j] == 0.0) continue;
                const double t = a_[j * rows_ + k] / cnorm[j];
                double t2 = 1.0 - t * t;
                if (t2 < 0.0) t2 = 0.0;
                const double ratio = cnorm[j] / cnorm_ref[j];
                if (t2 * ratio * ratio <= 1e-14) {
                    cnorm[j] = column_norm(j, k + 1);
                    cnorm_ref[j] = cnorm[j];
                } else {
                    cnorm[j] *= std::sqrt(t2);
                }
            }
        }
    }

    double column_norm(std::size_t j, std::size_t from) const {
        double acc = 0.0;
        const double* col = &a_[j * rows_];
        for (std::size_t i = from; i < rows_; ++i) acc += col[i] * col[i];
        return std::sqrt(acc);
    }

    std::size_t rows_, cols_, steps_;
    std::vector<double> a_;      // column-major working copy
    std::vector<double> tau_;
    std::vector<double> rdiag_;  // |R_kk|
    std::vector<std::size_t> perm_;
};

}  // namespace detail

/// Numerical rank at the given tolerance (pass a negative tol for the default).
inline std::size_t rank(const Matrix& m, double tol = -1.0) {
    require_finite(m, "rank");
    if (tol < 0.0) tol = default_rank_tol(m);
    return detail::PivotedQr(m).rank(tol);
}

/// Orthonormal basis of {v : Mv = 0}, extracted from the trailing columns of
/// the Q factor of M^T. Basis size is cols(M) - rank at the tolerance.
inline OrthonormalBasis null_basis(const Matrix& m, double tol = -1.0) {
    require_finite(m, "null_basis");
    if (tol < 0.0) tol = default_rank_tol(m);
    detail::PivotedQr qr(transpose(m));
    const std::size_t r = qr.rank(tol);
    OrthonormalBasis basis;
    basis.ambient_dim = m.cols;
    basis.vectors.reserve(m.cols - r);
    for (std::size_t j = r; j < m.cols; ++j) basis.vectors.push_back(qr.q_column(j));
    return basis;
}

/// Symmetric idempotent projector P (cols x cols) onto the row space of M.
/// The complementary null-space projector is I - P.
inline Matrix row_space_projector(const Matrix& m, double tol = -1.0) {
    require_finite(m, "row_space_projector");
    if (tol < 0.0) tol = default_rank_tol(m);
    detail::PivotedQr qr(transpose(m));
    const std::size_t r = qr.rank(tol);
    const std::size_t n = m.cols;
    Matrix p(n, n);
    for (std::size_t k = 0; k < r; ++k) {
        const Vector q = qr.q_column(k);
        for (std::size_t i = 0; i < n; ++i) {
            const double qi = q[i];
            for (std::size_t j = i; j < n; ++j) p(i, j) += qi * q[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) p(i, j) = p(j, i);
    return p;
}

/// Apply a square projector (or any square matrix) to a vector.
inline Vector project(const Matrix& p, const Vector& x) {
    if (p.rows != p.cols) throw std::invalid_argument("project: matrix must be square");
    if (p.cols != x.size()) throw std::invalid_argument("project: dimension mismatch");
    return matvec(p, x);
}

}  // namespace nullnet
