#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include "errors.hpp"

namespace amc {

using cplx = std::complex<double>;

/// Dense row-major matrix. Sizes in this project stay small (expanded forms
/// are at most 2M x 2M = 256 x 256), so there is no sparsity or blocking.
template <typename T>
class Mat {
  public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    Mat& operator+=(const Mat& o) {
        if (!same_shape(o)) throw invalid_input("matrix add: shape mismatch");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        if (!same_shape(o)) throw invalid_input("matrix sub: shape mismatch");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Mat& operator*=(T s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend Mat operator+(Mat a, const Mat& b) { return a += b; }
    friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
    friend Mat operator*(Mat a, T s) { return a *= s; }
    friend Mat operator*(T s, Mat a) { return a *= s; }

    friend Mat operator*(const Mat& a, const Mat& b) {
        if (a.cols_ != b.rows_) throw invalid_input("matrix mul: inner dimension mismatch");
        Mat c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const T aik = a(i, k);
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    Mat transposed() const {
        Mat t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

using RMat = Mat<double>;
using CMat = Mat<cplx>;
using RVec = std::vector<double>;

inline bool all_finite(const RMat& a) {
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (!std::isfinite(a(i, j))) return false;
    return true;
}

inline bool all_finite(const CMat& a) {
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag())) return false;
    return true;
}

/// Conjugate transpose.
inline CMat hermitian(const CMat& a) {
    CMat t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = std::conj(a(i, j));
    return t;
}

/// Gram matrix Z = H H^H. Hermitian positive semidefinite; positive definite
/// when H has full row rank (the M >= K massive-MIMO regime).
inline CMat gram(const CMat& h) {
    if (h.rows() == 0 || h.cols() == 0) throw invalid_input("gram: empty matrix");
    if (h.cols() < h.rows()) throw invalid_input("gram: expected K <= M (wide matrix)");
    const std::size_t k = h.rows(), m = h.cols();
    CMat z(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            cplx acc{};
            for (std::size_t t = 0; t < m; ++t) acc += h(i, t) * std::conj(h(j, t));
            z(i, j) = acc;
            z(j, i) = std::conj(acc);
        }
    // Force an exactly real diagonal; roundoff leaves ~1e-16 imaginary dust.
    for (std::size_t i = 0; i < k; ++i) z(i, i) = cplx(z(i, i).real(), 0.0);
    return z;
}

/// Real block expansion [[Re, -Im], [Im, Re]] of a complex p x q matrix.
inline RMat expand_matrix(const CMat& a) {
    if (!all_finite(a)) throw invalid_input("expand_matrix: non-finite entry");
    const std::size_t p = a.rows(), q = a.cols();
    RMat e(2 * p, 2 * q);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < q; ++j) {
            const double re = a(i, j).real(), im = a(i, j).imag();
            e(i, j) = re;
            e(i, q + j) = -im;
            e(p + i, j) = im;
            e(p + i, q + j) = re;
        }
    return e;
}

/// Stack [Re(v); Im(v)] of a complex vector.
inline RVec expand_vector(const std::vector<cplx>& v) {
    RVec e(2 * v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        e[i] = v[i].real();
        e[v.size() + i] = v[i].imag();
    }
    return e;
}

/// Inverse of expand_vector; length must be even.
inline std::vector<cplx> collapse_vector(const RVec& e) {
    if (e.size() % 2 != 0) throw invalid_input("collapse_vector: odd length");
    const std::size_t p = e.size() / 2;
    std::vector<cplx> v(p);
    for (std::size_t i = 0; i < p; ++i) v[i] = cplx(e[i], e[p + i]);
    return v;
}

inline double norm2(const RVec& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double norm2(const std::vector<cplx>& v) {
    double s = 0;
    for (const cplx& x : v) s += std::norm(x);
    return std::sqrt(s);
}

inline double norm_inf(const RVec& v) {
    double s = 0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

/// Row-sum norm of a matrix (||A||_inf).
inline double norm_inf(const RMat& a) {
    double best = 0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double row = 0;
        for (std::size_t j = 0; j < a.cols(); ++j) row += std::abs(a(i, j));
        best = std::max(best, row);
    }
    return best;
}

/// y = A x for real dense A.
inline RVec matvec(const RMat& a, const RVec& x) {
    if (a.cols() != x.size()) throw invalid_input("matvec: dimension mismatch");
    RVec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0;
        for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
        y[i] = acc;
    }
    return y;
}

/// y = A x for complex dense A.
inline std::vector<cplx> matvec(const CMat& a, const std::vector<cplx>& x) {
    if (a.cols() != x.size()) throw invalid_input("matvec: dimension mismatch");
    std::vector<cplx> y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        cplx acc{};
        for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
        y[i] = acc;
    }
    return y;
}

namespace detail {

/// LU factorization with partial pivoting, in place. Returns the pivot row
/// permutation. Throws singular_matrix when a pivot falls below
/// 1e-13 * max|A| (singular to working precision).
inline std::vector<std::size_t> lu_factor(RMat& a) {
    const std::size_t n = a.rows();
    std::vector<std::size_t> perm(n);
    double amax = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) amax = std::max(amax, std::abs(a(i, j)));
    const double tiny = (amax > 0 ? amax : 1.0) * 1e-13;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(a(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(a(r, col));
            if (v > best) { best = v; piv = r; }
        }
        if (best <= tiny) throw singular_matrix("solve_dense: singular to working precision");
        if (piv != col)
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
        perm[col] = piv;
        const double d = a(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / d;
            a(r, col) = f;
            for (std::size_t j = col + 1; j < n; ++j) a(r, j) -= f * a(col, j);
        }
    }
    return perm;
}

inline void lu_solve(const RMat& lu, const std::vector<std::size_t>& perm, RVec& b) {
    const std::size_t n = lu.rows();
    for (std::size_t i = 0; i < n; ++i)
        if (perm[i] != i) std::swap(b[i], b[perm[i]]);
    for (std::size_t i = 1; i < n; ++i) {
        double acc = b[i];
        for (std::size_t j = 0; j < i; ++j) acc -= lu(i, j) * b[j];
        b[i] = acc;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double acc = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) acc -= lu(ii, j) * b[j];
        b[ii] = acc / lu(ii, ii);
    }
}

} // namespace detail

/// Factored dense system, reusable across many right-hand sides.
class DenseSolver {
  public:
    explicit DenseSolver(RMat a) : lu_(std::move(a)) {
        if (lu_.rows() != lu_.cols()) throw invalid_input("solve_dense: matrix not square");
        if (!all_finite(lu_)) throw invalid_input("solve_dense: non-finite entry");
        perm_ = detail::lu_factor(lu_);
    }

    RVec solve(RVec b) const {
        if (b.size() != lu_.rows()) throw invalid_input("solve_dense: rhs length mismatch");
        detail::lu_solve(lu_, perm_, b);
        return b;
    }

  private:
    RMat lu_;
    std::vector<std::size_t> perm_;
};

/// Solve A x = b. Guarantees ||Ax - b||_inf <= 1e-9 (||A||_inf ||x||_inf + ||b||_inf)
/// for numerically nonsingular systems.
inline RVec solve_dense(const RMat& a, const RVec& b) {
    return DenseSolver(a).solve(b);
}

/// Smallest eigenvalue of a symmetric matrix. The input is symmetrized as
/// (A + A^T)/2 first. Bisection on the Gershgorin interval, with Cholesky
/// success on A - sigma*I as the "sigma below the spectrum" predicate; the
/// bracket shrinks until it stalls at floating-point resolution.
inline double min_eigenvalue_sym(const RMat& a_in) {
    if (a_in.rows() != a_in.cols()) throw invalid_input("min_eigenvalue_sym: not square");
    if (!all_finite(a_in)) throw invalid_input("min_eigenvalue_sym: non-finite entry");
    const std::size_t n = a_in.rows();
    if (n == 0) throw invalid_input("min_eigenvalue_sym: empty matrix");

    RMat a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (a_in(i, j) + a_in(j, i));
    if (n == 1) return a(0, 0);

    double scale = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
    if (scale == 0) return 0.0;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double off = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) off += std::abs(a(i, j));
        lo = std::min(lo, a(i, i) - off);
        hi = std::max(hi, a(i, i) + off);
    }

    // True iff a - sigma*I admits a Cholesky factorization, i.e. sigma < lambda_min.
    const auto below_spectrum = [&](double sigma) {
        RMat c(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = j; i < n; ++i) {
                double v = a(i, j) - (i == j ? sigma : 0.0);
                for (std::size_t k = 0; k < j; ++k) v -= c(i, k) * c(j, k);
                if (i == j) {
                    if (!(v > 0) || !std::isfinite(v)) return false;
                    c(j, j) = std::sqrt(v);
                } else {
                    c(i, j) = v / c(j, j);
                }
            }
        }
        return true;
    };

    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo) || !(mid < hi)) break;
        if (below_spectrum(mid))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace amc
