#pragma once

// Shared test utilities: Eigen conversions for oracle comparisons, random
// problem generators driven by the library's own streams, and small stats.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include <amc/channel.hpp>
#include <amc/modem.hpp>
#include <amc/numerics.hpp>
#include <amc/rng.hpp>

namespace testutil {

inline Eigen::MatrixXd to_eigen(const amc::RMat& a) {
    Eigen::MatrixXd m(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = a(i, j);
    return m;
}

inline Eigen::MatrixXcd to_eigen(const amc::CMat& a) {
    Eigen::MatrixXcd m(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = a(i, j);
    return m;
}

inline Eigen::VectorXd to_eigen(const amc::RVec& v) {
    Eigen::VectorXd e(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) e(Eigen::Index(i)) = v[i];
    return e;
}

inline Eigen::VectorXcd to_eigen(const std::vector<amc::cplx>& v) {
    Eigen::VectorXcd e(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) e(Eigen::Index(i)) = v[i];
    return e;
}

inline amc::RMat from_eigen(const Eigen::MatrixXd& m) {
    amc::RMat a(std::size_t(m.rows()), std::size_t(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) a(std::size_t(i), std::size_t(j)) = m(i, j);
    return a;
}

inline amc::RVec from_eigen(const Eigen::VectorXd& v) {
    amc::RVec a(std::size_t(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) a[std::size_t(i)] = v(i);
    return a;
}

// Random inputs derived from library streams so every test run is identical.

inline amc::RMat random_rmat(std::size_t rows, std::size_t cols, amc::rng::Stream& s) {
    amc::RMat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = s.normal();
    return m;
}

inline amc::CMat random_cmat(std::size_t rows, std::size_t cols, amc::rng::Stream& s) {
    amc::CMat m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = amc::cplx(s.normal(), s.normal());
    return m;
}

inline amc::RVec random_rvec(std::size_t n, amc::rng::Stream& s) {
    amc::RVec v(n);
    for (auto& x : v) x = s.normal();
    return v;
}

inline std::vector<amc::cplx> random_cvec(std::size_t n, amc::rng::Stream& s) {
    std::vector<amc::cplx> v(n);
    for (auto& x : v) x = amc::cplx(s.normal(), s.normal());
    return v;
}

// Symmetric positive definite test matrix A = B B^T + eps I.
inline amc::RMat random_spd(std::size_t n, amc::rng::Stream& s, double eps = 0.1) {
    amc::RMat b = random_rmat(n, n, s);
    amc::RMat a = b * b.transposed();
    for (std::size_t i = 0; i < n; ++i) a(i, i) += eps;
    return a;
}

// Random 16-QAM symbol vector from a fair-bit stream.
inline std::vector<amc::cplx> random_symbols(std::size_t k, amc::rng::Stream& s,
                                             const amc::modem::ModemConfig& mc = {}) {
    std::vector<std::uint8_t> bits(4 * k);
    for (auto& b : bits) b = std::uint8_t(s.below(2));
    return amc::modem::qam16_modulate(bits, mc);
}

inline double rel_err(const std::vector<amc::cplx>& got, const std::vector<amc::cplx>& want) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        num += std::norm(got[i] - want[i]);
        den += std::norm(want[i]);
    }
    return std::sqrt(num) / std::sqrt(den);
}

inline double rel_err(const amc::RVec& got, const amc::RVec& want) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        num += (got[i] - want[i]) * (got[i] - want[i]);
        den += want[i] * want[i];
    }
    return std::sqrt(num) / std::sqrt(den);
}

inline double max_abs_diff(const amc::RMat& a, const amc::RMat& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
    return d;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Spearman rank correlation; ranks ties by average is unnecessary here
// because the inputs are continuous-valued.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    auto ranks = [n](const std::vector<double>& v) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[idx[i]] = double(i);
        return r;
    };
    const std::vector<double> rx = ranks(x), ry = ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

} // namespace testutil
