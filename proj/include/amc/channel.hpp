#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "rng.hpp"

namespace amc::channel {

/// sigma2 = M * rho_T * 10^(-snr_db/10).
inline double noise_sigma2(double snr_db, std::size_t m, double rho_t) {
    if (!(rho_t > 0.0) || !std::isfinite(snr_db) || !std::isfinite(rho_t) || m == 0)
        throw invalid_input("noise_sigma2: rho_T must be positive and inputs finite");
    return double(m) * rho_t * std::pow(10.0, -snr_db / 10.0);
}

/// Downlink dimensions and noise level. sigma2 is stored pre-derived so a
/// hand-edited config with an inconsistent value is caught, not silently used.
struct LinkConfig {
    std::size_t K = 16;
    std::size_t M = 128;
    double rho_t = 1.0;
    double snr_db = 30.0;
    double sigma2 = 0.0;

    void validate() const {
        if (K < 1 || M < K) throw invalid_input("LinkConfig: requires M >= K >= 1");
        if (!(rho_t > 0.0)) throw invalid_input("LinkConfig: rho_T must be positive");
        if (!(sigma2 > 0.0)) throw invalid_input("LinkConfig: sigma2 must be positive");
        const double expect = noise_sigma2(snr_db, M, rho_t);
        if (std::abs(sigma2 - expect) > 1e-9 * std::max(1.0, expect))
            throw invalid_input("LinkConfig: sigma2 inconsistent with snr_db, M, rho_T");
    }
};

inline LinkConfig make_link_config(std::size_t k, std::size_t m, double rho_t, double snr_db) {
    LinkConfig cfg;
    cfg.K = k;
    cfg.M = m;
    cfg.rho_t = rho_t;
    cfg.snr_db = snr_db;
    cfg.sigma2 = noise_sigma2(snr_db, m, rho_t);
    cfg.validate();
    return cfg;
}

/// K x M Rayleigh matrix, entries CN(0,1): Re and Im independent N(0, 1/2).
/// Entries are drawn row-major, real part before imaginary, so the layout is
/// part of the determinism contract.
inline CMat sample_channel(std::size_t k, std::size_t m, rng::Stream& stream) {
    if (k == 0 || m == 0) throw invalid_input("sample_channel: empty dimensions");
    CMat h(k, m);
    const double scale = 1.0 / std::sqrt(2.0);
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < m; ++c) {
            const double re = scale * stream.normal();
            const double im = scale * stream.normal();
            h(r, c) = cplx(re, im);
        }
    return h;
}

/// y = sqrt(rho_T) * H x + n with n_i ~ CN(0, sigma2) i.i.d.
inline std::vector<cplx> transmit(const CMat& h, const std::vector<cplx>& x,
                                  const LinkConfig& cfg, rng::Stream& stream) {
    if (h.cols() != x.size()) throw invalid_input("transmit: H columns must match x length");
    if (h.rows() != cfg.K || h.cols() != cfg.M)
        throw invalid_input("transmit: H shape disagrees with LinkConfig");
    std::vector<cplx> y = matvec(h, x);
    const double amp = std::sqrt(cfg.rho_t);
    const double nscale = std::sqrt(cfg.sigma2 / 2.0);
    for (auto& v : y) {
        const double re = nscale * stream.normal();
        const double im = nscale * stream.normal();
        v = amp * v + cplx(re, im);
    }
    return y;
}

} // namespace amc::channel
