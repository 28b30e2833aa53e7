#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "circuits.hpp"
#include "crossbar.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "rng.hpp"

namespace amc::precoder {

struct Diagnostics {
    bool inv_saturated = false;
    bool mvm_saturated = false;
    std::size_t clip_count_inv = 0;
    std::size_t clip_count_mvm = 0;
    std::optional<double> inv_settled_ns;
    std::optional<double> mvm_settled_ns;
    /// Static mode is always converged; transient mode requires both stages
    /// to have settled within their windows.
    bool converged = true;
};

/// Normalized transmit vector. alpha is the pre-normalization L2 norm, known
/// at the receiver (genie-aided scalar equalization).
struct PrecodeResult {
    std::vector<cplx> x;
    double alpha = 0.0;
    Diagnostics diag;
};

namespace detail {

inline PrecodeResult normalize(std::vector<cplx> x_raw) {
    PrecodeResult r;
    r.alpha = norm2(x_raw);
    if (!(r.alpha > 0.0)) throw invalid_input("precoder: zero transmit vector cannot be normalized");
    for (auto& v : x_raw) v /= r.alpha;
    r.x = std::move(x_raw);
    return r;
}

inline void check_dims(const CMat& h, const std::vector<cplx>& s, const char* who) {
    if (h.rows() == 0 || h.cols() < h.rows())
        throw invalid_input(std::string(who) + ": H must be K x M with M >= K >= 1");
    if (s.size() != h.rows()) throw invalid_input(std::string(who) + ": s length must equal K");
    if (!all_finite(h)) throw invalid_input(std::string(who) + ": non-finite channel entry");
}

} // namespace detail

/// Exact zero-forcing: x = H^H (H H^H)^-1 s / alpha. The Gram system is
/// solved in the expanded real form, the same arithmetic the analog path
/// emulates, so the two paths are comparable entry by entry.
inline PrecodeResult zf_digital(const CMat& h, const std::vector<cplx>& s) {
    detail::check_dims(h, s, "zf_digital");
    const CMat z = gram(h);
    const RVec y_exp = solve_dense(expand_matrix(z), expand_vector(s));
    const std::vector<cplx> y = collapse_vector(y_exp);
    return detail::normalize(matvec(hermitian(h), y));
}

enum class AmcMode { static_mode, transient };

/// Full analog run with the programs and waveforms exposed, for diagnostics
/// and power accounting.
struct AmcRun {
    crossbar::CrossbarProgram p_inv;
    crossbar::CrossbarProgram p_mvm;
    circuits::PipelineResult pipe;
    PrecodeResult result;
};

inline AmcRun run_amc(const CMat& h, const std::vector<cplx>& s,
                      const circuits::AnalogConfig& cfg, AmcMode mode, rng::Stream& prog_stream) {
    detail::check_dims(h, s, "zf_amc");
    AmcRun run;
    const CMat z = gram(h);
    run.p_inv = crossbar::map_inv(z, h.cols(), cfg.device, prog_stream, cfg.g_unit_inv);
    run.p_mvm = crossbar::map_mvm(h, cfg.device, prog_stream, cfg.g_unit_mvm);
    run.pipe = circuits::run_pipeline(run.p_inv, run.p_mvm, expand_vector(s), cfg,
                                      mode == AmcMode::transient);

    run.result = detail::normalize(collapse_vector(run.pipe.x));
    Diagnostics& d = run.result.diag;
    d.inv_saturated = run.pipe.inv_saturated;
    d.mvm_saturated = run.pipe.mvm_saturated;
    d.clip_count_inv = run.p_inv.clip_count;
    d.clip_count_mvm = run.p_mvm.clip_count;
    d.inv_settled_ns = run.pipe.inv_settled_ns;
    d.mvm_settled_ns = run.pipe.mvm_settled_ns;
    if (mode == AmcMode::transient)
        d.converged = run.pipe.inv_settled_ns.has_value() && run.pipe.mvm_settled_ns.has_value();
    return run;
}

/// Two-step analog pipeline: INV solves Omega_Z v = scaled s, S&H carries v,
/// MVM applies expand(sigma_H H)^T. Output is normalized like zf_digital.
inline PrecodeResult zf_amc(const CMat& h, const std::vector<cplx>& s,
                            const circuits::AnalogConfig& cfg, AmcMode mode,
                            rng::Stream& prog_stream) {
    return run_amc(h, s, cfg, mode, prog_stream).result;
}

/// Truncated Neumann series for Z^-1 s with the diagonal preconditioner:
/// sum_{k=0}^{n-1} (I - D^-1 Z)^k D^-1 s. Converges when Z is diagonally
/// dominant enough, which massive-MIMO Gram matrices are.
inline PrecodeResult zf_neumann(const CMat& h, const std::vector<cplx>& s, std::size_t n_terms) {
    detail::check_dims(h, s, "zf_neumann");
    if (n_terms == 0) throw invalid_input("zf_neumann: n_terms must be at least 1");
    const CMat z = gram(h);
    const std::size_t k = z.rows();

    RVec inv_diag(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double d = z(i, i).real();
        if (!(d > 0.0)) throw invalid_input("zf_neumann: Gram diagonal must be positive");
        inv_diag[i] = 1.0 / d;
    }

    std::vector<cplx> term(k);
    for (std::size_t i = 0; i < k; ++i) term[i] = inv_diag[i] * s[i];
    std::vector<cplx> y = term;

    const double norm0 = norm2(term);
    double prev_norm = norm0;
    std::size_t growth_streak = 0;
    for (std::size_t t = 1; t < n_terms; ++t) {
        // term <- (I - D^-1 Z) term
        const std::vector<cplx> zt = matvec(z, term);
        for (std::size_t i = 0; i < k; ++i) term[i] -= inv_diag[i] * zt[i];
        const double tn = norm2(term);
        growth_streak = (tn > prev_norm) ? growth_streak + 1 : 0;
        if (growth_streak >= 3 || tn > 1e3 * norm0)
            throw divergence_error("zf_neumann: series terms are growing; Z is not diagonally dominant enough");
        prev_norm = tn;
        for (std::size_t i = 0; i < k; ++i) y[i] += term[i];
    }
    return detail::normalize(matvec(hermitian(h), y));
}

} // namespace amc::precoder
