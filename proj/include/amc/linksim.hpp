#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "channel.hpp"
#include "circuits.hpp"
#include "errors.hpp"
#include "modem.hpp"
#include "numerics.hpp"
#include "precoder.hpp"
#include "rng.hpp"

namespace amc::linksim {

enum class Scheme { digital, amc, neumann };

inline std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::digital: return "digital";
        case Scheme::amc: return "amc";
        default: return "neumann";
    }
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "digital") return Scheme::digital;
    if (s == "amc") return Scheme::amc;
    if (s == "neumann") return Scheme::neumann;
    throw invalid_input("unknown scheme: " + s);
}

/// min_errors = 0 disables the error-count stop; max_symbols counts K-symbol
/// vectors attempted per point.
struct SweepStop {
    std::size_t max_symbols = 2'000'000;
    std::size_t min_errors = 100;
};

/// Engine inputs. Streams are derived from master_seed with purpose tags, so
/// H/bits/noise sequences are shared across schemes and SNRs (paired runs).
struct SimSetup {
    std::size_t K = 16;
    std::size_t M = 128;
    double rho_t = 1.0;
    modem::ModemConfig modem;
    circuits::AnalogConfig analog;
    precoder::AmcMode amc_mode = precoder::AmcMode::static_mode;
    std::size_t trials_per_h = 100;
    bool reuse_h = true;
    std::size_t neumann_terms = 3;
    std::uint64_t master_seed = 1;
    std::size_t workers = 0; // 0 picks hardware concurrency

    std::size_t group_size() const { return reuse_h ? std::max<std::size_t>(1, trials_per_h) : 1; }

    void validate() const {
        if (K < 1 || M < K) throw invalid_input("SimSetup: requires M >= K >= 1");
        if (!(rho_t > 0.0)) throw invalid_input("SimSetup: rho_T must be positive");
        if (neumann_terms == 0) throw invalid_input("SimSetup: neumann_terms must be positive");
    }
};

struct TrialRecord {
    std::size_t trial = 0;
    std::vector<std::uint8_t> bits_tx;
    std::vector<std::uint8_t> bits_rx;
    std::vector<cplx> ideal;    // transmitted symbols
    std::vector<cplx> received; // post-equalization
    Scheme scheme = Scheme::digital;
    bool failed = false;
};

struct BerPoint {
    double snr_db = 0.0;
    Scheme scheme = Scheme::digital;
    std::size_t symbols_count = 0; // accumulated K-symbol vectors
    std::size_t bit_errors = 0;
    double ber = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t seed = 0;
    std::size_t failed_trials = 0;
    std::size_t bits_per_symbol_vector = 0; // 4K
};

/// 95% Wilson score interval on the bit-error proportion.
inline void wilson_interval(std::size_t errors, std::size_t n_bits, double& lo, double& hi) {
    if (n_bits == 0) {
        lo = hi = 0.0;
        return;
    }
    const double z = 1.96;
    const double n = double(n_bits);
    const double p = double(errors) / n;
    const double z2n = z * z / n;
    const double denom = 1.0 + z2n;
    const double center = (p + z2n / 2.0) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2n / (4.0 * n)) / denom;
    lo = std::max(0.0, center - half);
    hi = std::min(1.0, center + half);
}

namespace detail {

struct PointSpec {
    double snr_db;
    double sigma2;
    Scheme scheme;
};

struct PointSlice {
    std::size_t vectors = 0;
    std::size_t bit_errors = 0;
    std::size_t failed = 0;
};

/// Per-scheme precoding state shared by all trials of one channel draw.
struct GroupContext {
    CMat h;
    // digital
    std::optional<DenseSolver> dig_solver;
    // amc
    std::optional<circuits::StaticPipeline> amc_pipe;
    crossbar::CrossbarProgram p_inv, p_mvm;
    bool amc_group_failed = false;
    // neumann
    std::optional<CMat> z;
    RVec neu_inv_diag;
};

inline void precode_digital(const GroupContext& ctx, const std::vector<cplx>& s, double& alpha,
                            std::vector<cplx>& hx) {
    const RVec y_exp = ctx.dig_solver->solve(expand_vector(s));
    std::vector<cplx> x = matvec(hermitian(ctx.h), collapse_vector(y_exp));
    alpha = norm2(x);
    if (!(alpha > 0.0)) throw invalid_input("precode: zero transmit vector");
    for (auto& v : x) v /= alpha;
    hx = matvec(ctx.h, x);
}

inline bool precode_amc_static(const GroupContext& ctx, const RVec& s_exp, bool strict,
                               double& alpha, std::vector<cplx>& hx) {
    try {
        auto e = ctx.amc_pipe->apply(s_exp, strict);
        std::vector<cplx> x = collapse_vector(e.x);
        alpha = norm2(x);
        if (!(alpha > 0.0)) return false;
        for (auto& v : x) v /= alpha;
        hx = matvec(ctx.h, x);
        return true;
    } catch (const circuit_fault&) {
        return false;
    }
}

inline bool precode_amc_transient(const GroupContext& ctx, const RVec& s_exp,
                                  const circuits::AnalogConfig& cfg, double& alpha,
                                  std::vector<cplx>& hx) {
    try {
        auto pipe = circuits::run_pipeline(ctx.p_inv, ctx.p_mvm, s_exp, cfg, true);
        if (cfg.solver.strict &&
            !(pipe.inv_settled_ns.has_value() && pipe.mvm_settled_ns.has_value()))
            return false;
        std::vector<cplx> x = collapse_vector(pipe.x);
        alpha = norm2(x);
        if (!(alpha > 0.0)) return false;
        for (auto& v : x) v /= alpha;
        hx = matvec(ctx.h, x);
        return true;
    } catch (const circuit_fault&) {
        return false;
    }
}

inline bool precode_neumann(const GroupContext& ctx, const std::vector<cplx>& s,
                            std::size_t n_terms, double& alpha, std::vector<cplx>& hx) {
    const CMat& z = *ctx.z;
    const std::size_t k = z.rows();
    std::vector<cplx> term(k);
    for (std::size_t i = 0; i < k; ++i) term[i] = ctx.neu_inv_diag[i] * s[i];
    std::vector<cplx> y = term;
    const double norm0 = norm2(term);
    double prev = norm0;
    std::size_t streak = 0;
    for (std::size_t t = 1; t < n_terms; ++t) {
        const std::vector<cplx> zt = matvec(z, term);
        for (std::size_t i = 0; i < k; ++i) term[i] -= ctx.neu_inv_diag[i] * zt[i];
        const double tn = norm2(term);
        streak = (tn > prev) ? streak + 1 : 0;
        if (streak >= 3 || tn > 1e3 * norm0) return false;
        prev = tn;
        for (std::size_t i = 0; i < k; ++i) y[i] += term[i];
    }
    std::vector<cplx> x = matvec(hermitian(ctx.h), y);
    alpha = norm2(x);
    if (!(alpha > 0.0)) return false;
    for (auto& v : x) v /= alpha;
    hx = matvec(ctx.h, x);
    return true;
}

inline GroupContext make_group_context(const SimSetup& setup, std::size_t group_idx,
                                       bool need_digital, bool need_amc, bool need_neumann) {
    GroupContext ctx;
    rng::Stream h_stream(setup.master_seed, "H", group_idx);
    ctx.h = channel::sample_channel(setup.K, setup.M, h_stream);

    if (need_digital || need_neumann) ctx.z = gram(ctx.h);
    if (need_digital) ctx.dig_solver.emplace(expand_matrix(*ctx.z));
    if (need_neumann) {
        ctx.neu_inv_diag = RVec(setup.K);
        for (std::size_t i = 0; i < setup.K; ++i) ctx.neu_inv_diag[i] = 1.0 / (*ctx.z)(i, i).real();
    }
    if (need_amc) {
        try {
            rng::Stream prog(setup.master_seed, "prog", group_idx);
            const CMat z_amc = ctx.z ? *ctx.z : gram(ctx.h);
            ctx.p_inv = crossbar::map_inv(z_amc, setup.M, setup.analog.device, prog,
                                          setup.analog.g_unit_inv);
            ctx.p_mvm =
                crossbar::map_mvm(ctx.h, setup.analog.device, prog, setup.analog.g_unit_mvm);
            if (setup.amc_mode == precoder::AmcMode::static_mode)
                ctx.amc_pipe.emplace(ctx.p_inv, ctx.p_mvm, setup.analog.oa,
                                     setup.analog.solver.t_end_ns, setup.analog.sah_droop_v_per_ns);
        } catch (const circuit_fault&) {
            ctx.amc_group_failed = true;
        } catch (const singular_matrix&) {
            ctx.amc_group_failed = true;
        }
    }
    return ctx;
}

/// One channel draw, group_size symbol vectors, contributions to every
/// requested (snr, scheme) point. Pure function of (setup, group_idx, specs).
inline std::vector<PointSlice> run_group(const SimSetup& setup, std::size_t group_idx,
                                         const std::vector<PointSpec>& specs) {
    bool need_digital = false, need_amc = false, need_neumann = false;
    for (const auto& sp : specs) {
        need_digital |= sp.scheme == Scheme::digital;
        need_amc |= sp.scheme == Scheme::amc;
        need_neumann |= sp.scheme == Scheme::neumann;
    }
    GroupContext ctx = make_group_context(setup, group_idx, need_digital, need_amc, need_neumann);

    const std::size_t gsize = setup.group_size();
    const std::size_t nbits = 4 * setup.K;
    const double inv_sqrt_rho = 1.0 / std::sqrt(setup.rho_t);
    const bool strict = setup.analog.solver.strict;
    std::vector<PointSlice> out(specs.size());

    std::vector<std::uint8_t> bits(nbits);
    std::vector<cplx> noise_unit(setup.K);
    std::vector<cplx> shat(setup.K);

    for (std::size_t i = 0; i < gsize; ++i) {
        const std::size_t trial = group_idx * gsize + i;
        rng::Stream bs(setup.master_seed, "bits", trial);
        for (auto& b : bits) b = std::uint8_t(bs.below(2));
        rng::Stream ns(setup.master_seed, "noise", trial);
        for (auto& n : noise_unit) {
            const double re = ns.normal();
            const double im = ns.normal();
            n = cplx(re, im);
        }
        const std::vector<cplx> s = modem::qam16_modulate(bits, setup.modem);
        const RVec s_exp = need_amc ? expand_vector(s) : RVec{};

        double alpha_dig = 0, alpha_amc = 0, alpha_neu = 0;
        std::vector<cplx> hx_dig, hx_amc, hx_neu;
        bool ok_amc = false, ok_neu = false;
        if (need_digital) precode_digital(ctx, s, alpha_dig, hx_dig);
        if (need_amc && !ctx.amc_group_failed) {
            ok_amc = setup.amc_mode == precoder::AmcMode::static_mode
                         ? precode_amc_static(ctx, s_exp, strict, alpha_amc, hx_amc)
                         : precode_amc_transient(ctx, s_exp, setup.analog, alpha_amc, hx_amc);
        }
        if (need_neumann) ok_neu = precode_neumann(ctx, s, setup.neumann_terms, alpha_neu, hx_neu);

        for (std::size_t p = 0; p < specs.size(); ++p) {
            const auto& sp = specs[p];
            double alpha = 0;
            const std::vector<cplx>* hx = nullptr;
            bool ok = true;
            switch (sp.scheme) {
                case Scheme::digital: alpha = alpha_dig; hx = &hx_dig; break;
                case Scheme::amc: alpha = alpha_amc; hx = &hx_amc; ok = ok_amc; break;
                case Scheme::neumann: alpha = alpha_neu; hx = &hx_neu; ok = ok_neu; break;
            }
            if (!ok) {
                out[p].failed += 1;
                continue;
            }
            const double nscale = std::sqrt(sp.sigma2 / 2.0) * inv_sqrt_rho * alpha;
            for (std::size_t k = 0; k < setup.K; ++k)
                shat[k] = alpha * (*hx)[k] + nscale * noise_unit[k];
            const auto rx_bits = modem::qam16_demodulate(shat, setup.modem);
            out[p].vectors += 1;
            out[p].bit_errors += modem::bit_errors(bits, rx_bits);
        }
    }
    return out;
}

inline constexpr std::size_t kChunkGroups = 16;

} // namespace detail

/// Single trial with a fresh channel draw; stream indices coincide with a
/// sweep at group size 1.
inline TrialRecord run_trial(const SimSetup& setup, Scheme scheme, double snr_db,
                             std::size_t trial_idx) {
    setup.validate();
    TrialRecord rec;
    rec.trial = trial_idx;
    rec.scheme = scheme;

    rng::Stream h_stream(setup.master_seed, "H", trial_idx);
    const CMat h = channel::sample_channel(setup.K, setup.M, h_stream);

    rng::Stream bs(setup.master_seed, "bits", trial_idx);
    rec.bits_tx.resize(4 * setup.K);
    for (auto& b : rec.bits_tx) b = std::uint8_t(bs.below(2));
    rec.ideal = modem::qam16_modulate(rec.bits_tx, setup.modem);

    precoder::PrecodeResult pr;
    try {
        switch (scheme) {
            case Scheme::digital: pr = precoder::zf_digital(h, rec.ideal); break;
            case Scheme::amc: {
                rng::Stream prog(setup.master_seed, "prog", trial_idx);
                pr = precoder::zf_amc(h, rec.ideal, setup.analog, setup.amc_mode, prog);
                if (setup.analog.solver.strict && !pr.diag.converged) {
                    rec.failed = true;
                    return rec;
                }
                break;
            }
            case Scheme::neumann:
                pr = precoder::zf_neumann(h, rec.ideal, setup.neumann_terms);
                break;
        }
    } catch (const circuit_fault&) {
        rec.failed = true;
        return rec;
    } catch (const divergence_error&) {
        rec.failed = true;
        return rec;
    }

    const auto link = channel::make_link_config(setup.K, setup.M, setup.rho_t, snr_db);
    rng::Stream noise(setup.master_seed, "noise", trial_idx);
    std::vector<cplx> y = channel::transmit(h, pr.x, link, noise);

    rec.received.resize(setup.K);
    const double eq = pr.alpha / std::sqrt(setup.rho_t);
    for (std::size_t k = 0; k < setup.K; ++k) rec.received[k] = eq * y[k];
    rec.bits_rx = modem::qam16_demodulate(rec.received, setup.modem);
    return rec;
}

/// Fig. 7a/b symbol clouds: n_trials independent channel draws.
inline std::vector<TrialRecord> constellation_dump(const SimSetup& setup, Scheme scheme,
                                                   double snr_db, std::size_t n_trials) {
    if (n_trials == 0) throw invalid_input("constellation_dump: n_trials must be at least 1");
    std::vector<TrialRecord> records;
    records.reserve(n_trials);
    for (std::size_t t = 0; t < n_trials; ++t)
        records.push_back(run_trial(setup, scheme, snr_db, t));
    return records;
}

/// BER per (snr, scheme) point. Groups of group_size() vectors are computed
/// in fixed 16-group waves; accumulation and the stopping rule walk groups in
/// index order, so results are bit-identical for any worker count.
inline std::vector<BerPoint> ber_sweep(const SimSetup& setup, const std::vector<double>& snr_list,
                                       const std::vector<Scheme>& schemes, const SweepStop& stop) {
    setup.validate();
    if (snr_list.empty()) throw invalid_input("ber_sweep: snr list must be non-empty");
    if (schemes.empty()) throw invalid_input("ber_sweep: scheme list must be non-empty");
    if (stop.max_symbols == 0) throw invalid_input("ber_sweep: max_symbols must be positive");

    struct PointState {
        detail::PointSpec spec;
        BerPoint acc;
        std::size_t attempted = 0;
        bool stopped = false;
    };
    std::vector<PointState> points;
    for (double snr : snr_list)
        for (Scheme sch : schemes) {
            PointState ps;
            ps.spec = {snr, channel::noise_sigma2(snr, setup.M, setup.rho_t), sch};
            ps.acc.snr_db = snr;
            ps.acc.scheme = sch;
            ps.acc.seed = setup.master_seed;
            ps.acc.bits_per_symbol_vector = 4 * setup.K;
            points.push_back(std::move(ps));
        }

    std::size_t workers = setup.workers ? setup.workers : std::thread::hardware_concurrency();
    workers = std::max<std::size_t>(1, workers);

    auto stopped_now = [&](const PointState& ps) {
        if (ps.attempted >= stop.max_symbols) return true;
        return stop.min_errors > 0 && ps.acc.bit_errors >= stop.min_errors;
    };

    std::size_t next_group = 0;
    while (true) {
        std::vector<std::size_t> active;
        for (std::size_t p = 0; p < points.size(); ++p)
            if (!points[p].stopped) active.push_back(p);
        if (active.empty()) break;

        std::vector<detail::PointSpec> specs;
        specs.reserve(active.size());
        for (auto p : active) specs.push_back(points[p].spec);

        const std::size_t wave = detail::kChunkGroups;
        std::vector<std::vector<detail::PointSlice>> results(wave);
        std::atomic<std::size_t> widx{0};
        std::exception_ptr eptr = nullptr;
        std::mutex emu;
        auto worker_fn = [&]() {
            while (true) {
                const std::size_t j = widx.fetch_add(1);
                if (j >= wave) return;
                try {
                    results[j] = detail::run_group(setup, next_group + j, specs);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(emu);
                    if (!eptr) eptr = std::current_exception();
                    return;
                }
            }
        };
        const std::size_t nthreads = std::min(workers, wave);
        if (nthreads <= 1) {
            worker_fn();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(nthreads);
            for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker_fn);
            for (auto& t : pool) t.join();
        }
        if (eptr) std::rethrow_exception(eptr);

        for (std::size_t j = 0; j < wave; ++j) {
            for (std::size_t a = 0; a < active.size(); ++a) {
                PointState& ps = points[active[a]];
                if (ps.stopped) continue;
                const auto& slice = results[j][a];
                ps.acc.symbols_count += slice.vectors;
                ps.acc.bit_errors += slice.bit_errors;
                ps.acc.failed_trials += slice.failed;
                ps.attempted += slice.vectors + slice.failed;
                if (stopped_now(ps)) ps.stopped = true;
            }
        }
        next_group += wave;
    }

    std::vector<BerPoint> out;
    out.reserve(points.size());
    for (auto& ps : points) {
        const std::size_t nbits = ps.acc.symbols_count * ps.acc.bits_per_symbol_vector;
        ps.acc.ber = nbits ? double(ps.acc.bit_errors) / double(nbits) : 0.0;
        wilson_interval(ps.acc.bit_errors, nbits, ps.acc.ci_low, ps.acc.ci_high);
        out.push_back(std::move(ps.acc));
    }
    return out;
}

} // namespace amc::linksim
