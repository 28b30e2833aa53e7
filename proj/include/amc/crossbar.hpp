#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "rng.hpp"

namespace amc::crossbar {

/// 4-bit RRAM behavioral model: 15 uniform levels across 2-30 uS plus a deep
/// high-resistance state at 0.1 uS. Programming adds N(0, sigma_prog) per cell.
struct DeviceModel {
    double g_hrs = 0.1;
    std::vector<double> g_levels = {2,  4,  6,  8,  10, 12, 14, 16,
                                    18, 20, 22, 24, 26, 28, 30};
    double sigma_prog = 0.15;
    bool quantization_enabled = true;

    double g_max() const { return g_levels.back(); }

    void validate() const {
        if (g_levels.empty()) throw invalid_input("DeviceModel: empty level set");
        if (!(g_hrs > 0.0)) throw invalid_input("DeviceModel: g_hrs must be positive");
        double prev = g_hrs;
        for (double g : g_levels) {
            if (!(g > prev)) throw invalid_input("DeviceModel: levels must be strictly increasing above g_hrs");
            prev = g;
        }
        if (sigma_prog < 0.0) throw invalid_input("DeviceModel: sigma_prog must be non-negative");
    }

    /// Ideal devices: continuous conductance, no programming noise.
    static DeviceModel ideal() {
        DeviceModel d;
        d.sigma_prog = 0.0;
        d.quantization_enabled = false;
        return d;
    }
};

enum class Role { INV, MVM };

/// Programmed array pair. a holds positive matrix entries, b negative ones,
/// both in uS. d is the INV feedback diagonal (ideal resistors, 2 g_unit each).
struct CrossbarProgram {
    RMat a;
    RMat b;
    RVec d;
    double g_unit = 0.0;
    double scale = 0.0;
    Role role = Role::MVM;
    std::size_t clip_count = 0;
};

/// Nearest member of {g_hrs} union g_levels; ties resolve to the lower state.
/// Targets above the top level return the top level.
inline double quantize(double g_target, const DeviceModel& dev) {
    if (!(g_target >= 0.0)) throw invalid_input("quantize: target must be non-negative");
    double best = dev.g_hrs;
    double best_dist = std::abs(g_target - dev.g_hrs);
    for (double g : dev.g_levels) {
        const double dist = std::abs(g_target - g);
        if (dist < best_dist) {
            best = g;
            best_dist = dist;
        }
    }
    return best;
}

/// Cellwise write: quantize (when enabled), add programming noise, floor at 0.
/// Cells are written row-major so a fixed stream gives a fixed array.
inline RMat program(const RMat& targets, const DeviceModel& dev, rng::Stream& stream) {
    dev.validate();
    RMat out(targets.rows(), targets.cols());
    for (std::size_t i = 0; i < targets.rows(); ++i)
        for (std::size_t j = 0; j < targets.cols(); ++j) {
            const double t = targets(i, j);
            if (!(t >= 0.0) || !std::isfinite(t))
                throw invalid_input("program: targets must be finite and non-negative");
            double g = dev.quantization_enabled ? quantize(t, dev) : t;
            if (dev.sigma_prog > 0.0) g += dev.sigma_prog * stream.normal();
            out(i, j) = std::max(0.0, g);
        }
    return out;
}

namespace detail {

inline void split_signs(const RMat& m, double g_unit, RMat& a, RMat& b) {
    a = RMat(m.rows(), m.cols());
    b = RMat(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (v > 0.0)
                a(i, j) = v * g_unit;
            else if (v < 0.0)
                b(i, j) = -v * g_unit;
        }
}

/// Physical devices cannot exceed the top level; out-of-range targets clamp
/// there and are counted. Ideal (unquantized) arrays keep the exact target.
inline std::size_t clip_targets(RMat& t, const DeviceModel& dev) {
    if (!dev.quantization_enabled) return 0;
    std::size_t clips = 0;
    const double gmax = dev.g_max();
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j)
            if (t(i, j) > gmax) {
                t(i, j) = gmax;
                ++clips;
            }
    return clips;
}

inline void require_hermitian_posdiag(const CMat& z, const char* who) {
    if (z.rows() != z.cols() || z.rows() == 0)
        throw invalid_input(std::string(who) + ": matrix must be square and nonempty");
    if (!all_finite(z)) throw invalid_input(std::string(who) + ": non-finite entry");
    double amax = 0;
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j) amax = std::max(amax, std::abs(z(i, j)));
    const double tol = 1e-9 * std::max(1.0, amax);
    for (std::size_t i = 0; i < z.rows(); ++i) {
        if (!(z(i, i).real() > 0.0) || std::abs(z(i, i).imag()) > tol)
            throw invalid_input(std::string(who) + ": diagonal must be real and positive");
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(z(i, j) - std::conj(z(j, i))) > tol)
                throw invalid_input(std::string(who) + ": matrix must be Hermitian");
    }
}

} // namespace detail

inline constexpr double kGUnitInv = 60.0;
inline constexpr double kGUnitMvm = 100.0;

/// Map the Gram matrix Z onto the INV arrays: scale by sigma_Z = 2/M, expand
/// to real blocks, subtract the 2 I diagonal shift, split signs, program.
/// The shift reappears physically as the feedback diagonal d = 2 g_unit.
inline CrossbarProgram map_inv(const CMat& z, std::size_t m_ant, const DeviceModel& dev,
                               rng::Stream& stream, double g_unit = kGUnitInv) {
    detail::require_hermitian_posdiag(z, "map_inv");
    if (m_ant == 0) throw invalid_input("map_inv: antenna count must be positive");
    if (!(g_unit > 0.0)) throw invalid_input("map_inv: g_unit must be positive");

    const double sigma_z = 2.0 / double(m_ant);
    RMat shifted = expand_matrix(sigma_z * CMat(z));
    for (std::size_t i = 0; i < shifted.rows(); ++i) shifted(i, i) -= 2.0;

    CrossbarProgram p;
    p.role = Role::INV;
    p.g_unit = g_unit;
    p.scale = sigma_z;
    RMat ta, tb;
    detail::split_signs(shifted, g_unit, ta, tb);
    p.clip_count = detail::clip_targets(ta, dev) + detail::clip_targets(tb, dev);
    p.a = program(ta, dev, stream);
    p.b = program(tb, dev, stream);
    p.d = RVec(shifted.rows(), 2.0 * g_unit);
    return p;
}

/// Map the channel matrix onto the MVM arrays: scale by sigma_H = sqrt(2/M),
/// expand, split signs, program. Rows are inputs, columns outputs, so the
/// array shape is the expanded 2K x 2M.
inline CrossbarProgram map_mvm(const CMat& h, const DeviceModel& dev, rng::Stream& stream,
                               double g_unit = kGUnitMvm) {
    if (h.rows() == 0 || h.cols() == 0) throw invalid_input("map_mvm: empty matrix");
    if (!all_finite(h)) throw invalid_input("map_mvm: non-finite entry");
    if (!(g_unit > 0.0)) throw invalid_input("map_mvm: g_unit must be positive");

    const double sigma_h = std::sqrt(2.0 / double(h.cols()));
    RMat scaled = expand_matrix(sigma_h * CMat(h));

    CrossbarProgram p;
    p.role = Role::MVM;
    p.g_unit = g_unit;
    p.scale = sigma_h;
    RMat ta, tb;
    detail::split_signs(scaled, g_unit, ta, tb);
    p.clip_count = detail::clip_targets(ta, dev) + detail::clip_targets(tb, dev);
    p.a = program(ta, dev, stream);
    p.b = program(tb, dev, stream);
    return p;
}

/// Recover the represented matrix in scaled units: (a - b)/g_unit, plus the
/// 2 I diagonal for INV programs where the shift lives in d instead.
inline RMat readback(const CrossbarProgram& p) {
    if (!(p.g_unit > 0.0)) throw invalid_input("readback: invalid program");
    RMat r(p.a.rows(), p.a.cols());
    for (std::size_t i = 0; i < r.rows(); ++i)
        for (std::size_t j = 0; j < r.cols(); ++j) r(i, j) = (p.a(i, j) - p.b(i, j)) / p.g_unit;
    if (p.role == Role::INV)
        for (std::size_t i = 0; i < r.rows(); ++i) r(i, i) += 2.0;
    return r;
}

/// Shared-edge histogram over sigma_Z-scaled expanded entries. within_half
/// counts |v| <= 0.5 exactly rather than through bin boundaries.
struct PopulationStats {
    std::vector<std::size_t> counts;
    std::size_t n = 0;
    double sum = 0.0;
    std::size_t within_half = 0;

    double mean() const { return n ? sum / double(n) : 0.0; }
    double within_half_fraction() const { return n ? double(within_half) / double(n) : 0.0; }
};

struct MappingStats {
    static constexpr double kLo = -1.0;
    static constexpr double kHi = 3.0;
    static constexpr std::size_t kBins = 80;

    PopulationStats diag_preshift;
    PopulationStats diag_postshift;
    PopulationStats offdiag;

    static double bin_low(std::size_t b) { return kLo + (kHi - kLo) * double(b) / double(kBins); }
    static double bin_high(std::size_t b) { return kLo + (kHi - kLo) * double(b + 1) / double(kBins); }

    void accumulate(const MappingStats& o) {
        auto add = [](PopulationStats& dst, const PopulationStats& src) {
            if (dst.counts.size() < src.counts.size()) dst.counts.resize(src.counts.size(), 0);
            for (std::size_t i = 0; i < src.counts.size(); ++i) dst.counts[i] += src.counts[i];
            dst.n += src.n;
            dst.sum += src.sum;
            dst.within_half += src.within_half;
        };
        add(diag_preshift, o.diag_preshift);
        add(diag_postshift, o.diag_postshift);
        add(offdiag, o.offdiag);
    }
};

namespace detail {

inline void stat_push(PopulationStats& pop, double v) {
    std::size_t b;
    if (v < MappingStats::kLo)
        b = 0;
    else if (v >= MappingStats::kHi)
        b = MappingStats::kBins - 1;
    else
        b = std::size_t((v - MappingStats::kLo) / (MappingStats::kHi - MappingStats::kLo) *
                        double(MappingStats::kBins));
    b = std::min(b, MappingStats::kBins - 1);
    pop.counts[b] += 1;
    pop.n += 1;
    pop.sum += v;
    if (std::abs(v) <= 0.5) pop.within_half += 1;
}

} // namespace detail

/// Distribution summary of the scaled expanded entries of Z, before and after
/// the diagonal shift. The off-diagonal population is shift-invariant.
inline MappingStats mapping_stats(const CMat& z, std::size_t m_ant) {
    detail::require_hermitian_posdiag(z, "mapping_stats");
    if (m_ant == 0) throw invalid_input("mapping_stats: antenna count must be positive");

    const double sigma_z = 2.0 / double(m_ant);
    const RMat e = expand_matrix(sigma_z * CMat(z));

    MappingStats s;
    s.diag_preshift.counts.assign(MappingStats::kBins, 0);
    s.diag_postshift.counts.assign(MappingStats::kBins, 0);
    s.offdiag.counts.assign(MappingStats::kBins, 0);
    for (std::size_t i = 0; i < e.rows(); ++i)
        for (std::size_t j = 0; j < e.cols(); ++j) {
            if (i == j) {
                detail::stat_push(s.diag_preshift, e(i, j));
                detail::stat_push(s.diag_postshift, e(i, j) - 2.0);
            } else {
                detail::stat_push(s.offdiag, e(i, j));
            }
        }
    return s;
}

} // namespace amc::crossbar
