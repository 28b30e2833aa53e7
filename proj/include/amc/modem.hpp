#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"

namespace amc::modem {

/// 16-QAM per Eq. (4): s_i = beta (r_i + j t_i), r_i, t_i in {+-1, +-3}.
struct ModemConfig {
    /// beta = 1/sqrt(10) makes the mean constellation energy exactly 1.
    double beta = 1.0 / std::sqrt(10.0);
};

namespace detail {

/// Per-axis Gray map: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
/// Adjacent amplitudes differ in exactly one bit.
inline int gray_to_amp(int b0, int b1) {
    if (b0 == 0) return b1 == 0 ? -3 : -1;
    return b1 == 1 ? 1 : 3;
}

inline void amp_to_gray(int amp, int& b0, int& b1) {
    switch (amp) {
        case -3: b0 = 0; b1 = 0; return;
        case -1: b0 = 0; b1 = 1; return;
        case 1: b0 = 1; b1 = 1; return;
        default: b0 = 1; b1 = 0; return;
    }
}

/// Slice one axis against thresholds {-2b, 0, +2b}. Exact threshold hits
/// resolve toward the smaller |amplitude|; the 0 threshold resolves to +1.
inline int slice_axis(double v, double beta) {
    const double t = 2.0 * beta;
    if (v > t) return 3;
    if (v >= 0.0) return 1;
    if (v >= -t) return -1;
    return -3;
}

} // namespace detail

/// Bits (length 4K) to K symbols. Bits (4i, 4i+1) select the real amplitude,
/// (4i+2, 4i+3) the imaginary one.
inline std::vector<cplx> qam16_modulate(const std::vector<std::uint8_t>& bits,
                                        const ModemConfig& cfg = {}) {
    if (bits.empty() || bits.size() % 4 != 0)
        throw invalid_input("qam16_modulate: bit count must be a positive multiple of 4");
    std::vector<cplx> s(bits.size() / 4);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const int r = detail::gray_to_amp(bits[4 * i], bits[4 * i + 1]);
        const int t = detail::gray_to_amp(bits[4 * i + 2], bits[4 * i + 3]);
        s[i] = cfg.beta * cplx(double(r), double(t));
    }
    return s;
}

/// Nearest-constellation-point decision, inverted through the Gray table.
inline std::vector<std::uint8_t> qam16_demodulate(const std::vector<cplx>& y,
                                                  const ModemConfig& cfg = {}) {
    std::vector<std::uint8_t> bits(4 * y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const int r = detail::slice_axis(y[i].real(), cfg.beta);
        const int t = detail::slice_axis(y[i].imag(), cfg.beta);
        int b0, b1;
        detail::amp_to_gray(r, b0, b1);
        bits[4 * i] = std::uint8_t(b0);
        bits[4 * i + 1] = std::uint8_t(b1);
        detail::amp_to_gray(t, b0, b1);
        bits[4 * i + 2] = std::uint8_t(b0);
        bits[4 * i + 3] = std::uint8_t(b1);
    }
    return bits;
}

/// Hamming distance / length.
inline double bit_error_rate(const std::vector<std::uint8_t>& tx,
                             const std::vector<std::uint8_t>& rx) {
    if (tx.empty() || tx.size() != rx.size())
        throw invalid_input("bit_error_rate: sequences must be equal nonzero length");
    std::size_t errs = 0;
    for (std::size_t i = 0; i < tx.size(); ++i) errs += (tx[i] != rx[i]);
    return double(errs) / double(tx.size());
}

inline std::size_t bit_errors(const std::vector<std::uint8_t>& tx,
                              const std::vector<std::uint8_t>& rx) {
    if (tx.size() != rx.size()) throw invalid_input("bit_errors: length mismatch");
    std::size_t errs = 0;
    for (std::size_t i = 0; i < tx.size(); ++i) errs += (tx[i] != rx[i]);
    return errs;
}

} // namespace amc::modem
