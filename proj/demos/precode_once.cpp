// Precode one 16-user symbol vector through the analog pipeline and compare
// it with exact digital zero forcing.

#include <cstdio>

#include <amc/amc.hpp>

using namespace amc;

int main() {
    const std::size_t k = 16, m = 128;

    rng::Stream h_stream(1, "H", 0);
    const CMat h = channel::sample_channel(k, m, h_stream);

    rng::Stream bit_stream(1, "bits", 0);
    std::vector<std::uint8_t> bits(4 * k);
    for (auto& b : bits) b = std::uint8_t(bit_stream.below(2));
    const auto s = modem::qam16_modulate(bits);

    const auto dig = precoder::zf_digital(h, s);

    circuits::AnalogConfig analog; // quantized devices, programming noise, 50.5 dB OAs
    rng::Stream prog(1, "prog", 0);
    const auto amc_run = precoder::run_amc(h, s, analog, precoder::AmcMode::transient, prog);
    const auto& r = amc_run.result;

    double err2 = 0, ref2 = 0;
    for (std::size_t i = 0; i < m; ++i) {
        err2 += std::norm(r.x[i] - dig.x[i]);
        ref2 += std::norm(dig.x[i]);
    }

    std::printf("zero-forcing precoding, K=%zu users, M=%zu antennas\n", k, m);
    std::printf("  alpha (digital) = %.6f\n", dig.alpha);
    std::printf("  alpha (analog)  = %.6f\n", r.alpha);
    std::printf("  transmit-vector error vs digital = %.3f%%\n",
                100.0 * std::sqrt(err2 / ref2));
    if (r.diag.inv_settled_ns)
        std::printf("  INV stage settled %.2f ns after input-on\n", *r.diag.inv_settled_ns);
    if (r.diag.mvm_settled_ns)
        std::printf("  MVM stage settled %.2f ns after handover\n", *r.diag.mvm_settled_ns);
    std::printf("  conductance clips: inv=%zu mvm=%zu, saturated: inv=%s mvm=%s\n",
                r.diag.clip_count_inv, r.diag.clip_count_mvm,
                r.diag.inv_saturated ? "yes" : "no", r.diag.mvm_saturated ? "yes" : "no");

    std::printf("\n  first four transmit weights (digital vs analog):\n");
    for (std::size_t i = 0; i < 4; ++i)
        std::printf("    x[%zu] = %+.6f%+.6fi   |   %+.6f%+.6fi\n", i, dig.x[i].real(),
                    dig.x[i].imag(), r.x[i].real(), r.x[i].imag());
    return 0;
}
