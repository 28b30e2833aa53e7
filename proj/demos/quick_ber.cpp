// Coarse BER comparison of digital and analog zero forcing on a small array.
// Runs in a few seconds; for the full design-point sweep use the CLI.

#include <cstdio>

#include <amc/amc.hpp>

using namespace amc;

int main() {
    linksim::SimSetup setup;
    setup.K = 8;
    setup.M = 32;
    setup.trials_per_h = 20;

    const std::vector<double> snrs = {10, 14, 18, 22};
    const std::vector<linksim::Scheme> schemes = {linksim::Scheme::digital,
                                                  linksim::Scheme::amc};
    linksim::SweepStop stop;
    stop.max_symbols = 20'000;
    stop.min_errors = 50;

    const auto points = linksim::ber_sweep(setup, snrs, schemes, stop);

    std::printf("%8s  %-8s %10s %10s %12s\n", "snr_db", "scheme", "symbols", "errors",
                "ber");
    for (const auto& p : points)
        std::printf("%8.1f  %-8s %10zu %10zu %12.3e\n", p.snr_db,
                    linksim::to_string(p.scheme).c_str(), p.symbols_count, p.bit_errors,
                    p.ber);
    return 0;
}
