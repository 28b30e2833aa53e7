#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <amc/channel.hpp>
#include <amc/precoder.hpp>
#include <amc/rng.hpp>

#include "helpers.hpp"

using namespace amc;
using precoder::AmcMode;

namespace {

circuits::AnalogConfig ideal_analog() {
    circuits::AnalogConfig cfg;
    cfg.device = crossbar::DeviceModel::ideal();
    cfg.oa.infinite_gain = true;
    return cfg;
}

struct Draw {
    CMat h;
    std::vector<cplx> s;
};

Draw draw_instance(std::size_t k, std::size_t m, std::uint64_t idx) {
    Draw d;
    rng::Stream hs(1, "H", idx);
    d.h = channel::sample_channel(k, m, hs);
    rng::Stream bs(1, "bits", idx);
    d.s = testutil::random_symbols(k, bs);
    return d;
}

double x_rel_err(const precoder::PrecodeResult& got, const precoder::PrecodeResult& want) {
    return testutil::rel_err(got.x, want.x);
}

// Residual of the zero-forcing condition at the receiver: alpha H x vs s.
double rx_rel_err(const CMat& h, const precoder::PrecodeResult& r, const std::vector<cplx>& s) {
    auto hx = matvec(h, r.x);
    for (auto& v : hx) v *= r.alpha;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        num += std::norm(hx[i] - s[i]);
        den += std::norm(s[i]);
    }
    return std::sqrt(num / den);
}

} // namespace

TEST_CASE("digital ZF hand example", "[precoder]") {
    CMat h(1, 2, cplx(1.0, 0.0));
    const auto r = precoder::zf_digital(h, {cplx(1.0, 0.0)});
    REQUIRE(r.alpha == Catch::Approx(1.0 / std::sqrt(2.0)));
    REQUIRE(r.x[0].real() == Catch::Approx(1.0 / std::sqrt(2.0)));
    REQUIRE(r.x[1].real() == Catch::Approx(1.0 / std::sqrt(2.0)));
    const auto hx = matvec(h, r.x);
    REQUIRE(hx[0].real() == Catch::Approx(std::sqrt(2.0)));
    REQUIRE(r.diag.converged);
}

TEST_CASE("identity channel returns the normalized symbols", "[precoder]") {
    const CMat h = CMat::identity(3);
    rng::Stream bs(1, "bits", 0);
    const auto s = testutil::random_symbols(3, bs);
    const auto r = precoder::zf_digital(h, s);
    const double n = norm2(s);
    REQUIRE(r.alpha == Catch::Approx(n).epsilon(1e-12));
    for (std::size_t i = 0; i < 3; ++i)
        REQUIRE(std::abs(r.x[i] - s[i] / n) < 1e-12);
}

TEST_CASE("digital ZF inverts the channel", "[precoder]") {
    for (std::uint64_t idx = 0; idx < 10; ++idx) {
        const auto d = draw_instance(16, 128, idx);
        const auto r = precoder::zf_digital(d.h, d.s);
        INFO("instance " << idx);
        REQUIRE(std::abs(norm2(r.x) - 1.0) < 1e-9);
        REQUIRE(rx_rel_err(d.h, r, d.s) < 1e-9);
    }
}

TEST_CASE("rank-deficient channel is singular", "[precoder]") {
    CMat h(2, 4);
    for (std::size_t j = 0; j < 4; ++j) {
        h(0, j) = cplx(1.0, double(j));
        h(1, j) = h(0, j); // repeated row
    }
    rng::Stream bs(1, "bits", 0);
    REQUIRE_THROWS_AS(precoder::zf_digital(h, testutil::random_symbols(2, bs)), singular_matrix);
}

TEST_CASE("precoder dimension checks", "[precoder]") {
    rng::Stream bs(1, "bits", 0);
    const auto s = testutil::random_symbols(4, bs);
    rng::Stream hs(1, "H", 0);
    REQUIRE_THROWS_AS(precoder::zf_digital(channel::sample_channel(4, 2, hs), s), invalid_input);
    REQUIRE_THROWS_AS(precoder::zf_digital(channel::sample_channel(4, 8, hs), testutil::random_symbols(3, bs)),
                      invalid_input);
}

TEST_CASE("ideal analog pipeline reproduces digital ZF", "[precoder]") {
    const auto cfg = ideal_analog();
    for (std::uint64_t idx = 0; idx < 5; ++idx) {
        const auto d = draw_instance(16, 128, idx);
        const auto dig = precoder::zf_digital(d.h, d.s);
        rng::Stream ps(1, "prog", idx);
        const auto amc = precoder::zf_amc(d.h, d.s, cfg, AmcMode::static_mode, ps);
        INFO("instance " << idx);
        REQUIRE(x_rel_err(amc, dig) < 1e-9);
        REQUIRE(amc.alpha == Catch::Approx(dig.alpha).epsilon(1e-9));
        REQUIRE_FALSE(amc.diag.inv_saturated);
        REQUIRE(amc.diag.converged);
    }
}

TEST_CASE("default non-idealities keep the analog error moderate", "[precoder]") {
    // Device quantization plus programming noise plus finite gain. The
    // transmit vector deviates from digital ZF by roughly 10% in L2 while the
    // post-equalization residual stays well under a decision distance.
    const circuits::AnalogConfig cfg;
    std::vector<double> xerr, rxerr;
    for (std::uint64_t idx = 0; idx < 31; ++idx) {
        const auto d = draw_instance(16, 128, idx);
        const auto dig = precoder::zf_digital(d.h, d.s);
        rng::Stream ps(1, "prog", idx);
        const auto amc = precoder::zf_amc(d.h, d.s, cfg, AmcMode::static_mode, ps);
        xerr.push_back(x_rel_err(amc, dig));
        rxerr.push_back(rx_rel_err(d.h, amc, d.s));
    }
    REQUIRE(testutil::median(xerr) <= 0.12);
    REQUIRE(testutil::median(rxerr) <= 0.07);
}

TEST_CASE("analog error grows with programming noise", "[precoder]") {
    auto median_err = [](double sigma, bool quantized) {
        circuits::AnalogConfig cfg;
        cfg.device.sigma_prog = sigma;
        cfg.device.quantization_enabled = quantized;
        std::vector<double> errs;
        for (std::uint64_t idx = 0; idx < 50; ++idx) {
            const auto d = draw_instance(16, 128, idx);
            const auto dig = precoder::zf_digital(d.h, d.s);
            rng::Stream ps(1, "prog", idx);
            errs.push_back(
                x_rel_err(precoder::zf_amc(d.h, d.s, cfg, AmcMode::static_mode, ps), dig));
        }
        return testutil::median(errs);
    };

    const double e_30 = median_err(0.30, false);
    const double e_15 = median_err(0.15, false);
    const double e_05 = median_err(0.05, false);
    const double e_00 = median_err(0.0, false);
    REQUIRE(e_30 >= e_15);
    REQUIRE(e_15 >= e_05);
    REQUIRE(e_05 >= e_00);
    // Noise-free unquantized arrays leave only the finite-gain deviation.
    REQUIRE(e_00 < 0.01);
    // Quantization adds error on top of the same programming noise.
    REQUIRE(median_err(0.15, true) >= e_15);
}

TEST_CASE("massive-MIMO operating point stays off the rails", "[precoder]") {
    const circuits::AnalogConfig cfg;
    for (std::uint64_t idx = 0; idx < 20; ++idx) {
        const auto d = draw_instance(16, 128, idx);
        rng::Stream ps(1, "prog", idx);
        const auto amc = precoder::zf_amc(d.h, d.s, cfg, AmcMode::static_mode, ps);
        INFO("instance " << idx);
        REQUIRE_FALSE(amc.diag.inv_saturated);
        REQUIRE_FALSE(amc.diag.mvm_saturated);
    }
}

TEST_CASE("Neumann series behavior", "[precoder]") {
    SECTION("diagonal Gram matrix converges in one term") {
        CMat h(2, 4);
        h(0, 0) = 2.0;
        h(1, 1) = 3.0; // orthogonal rows: Z is diagonal
        rng::Stream bs(1, "bits", 1);
        const auto s = testutil::random_symbols(2, bs);
        const auto dig = precoder::zf_digital(h, s);
        for (std::size_t terms : {1u, 2u, 5u}) {
            const auto neu = precoder::zf_neumann(h, s, terms);
            INFO(terms << " terms");
            REQUIRE(x_rel_err(neu, dig) < 1e-12);
        }
    }
    SECTION("error decreases with the number of terms") {
        const auto d = draw_instance(16, 128, 2);
        const auto dig = precoder::zf_digital(d.h, d.s);
        double prev = 1e300;
        for (std::size_t terms = 1; terms <= 4; ++terms) {
            const double err = x_rel_err(precoder::zf_neumann(d.h, d.s, terms), dig);
            REQUIRE(err < prev);
            prev = err;
        }
        // Contraction factor is about 0.83 at K/M = 1/8, so 200 terms leave
        // ample slack under 1e-6.
        REQUIRE(x_rel_err(precoder::zf_neumann(d.h, d.s, 200), dig) < 1e-6);
    }
    SECTION("square channel diverges") {
        bool threw = false;
        for (std::uint64_t idx = 0; idx < 10 && !threw; ++idx) {
            const auto d = draw_instance(8, 8, idx);
            try {
                (void)precoder::zf_neumann(d.h, d.s, 40);
            } catch (const divergence_error&) {
                threw = true;
            }
        }
        REQUIRE(threw);
    }
    SECTION("zero terms rejected") {
        const auto d = draw_instance(4, 8, 0);
        REQUIRE_THROWS_AS(precoder::zf_neumann(d.h, d.s, 0), invalid_input);
    }
}

TEST_CASE("run_amc exposes programs and diagnostics", "[precoder]") {
    const auto d = draw_instance(16, 128, 5);
    const circuits::AnalogConfig cfg;

    SECTION("static mode") {
        rng::Stream ps(1, "prog", 5);
        const auto run = precoder::run_amc(d.h, d.s, cfg, AmcMode::static_mode, ps);
        REQUIRE(run.p_inv.role == crossbar::Role::INV);
        REQUIRE(run.p_mvm.role == crossbar::Role::MVM);
        REQUIRE(run.result.diag.clip_count_inv == run.p_inv.clip_count);
        REQUIRE(run.result.diag.clip_count_mvm == run.p_mvm.clip_count);
        REQUIRE(run.result.diag.converged);
        REQUIRE_FALSE(run.result.diag.inv_settled_ns.has_value());
        REQUIRE(run.pipe.x.size() == 2 * 128);
        REQUIRE(run.result.x.size() == 128);
        REQUIRE(std::abs(norm2(run.result.x) - 1.0) < 1e-9);
    }
    SECTION("transient mode settles and reports times") {
        rng::Stream ps(1, "prog", 5);
        const auto run = precoder::run_amc(d.h, d.s, cfg, AmcMode::transient, ps);
        REQUIRE(run.result.diag.converged);
        REQUIRE(run.result.diag.inv_settled_ns.has_value());
        REQUIRE(run.result.diag.mvm_settled_ns.has_value());
        REQUIRE(*run.result.diag.inv_settled_ns <= cfg.solver.t_end_ns);
        REQUIRE(*run.result.diag.mvm_settled_ns <= cfg.solver.t_end_ns);
    }
    SECTION("static and transient agree at the settled point") {
        rng::Stream p1(1, "prog", 5);
        const auto st = precoder::zf_amc(d.h, d.s, cfg, AmcMode::static_mode, p1);
        rng::Stream p2(1, "prog", 5);
        const auto tr = precoder::zf_amc(d.h, d.s, cfg, AmcMode::transient, p2);
        REQUIRE(testutil::rel_err(tr.x, st.x) < 0.05);
    }
}
