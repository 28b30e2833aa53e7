#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include <amc/channel.hpp>
#include <amc/rng.hpp>

#include "helpers.hpp"

using namespace amc;

TEST_CASE("noise power follows the SNR definition", "[channel]") {
    // sigma2 = M * rho_T * 10^(-snr/10)
    REQUIRE(channel::noise_sigma2(30.0, 128, 1.0) == Catch::Approx(0.128).epsilon(1e-13));
    REQUIRE(channel::noise_sigma2(0.0, 16, 1.0) == Catch::Approx(16.0));
    REQUIRE(channel::noise_sigma2(10.0, 10, 2.0) == Catch::Approx(2.0));
    REQUIRE_THROWS_AS(channel::noise_sigma2(30.0, 128, 0.0), invalid_input);
    REQUIRE_THROWS_AS(channel::noise_sigma2(30.0, 0, 1.0), invalid_input);
}

TEST_CASE("link config validation", "[channel]") {
    const auto ok = channel::make_link_config(16, 128, 1.0, 30.0);
    REQUIRE(ok.sigma2 == Catch::Approx(0.128));

    channel::LinkConfig bad = ok;
    bad.sigma2 = 0.5;
    REQUIRE_THROWS_AS(bad.validate(), invalid_input);

    REQUIRE_THROWS_AS(channel::make_link_config(16, 8, 1.0, 30.0), invalid_input);
    REQUIRE_THROWS_AS(channel::make_link_config(0, 8, 1.0, 30.0), invalid_input);
    REQUIRE_THROWS_AS(channel::make_link_config(4, 8, -1.0, 30.0), invalid_input);
}

TEST_CASE("channel draws are CN(0,1) and reproducible", "[channel]") {
    rng::Stream s1(11, "H", 3);
    const CMat h = channel::sample_channel(16, 128, s1);
    REQUIRE(h.rows() == 16);
    REQUIRE(h.cols() == 128);

    SECTION("entry layout: row-major, real before imaginary") {
        rng::Stream s2(11, "H", 3);
        const double scale = 1.0 / std::sqrt(2.0);
        const double re00 = scale * s2.normal();
        const double im00 = scale * s2.normal();
        const double re01 = scale * s2.normal();
        REQUIRE(h(0, 0).real() == re00);
        REQUIRE(h(0, 0).imag() == im00);
        REQUIRE(h(0, 1).real() == re01);
    }
    SECTION("same stream identity reproduces the matrix") {
        rng::Stream s2(11, "H", 3);
        const CMat h2 = channel::sample_channel(16, 128, s2);
        for (std::size_t i = 0; i < h.rows(); ++i)
            for (std::size_t j = 0; j < h.cols(); ++j) REQUIRE(h(i, j) == h2(i, j));
    }
    SECTION("moments") {
        rng::Stream s3(12, "H", 0);
        const CMat big = channel::sample_channel(64, 256, s3);
        double mean_re = 0, power = 0;
        const double n = double(big.rows() * big.cols());
        for (std::size_t i = 0; i < big.rows(); ++i)
            for (std::size_t j = 0; j < big.cols(); ++j) {
                mean_re += big(i, j).real();
                power += std::norm(big(i, j));
            }
        REQUIRE(mean_re / n == Catch::Approx(0.0).margin(0.01));
        REQUIRE(power / n == Catch::Approx(1.0).margin(0.02));
    }
    SECTION("empty dimensions rejected") {
        rng::Stream s4(1, "H", 0);
        REQUIRE_THROWS_AS(channel::sample_channel(0, 4, s4), invalid_input);
        REQUIRE_THROWS_AS(channel::sample_channel(4, 0, s4), invalid_input);
    }
}

TEST_CASE("transmit applies sqrt(rho) H x plus noise", "[channel]") {
    rng::Stream hs(11, "H", 0);
    const CMat h = channel::sample_channel(4, 8, hs);
    rng::Stream xs(11, "x", 0);
    std::vector<cplx> x = testutil::random_cvec(8, xs);
    const double xn = norm2(x);
    for (auto& v : x) v /= xn;

    SECTION("negligible noise recovers sqrt(rho) H x") {
        const auto link = channel::make_link_config(4, 8, 4.0, 200.0);
        rng::Stream ns(11, "noise", 0);
        const auto y = channel::transmit(h, x, link, ns);
        const auto hx = matvec(h, x);
        for (std::size_t k = 0; k < 4; ++k)
            REQUIRE(std::abs(y[k] - 2.0 * hx[k]) < 1e-8);
    }
    SECTION("noise variance matches sigma2") {
        const auto link = channel::make_link_config(4, 8, 1.0, 10.0);
        const auto hx = matvec(h, x);
        double sq = 0;
        const int reps = 4000;
        for (int r = 0; r < reps; ++r) {
            rng::Stream ns(11, "noise", std::uint64_t(r));
            const auto y = channel::transmit(h, x, link, ns);
            for (std::size_t k = 0; k < 4; ++k) sq += std::norm(y[k] - hx[k]);
        }
        const double var = sq / double(reps * 4);
        REQUIRE(var == Catch::Approx(link.sigma2).epsilon(0.05));
    }
    SECTION("shape validation") {
        const auto link = channel::make_link_config(4, 8, 1.0, 30.0);
        rng::Stream ns(11, "noise", 0);
        REQUIRE_THROWS_AS(channel::transmit(h, std::vector<cplx>(5), link, ns), invalid_input);
        const auto wrong = channel::make_link_config(5, 8, 1.0, 30.0);
        REQUIRE_THROWS_AS(channel::transmit(h, x, wrong, ns), invalid_input);
    }
}
