#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <amc/channel.hpp>
#include <amc/csv.hpp>

#include "helpers.hpp"

using namespace amc;

namespace {

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::vector<std::string> fields_of(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string f;
    while (std::getline(in, f, ',')) out.push_back(f);
    return out;
}

} // namespace

TEST_CASE("number formatting", "[csv]") {
    REQUIRE(csv::num(0.0) == "0");
    REQUIRE(csv::num(1.0) == "1");
    REQUIRE(csv::num(98.0) == "98");
    REQUIRE(csv::num(0.0625) == "0.0625");
    REQUIRE(csv::num(1.0 / 3.0) == "0.333333333333");
    REQUIRE(csv::num(1.0 / 3.0, 9) == "0.333333333");
    REQUIRE(csv::num(-2.5e-4) == "-0.00025");
    REQUIRE(csv::num(9.2e-21) == "9.2e-21");
}

TEST_CASE("ber table", "[csv]") {
    linksim::BerPoint p;
    p.snr_db = 30.0;
    p.scheme = linksim::Scheme::amc;
    p.symbols_count = 1000000;
    p.bit_errors = 59;
    p.ber = 9.2e-07;
    p.ci_low = 7.1e-07;
    p.ci_high = 1.2e-06;
    p.seed = 1;
    const auto ls = lines_of(csv::ber_csv({p}));
    REQUIRE(ls.size() == 2);
    REQUIRE(ls[0] == "snr_db,scheme,symbols,bit_errors,ber,ci_low,ci_high,seed");
    REQUIRE(ls[1] == "30,amc,1000000,59,9.2e-07,7.1e-07,1.2e-06,1");
}

TEST_CASE("constellation table skips failed trials", "[csv]") {
    linksim::TrialRecord ok;
    ok.trial = 3;
    ok.ideal = {cplx(0.25, -0.75)};
    ok.received = {cplx(0.26, -0.74)};
    linksim::TrialRecord bad;
    bad.trial = 4;
    bad.failed = true;
    bad.ideal = {cplx(1.0, 1.0)};
    bad.received = {cplx(1.0, 1.0)};
    const auto ls = lines_of(csv::constellation_csv({ok, bad}));
    REQUIRE(ls.size() == 2);
    REQUIRE(ls[0] == "trial,user,re_ideal,im_ideal,re_rx,im_rx");
    REQUIRE(ls[1] == "3,0,0.25,-0.75,0.26,-0.74");
}

TEST_CASE("waveform table covers the full schedule", "[csv]") {
    rng::Stream hs(1, "H", 0);
    const CMat h = channel::sample_channel(2, 8, hs);
    rng::Stream bs(1, "bits", 0);
    const auto s = testutil::random_symbols(2, bs);
    rng::Stream ps(1, "prog", 0);
    const circuits::AnalogConfig cfg;
    const auto sched = circuits::pipeline_transient(h, s, cfg, ps);

    const auto ls = lines_of(csv::waveform_csv(sched));
    REQUIRE(ls[0] == "time_ns,stage,node_index,voltage_v");

    // 0.1 ns sample spacing over [0, 30] ns: 301 ticks per node, 4 INV nodes
    // and 16 MVM nodes.
    REQUIRE(ls.size() == 1 + 301 * 4 + 301 * 16);

    std::size_t inv_rows = 0, mvm_rows = 0;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto f = fields_of(ls[i]);
        REQUIRE(f.size() == 4);
        const double t = std::stod(f[0]);
        REQUIRE(t >= 0.0);
        REQUIRE(t <= 30.0 + 1e-9);
        if (f[1] == "INV") {
            ++inv_rows;
            if (t < 10.0 - 1e-9) REQUIRE(f[3] == "0");
        } else {
            REQUIRE(f[1] == "MVM");
            ++mvm_rows;
            if (t < 20.0 - 1e-9) REQUIRE(f[3] == "0");
        }
    }
    REQUIRE(inv_rows == 301 * 4);
    REQUIRE(mvm_rows == 301 * 16);

    // The INV nodes hold their settled value while the MVM stage runs.
    const auto last_inv = fields_of(ls[301 * 4]);
    REQUIRE(last_inv[1] == "INV");
    REQUIRE(std::stod(last_inv[0]) == Catch::Approx(30.0).margin(1e-6));
    REQUIRE(last_inv[3] != "0");
}

TEST_CASE("mapping statistics table", "[csv]") {
    rng::Stream hs(1, "H", 0);
    const CMat h = channel::sample_channel(16, 128, hs);
    const auto stats = crossbar::mapping_stats(gram(h), 128);
    const auto ls = lines_of(csv::mapstats_csv(stats));
    REQUIRE(ls[0] == "bin_low,bin_high,count,population");
    REQUIRE(ls.size() == 1 + 3 * 80);

    std::size_t total = 0;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        const auto f = fields_of(ls[i]);
        REQUIRE(f.size() == 4);
        REQUIRE(std::stod(f[1]) - std::stod(f[0]) == Catch::Approx(0.05).margin(1e-12));
        total += std::stoul(f[2]);
    }
    // 32 diagonal entries counted twice (pre and post shift) plus 992
    // off-diagonal entries, all within the histogram range.
    REQUIRE(total == 32 + 32 + 992);
    REQUIRE(ls[1].substr(0, 5) == "-1,-0");
}

TEST_CASE("power and complexity tables", "[csv]") {
    const auto rep = costmodel::power_report(costmodel::PowerBudget{},
                                             costmodel::component_counts(16, 128), 0.2704, 20.0);
    const auto pls = lines_of(csv::power_csv(rep));
    REQUIRE(pls[0] == "component,count,unit_power_mw,total_mw,fraction");
    REQUIRE(pls.size() == 9);
    REQUIRE(fields_of(pls[1])[0] == "oa_inv");
    REQUIRE(fields_of(pls[1])[1] == "32");
    REQUIRE(fields_of(pls[8])[0] == "rram");
    REQUIRE(fields_of(pls[8])[3] == "0.2704");

    const auto cls = lines_of(csv::complexity_csv(costmodel::complexity_table(16, 128)));
    REQUIRE(cls[0] == "scheme,inversion_ops,multiplication_ops");
    REQUIRE(cls.size() == 5);
    REQUIRE(cls[1] == "amc,1,1");
    REQUIRE(cls[2] == "neumann,4096,32768");
    REQUIRE(cls[3] == "qr,12800,32768");
    REQUIRE(cls[4] == "gauss-jordan,4352,32768");
}

TEST_CASE("atomic file writes", "[csv]") {
    namespace fs = std::filesystem;
    const fs::path dir = "csv_test_out";
    const fs::path target = dir / "nested" / "report.csv";
    fs::remove_all(dir);

    csv::write_file_atomic(target, "a,b\n1,2\n");
    REQUIRE(fs::exists(target));
    REQUIRE_FALSE(fs::exists(target.string() + ".tmp"));
    std::ifstream in(target);
    std::stringstream ss;
    ss << in.rdbuf();
    REQUIRE(ss.str() == "a,b\n1,2\n");

    csv::write_file_atomic(target, "x\n");
    std::ifstream in2(target);
    std::stringstream ss2;
    ss2 << in2.rdbuf();
    REQUIRE(ss2.str() == "x\n");
    fs::remove_all(dir);
}
