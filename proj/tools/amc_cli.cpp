// Command-line front end: one binary, six subcommands, CSV outputs.

#include <amc/amc.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace amc;

namespace {

struct Instance {
    CMat h;
    std::vector<std::uint8_t> bits;
    std::vector<cplx> s;
};

// H from channel group 0, bits from trial 0: the same draw the link
// simulator makes for its first trial, so results line up across commands.
Instance make_instance(const config::SimConfig& cfg) {
    Instance ins;
    rng::Stream hs(cfg.master_seed, "H", 0);
    ins.h = channel::sample_channel(cfg.K, cfg.M, hs);
    rng::Stream bs(cfg.master_seed, "bits", 0);
    ins.bits.resize(4 * cfg.K);
    for (auto& b : ins.bits) b = std::uint8_t(bs.below(2));
    modem::ModemConfig mc;
    mc.beta = cfg.beta;
    ins.s = modem::qam16_modulate(ins.bits, mc);
    return ins;
}

std::vector<linksim::Scheme> parse_schemes(const std::string& list) {
    std::vector<linksim::Scheme> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto a = item.find_first_not_of(" \t");
        const auto b = item.find_last_not_of(" \t");
        if (a == std::string::npos) continue;
        item = item.substr(a, b - a + 1);
        try {
            out.push_back(linksim::scheme_from_string(item));
        } catch (const invalid_input& e) {
            throw config_error(std::string("--schemes: ") + e.what());
        }
    }
    if (out.empty()) throw config_error("--schemes: empty scheme list");
    return out;
}

const char* yn(bool v) { return v ? "yes" : "no"; }

std::string opt_ns(const std::optional<double>& v) {
    if (!v) return "not settled";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f ns", *v);
    return buf;
}

void write_out(const fs::path& out_dir, const char* name, const std::string& content) {
    const fs::path p = out_dir / name;
    csv::write_file_atomic(p, content);
    std::printf("wrote %s\n", p.string().c_str());
}

int cmd_precode(const config::SimConfig& cfg, const fs::path& out_dir) {
    const Instance ins = make_instance(cfg);
    const auto dig = precoder::zf_digital(ins.h, ins.s);

    rng::Stream prog(cfg.master_seed, "prog", 0);
    const auto run = precoder::run_amc(ins.h, ins.s, cfg.analog_config(), cfg.amc_mode(), prog);
    const auto& amc_r = run.result;

    double err2 = 0.0, ref2 = 0.0;
    for (std::size_t m = 0; m < dig.x.size(); ++m) {
        err2 += std::norm(amc_r.x[m] - dig.x[m]);
        ref2 += std::norm(dig.x[m]);
    }

    std::printf("precode: K=%zu M=%zu mode=%s seed=%llu\n", cfg.K, cfg.M, cfg.mode.c_str(),
                static_cast<unsigned long long>(cfg.master_seed));
    std::printf("alpha_digital = %.9f\n", dig.alpha);
    std::printf("alpha_amc     = %.9f\n", amc_r.alpha);
    std::printf("x_rel_err     = %.6f\n", std::sqrt(err2 / ref2));
    std::printf("inv_saturated = %s  mvm_saturated = %s\n", yn(amc_r.diag.inv_saturated),
                yn(amc_r.diag.mvm_saturated));
    std::printf("clip_inv = %zu  clip_mvm = %zu\n", amc_r.diag.clip_count_inv,
                amc_r.diag.clip_count_mvm);
    if (cfg.amc_mode() == precoder::AmcMode::transient) {
        std::printf("inv_settled = %s  mvm_settled = %s  converged = %s\n",
                    opt_ns(amc_r.diag.inv_settled_ns).c_str(),
                    opt_ns(amc_r.diag.mvm_settled_ns).c_str(), yn(amc_r.diag.converged));
    }
    std::printf("%4s %14s %14s %14s %14s\n", "m", "x_dig_re", "x_dig_im", "x_amc_re", "x_amc_im");
    for (std::size_t m = 0; m < dig.x.size(); ++m)
        std::printf("%4zu %14.6e %14.6e %14.6e %14.6e\n", m, dig.x[m].real(), dig.x[m].imag(),
                    amc_r.x[m].real(), amc_r.x[m].imag());
    (void)out_dir;
    return 0;
}

int cmd_transient(const config::SimConfig& cfg, const fs::path& out_dir) {
    const Instance ins = make_instance(cfg);
    rng::Stream prog(cfg.master_seed, "prog", 0);
    const auto sched = circuits::pipeline_transient(ins.h, ins.s, cfg.analog_config(), prog);
    const auto& r = sched.result;

    std::printf("transient: K=%zu M=%zu t_end=%.3f ns dt=%.3f ps\n", cfg.K, cfg.M, cfg.t_end_ns,
                cfg.dt_ps);
    std::printf("input on at %.2f ns; INV window [%.2f, %.2f] ns; MVM window [%.2f, %.2f] ns\n",
                sched.inv_start_ns, sched.inv_start_ns, sched.mvm_start_ns, sched.mvm_start_ns,
                sched.mvm_start_ns + cfg.t_end_ns);
    std::printf("inv settled %s after stage start (absolute %s)\n",
                opt_ns(r.inv_settled_ns).c_str(),
                r.inv_settled_ns ? opt_ns(sched.inv_start_ns + *r.inv_settled_ns).c_str()
                                 : "never");
    std::printf("mvm settled %s after stage start (absolute %s)\n",
                opt_ns(r.mvm_settled_ns).c_str(),
                r.mvm_settled_ns ? opt_ns(sched.mvm_start_ns + *r.mvm_settled_ns).c_str()
                                 : "never");
    std::printf("inv clipped = %s  mvm clipped = %s\n", yn(r.inv_saturated), yn(r.mvm_saturated));

    write_out(out_dir, "waveform.csv", csv::waveform_csv(sched));
    return 0;
}

int cmd_ber_sweep(const config::SimConfig& cfg, const fs::path& out_dir,
                  const std::string& schemes_list, std::size_t workers) {
    const auto schemes = parse_schemes(schemes_list);
    const auto setup = cfg.sim_setup(workers);
    const auto points = linksim::ber_sweep(setup, cfg.snr_db, schemes, cfg.sweep_stop());

    std::printf("%8s %-8s %10s %10s %12s %12s %12s %8s\n", "snr_db", "scheme", "symbols",
                "errors", "ber", "ci_low", "ci_high", "failed");
    for (const auto& p : points)
        std::printf("%8.2f %-8s %10zu %10zu %12.4e %12.4e %12.4e %8zu\n", p.snr_db,
                    linksim::to_string(p.scheme).c_str(), p.symbols_count, p.bit_errors, p.ber,
                    p.ci_low, p.ci_high, p.failed_trials);

    write_out(out_dir, "ber.csv", csv::ber_csv(points));
    return 0;
}

int cmd_constellation(const config::SimConfig& cfg, const fs::path& out_dir,
                      const std::string& scheme_name, double snr_db, std::size_t trials) {
    linksim::Scheme scheme;
    try {
        scheme = linksim::scheme_from_string(scheme_name);
    } catch (const invalid_input& e) {
        throw config_error(std::string("--scheme: ") + e.what());
    }
    const auto setup = cfg.sim_setup();
    const auto records = linksim::constellation_dump(setup, scheme, snr_db, trials);

    std::size_t failed = 0;
    for (const auto& r : records) failed += r.failed ? 1 : 0;
    std::printf("constellation: scheme=%s snr=%.2f dB trials=%zu failed=%zu\n",
                linksim::to_string(scheme).c_str(), snr_db, records.size(), failed);

    write_out(out_dir, "constellation.csv", csv::constellation_csv(records));
    return 0;
}

int cmd_map_stats(const config::SimConfig& cfg, const fs::path& out_dir, std::size_t instances) {
    if (instances == 0) throw config_error("--instances: must be at least 1");
    crossbar::MappingStats total;
    for (std::size_t i = 0; i < instances; ++i) {
        rng::Stream hs(cfg.master_seed, "H", i);
        const CMat h = channel::sample_channel(cfg.K, cfg.M, hs);
        total.accumulate(crossbar::mapping_stats(gram(h), cfg.M));
    }

    std::printf("map-stats: K=%zu M=%zu instances=%zu\n", cfg.K, cfg.M, instances);
    std::printf("diag  pre-shift : n=%zu mean=%.6f\n", total.diag_preshift.n,
                total.diag_preshift.mean());
    std::printf("diag  post-shift: n=%zu mean=%.6f\n", total.diag_postshift.n,
                total.diag_postshift.mean());
    std::printf("off-diagonal    : n=%zu mean=%.6f within_half=%.6f\n", total.offdiag.n,
                total.offdiag.mean(), total.offdiag.within_half_fraction());

    write_out(out_dir, "mapstats.csv", csv::mapstats_csv(total));
    return 0;
}

int cmd_power_report(const config::SimConfig& cfg, const fs::path& out_dir) {
    const Instance ins = make_instance(cfg);
    rng::Stream prog(cfg.master_seed, "prog", 0);
    // Transient run: supplies both the operating point for the RRAM term and
    // the measured settling instants.
    const auto run =
        precoder::run_amc(ins.h, ins.s, cfg.analog_config(), precoder::AmcMode::transient, prog);

    const double rram_mw = costmodel::rram_static_power_mw(
        run.p_inv, run.p_mvm, run.pipe.dac_v, run.pipe.v_inv, run.pipe.v_held, run.pipe.x);
    const auto counts = costmodel::component_counts(cfg.K, cfg.M);
    const double latency_ns = 2.0 * cfg.t_end_ns;
    const auto rep =
        costmodel::power_report(cfg.budget, counts, rram_mw, latency_ns, cfg.digital_ref);
    const auto lat = costmodel::latency_report(run.pipe.inv_settled_ns, run.pipe.mvm_settled_ns,
                                               cfg.t_end_ns, cfg.digital_ref);

    std::printf("power-report: K=%zu M=%zu\n", cfg.K, cfg.M);
    std::printf("%-16s %8s %14s %12s %10s\n", "component", "count", "unit_mw", "total_mw",
                "fraction");
    for (const auto& row : rep.rows)
        std::printf("%-16s %8zu %14.6g %12.6g %10.4f\n", row.component.c_str(), row.count,
                    row.unit_mw, row.total_mw, row.fraction);
    std::printf("total power   = %.4f mW\n", rep.total_mw);
    std::printf("latency       = %.2f ns (two %.2f ns windows)\n", rep.latency_ns, lat.window_ns);
    std::printf("inv settled   = %s, mvm settled = %s\n", opt_ns(lat.inv_settled_ns).c_str(),
                opt_ns(lat.mvm_settled_ns).c_str());
    std::printf("energy        = %.4f nJ per precoding\n", rep.energy_nj);
    std::printf("digital ref   = %.2f mW, %.2f ns, %.2f nJ\n", rep.digital.power_mw,
                rep.digital.latency_ns, rep.digital.energy_nj());
    std::printf("speedup       = %.2fx\n", rep.speedup);
    std::printf("efficiency    = %.2fx lower energy\n", rep.efficiency_ratio);

    write_out(out_dir, "power.csv", csv::power_csv(rep));
    write_out(out_dir, "complexity.csv",
              csv::complexity_csv(costmodel::complexity_table(cfg.K, cfg.M)));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RRAM crossbar analog matrix-computing precoder simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool strict = false;
    std::size_t workers = 0;

    app.add_option("--config", config_path, "JSON configuration file (default: built-in defaults)");
    auto* opt_seed = app.add_option("--seed", seed, "override the master seed");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--strict", strict, "treat saturation and non-settling as hard faults");
    app.add_option("--workers", workers, "worker threads for sweeps (0 = hardware)");

    auto* sub_precode =
        app.add_subcommand("precode", "precode one symbol vector, digital and analog");
    auto* sub_transient =
        app.add_subcommand("transient", "scheduled two-phase transient; writes waveform.csv");
    auto* sub_ber = app.add_subcommand("ber-sweep", "Monte-Carlo BER sweep; writes ber.csv");
    std::string schemes_list = "digital,amc";
    sub_ber->add_option("--schemes", schemes_list, "comma-separated: digital,amc,neumann")
        ->capture_default_str();
    auto* sub_const = app.add_subcommand(
        "constellation", "per-trial ideal vs received symbols; writes constellation.csv");
    std::string scheme_name = "amc";
    double snr_one = 30.0;
    std::size_t trials_one = 1000;
    sub_const->add_option("--scheme", scheme_name, "digital, amc, or neumann")
        ->capture_default_str();
    sub_const->add_option("--snr", snr_one, "SNR in dB")->capture_default_str();
    sub_const->add_option("--trials", trials_one, "number of symbol vectors")
        ->capture_default_str();
    auto* sub_maps = app.add_subcommand(
        "map-stats", "conductance mapping statistics over channel draws; writes mapstats.csv");
    std::size_t instances = 1000;
    sub_maps->add_option("--instances", instances, "number of channel instances")
        ->capture_default_str();
    auto* sub_power = app.add_subcommand(
        "power-report", "power, energy, latency and complexity; writes power.csv, complexity.csv");

    for (auto* sub : {sub_precode, sub_transient, sub_ber, sub_const, sub_maps, sub_power})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        config::SimConfig cfg =
            config_path.empty() ? config::SimConfig{} : config::parse_config_file(config_path);
        if (opt_seed->count()) cfg.master_seed = seed;
        if (strict) cfg.strict = true;
        cfg.validate();

        const fs::path out(out_dir);
        csv::write_file_atomic(out / "config_effective.json", cfg.to_json().dump(2) + "\n");

        if (sub_precode->parsed()) return cmd_precode(cfg, out);
        if (sub_transient->parsed()) return cmd_transient(cfg, out);
        if (sub_ber->parsed()) return cmd_ber_sweep(cfg, out, schemes_list, workers);
        if (sub_const->parsed()) return cmd_constellation(cfg, out, scheme_name, snr_one, trials_one);
        if (sub_maps->parsed()) return cmd_map_stats(cfg, out, instances);
        if (sub_power->parsed()) return cmd_power_report(cfg, out);
        return 2;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const circuit_fault& e) {
        std::cerr << "circuit fault: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
