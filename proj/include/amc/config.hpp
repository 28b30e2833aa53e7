#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "channel.hpp"
#include "circuits.hpp"
#include "costmodel.hpp"
#include "crossbar.hpp"
#include "errors.hpp"
#include "linksim.hpp"
#include "modem.hpp"
#include "precoder.hpp"

#include <json.hpp>

namespace amc::config {

/// Full run configuration. Defaults reproduce the reference instance:
/// 16 x 128, 15 levels across 2-30 uS with 0.1 uS HRS, 50.5 dB / 157 MHz /
/// +-0.6 V feedback OAs, static solver, paired BER sweeps.
struct SimConfig {
    // dimensions
    std::size_t K = 16;
    std::size_t M = 128;
    // link
    double rho_t = 1.0;
    std::vector<double> snr_db = {20.0, 25.0, 30.0, 35.0, 40.0};
    // modem
    double beta = 1.0 / std::sqrt(10.0);
    // device
    double g_hrs_us = 0.1;
    double level_min_us = 2.0;
    double level_max_us = 30.0;
    std::size_t level_count = 15;
    double sigma_prog_us = 0.15;
    bool quantization = true;
    double g_unit_inv_us = 60.0;
    double g_unit_mvm_us = 100.0;
    // oa
    double gain_db = 50.5;
    double gbw_mhz = 157.0;
    double vdd_v = 0.6;
    double buffer_gain_db = 86.7;
    double buffer_gbw_mhz = 700.0;
    // solver
    std::string mode = "static";
    double dt_ps = 10.0;
    double t_end_ns = 10.0;
    double settle_tol_mv = 1.0;
    bool strict = false;
    // sample-and-hold
    double sah_droop_v_per_ns = 0.0;
    // sweep
    std::size_t max_symbols = 2'000'000;
    std::size_t min_errors = 100;
    std::size_t trials = 100;
    bool reuse_h = true;
    std::size_t neumann_terms = 3;
    // cost
    costmodel::PowerBudget budget;
    costmodel::DigitalReference digital_ref;
    // seed
    std::uint64_t master_seed = 1;

    void validate() const {
        if (K < 1 || M < K) throw config_error("dimensions: requires M >= K >= 1");
        if (K > 1024 || M > 8192)
            throw config_error("dimensions: limits are K <= 1024, M <= 8192");
        if (level_count > 1024) throw config_error("device.level_count: limit is 1024");
        if (!(rho_t > 0.0)) throw config_error("link.rho_t: must be positive");
        if (snr_db.empty()) throw config_error("link.snr_db: must be non-empty");
        for (double s : snr_db)
            if (!std::isfinite(s)) throw config_error("link.snr_db: entries must be finite");
        if (!(beta > 0.0)) throw config_error("modem.beta: must be positive");
        if (!(g_hrs_us > 0.0)) throw config_error("device.g_hrs_us: must be positive");
        if (level_count < 2) throw config_error("device.level_count: must be at least 2");
        if (!(level_min_us > g_hrs_us))
            throw config_error("device.level_min_us: must exceed g_hrs_us");
        if (!(level_max_us > level_min_us))
            throw config_error("device.level_max_us: must exceed level_min_us");
        if (!(sigma_prog_us >= 0.0)) throw config_error("device.sigma_prog_us: must be non-negative");
        if (!(g_unit_inv_us > 0.0)) throw config_error("device.g_unit_inv_us: must be positive");
        if (!(g_unit_mvm_us > 0.0)) throw config_error("device.g_unit_mvm_us: must be positive");
        if (!(gain_db > 0.0)) throw config_error("oa.gain_db: must be positive");
        if (!(gbw_mhz > 0.0)) throw config_error("oa.gbw_mhz: must be positive");
        if (!(vdd_v > 0.0)) throw config_error("oa.vdd_v: must be positive");
        if (!(buffer_gain_db > 0.0)) throw config_error("oa.buffer_gain_db: must be positive");
        if (!(buffer_gbw_mhz > 0.0)) throw config_error("oa.buffer_gbw_mhz: must be positive");
        if (mode != "static" && mode != "transient")
            throw config_error("solver.mode: must be \"static\" or \"transient\"");
        if (!(dt_ps > 0.0) || dt_ps > 50.0) throw config_error("solver.dt_ps: must lie in (0, 50]");
        if (!(t_end_ns > 0.0)) throw config_error("solver.t_end_ns: must be positive");
        if (!(settle_tol_mv > 0.0)) throw config_error("solver.settle_tol_mv: must be positive");
        if (!(sah_droop_v_per_ns >= 0.0))
            throw config_error("sah.droop_v_per_ns: must be non-negative");
        if (max_symbols == 0) throw config_error("sweep.max_symbols: must be positive");
        if (trials == 0) throw config_error("sweep.trials: must be positive");
        if (neumann_terms == 0) throw config_error("sweep.neumann_terms: must be positive");
        try {
            budget.validate();
        } catch (const invalid_input& e) {
            throw config_error(std::string("cost: ") + e.what());
        }
        if (!(digital_ref.power_mw > 0.0))
            throw config_error("cost.digital_power_mw: must be positive");
        if (!(digital_ref.latency_ns > 0.0))
            throw config_error("cost.digital_latency_ns: must be positive");
    }

    crossbar::DeviceModel device_model() const {
        crossbar::DeviceModel dev;
        dev.g_hrs = g_hrs_us;
        dev.g_levels.clear();
        for (std::size_t i = 0; i < level_count; ++i)
            dev.g_levels.push_back(level_min_us + double(i) * (level_max_us - level_min_us) /
                                                      double(level_count - 1));
        dev.sigma_prog = sigma_prog_us;
        dev.quantization_enabled = quantization;
        return dev;
    }

    circuits::OAModel oa_model() const {
        circuits::OAModel oa;
        oa.gain_db = gain_db;
        oa.gbw_mhz = gbw_mhz;
        oa.vdd = vdd_v;
        oa.kind = circuits::OAKind::feedback;
        return oa;
    }

    circuits::OAModel buffer_oa_model() const {
        circuits::OAModel oa;
        oa.gain_db = buffer_gain_db;
        oa.gbw_mhz = buffer_gbw_mhz;
        oa.vdd = vdd_v;
        oa.kind = circuits::OAKind::rail_to_rail;
        return oa;
    }

    circuits::AnalogConfig analog_config() const {
        circuits::AnalogConfig a;
        a.device = device_model();
        a.oa = oa_model();
        a.solver.dt_ps = dt_ps;
        a.solver.t_end_ns = t_end_ns;
        a.solver.settle_tol_mv = settle_tol_mv;
        a.solver.strict = strict;
        a.g_unit_inv = g_unit_inv_us;
        a.g_unit_mvm = g_unit_mvm_us;
        a.sah_droop_v_per_ns = sah_droop_v_per_ns;
        return a;
    }

    precoder::AmcMode amc_mode() const {
        return mode == "transient" ? precoder::AmcMode::transient : precoder::AmcMode::static_mode;
    }

    linksim::SimSetup sim_setup(std::size_t workers = 0) const {
        linksim::SimSetup s;
        s.K = K;
        s.M = M;
        s.rho_t = rho_t;
        s.modem.beta = beta;
        s.analog = analog_config();
        s.amc_mode = amc_mode();
        s.trials_per_h = trials;
        s.reuse_h = reuse_h;
        s.neumann_terms = neumann_terms;
        s.master_seed = master_seed;
        s.workers = workers;
        return s;
    }

    linksim::SweepStop sweep_stop() const { return {max_symbols, min_errors}; }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["dimensions"] = {{"K", K}, {"M", M}};
        j["link"] = {{"rho_t", rho_t}, {"snr_db", snr_db}};
        j["modem"] = {{"beta", beta}};
        j["device"] = {{"g_hrs_us", g_hrs_us},
                       {"level_min_us", level_min_us},
                       {"level_max_us", level_max_us},
                       {"level_count", level_count},
                       {"sigma_prog_us", sigma_prog_us},
                       {"quantization", quantization},
                       {"g_unit_inv_us", g_unit_inv_us},
                       {"g_unit_mvm_us", g_unit_mvm_us}};
        j["oa"] = {{"gain_db", gain_db},
                   {"gbw_mhz", gbw_mhz},
                   {"vdd_v", vdd_v},
                   {"buffer_gain_db", buffer_gain_db},
                   {"buffer_gbw_mhz", buffer_gbw_mhz}};
        j["solver"] = {{"mode", mode},
                       {"dt_ps", dt_ps},
                       {"t_end_ns", t_end_ns},
                       {"settle_tol_mv", settle_tol_mv},
                       {"strict", strict}};
        j["sah"] = {{"droop_v_per_ns", sah_droop_v_per_ns}};
        j["sweep"] = {{"max_symbols", max_symbols},
                      {"min_errors", min_errors},
                      {"trials", trials},
                      {"reuse_h", reuse_h},
                      {"neumann_terms", neumann_terms}};
        j["cost"] = {{"oa_inv_mw", budget.oa_inv},
                     {"oa_inverter_mw", budget.oa_inverter},
                     {"oa_mvm_mw", budget.oa_mvm},
                     {"sah_buffer_mw", budget.sah_buffer},
                     {"dac_2bit_mw", budget.dac_2bit},
                     {"adc_4bit_mw", budget.adc_4bit},
                     {"input_follower_mw", budget.input_follower},
                     {"digital_power_mw", digital_ref.power_mw},
                     {"digital_latency_ns", digital_ref.latency_ns}};
        j["master_seed"] = master_seed;
        return j;
    }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const char* section,
                           std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw config_error(std::string(section) + ": unknown key \"" + it.key() + "\"");
    }
}

inline void expect_object(const json& v, const char* section) {
    if (!v.is_object()) throw config_error(std::string(section) + ": expected an object");
}

template <typename T>
void read_field(const json& obj, const char* section, const char* key, T& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_integer() && it->get<long long>() < 0)
            throw config_error(std::string(section) + "." + key + ": must be non-negative");
    }
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw config_error(std::string(section) + "." + key + ": wrong type");
    }
}

} // namespace detail

/// Parse and validate a config; missing sections and fields keep defaults,
/// unknown keys are errors.
inline SimConfig parse_config_json(const nlohmann::json& root) {
    using detail::expect_object;
    using detail::read_field;
    using detail::reject_unknown;
    expect_object(root, "config");
    reject_unknown(root, "config",
                   {"dimensions", "link", "modem", "device", "oa", "solver", "sah", "sweep",
                    "cost", "master_seed"});

    SimConfig cfg;
    if (auto it = root.find("dimensions"); it != root.end()) {
        expect_object(*it, "dimensions");
        reject_unknown(*it, "dimensions", {"K", "M"});
        read_field(*it, "dimensions", "K", cfg.K);
        read_field(*it, "dimensions", "M", cfg.M);
    }
    if (auto it = root.find("link"); it != root.end()) {
        expect_object(*it, "link");
        reject_unknown(*it, "link", {"rho_t", "snr_db"});
        read_field(*it, "link", "rho_t", cfg.rho_t);
        read_field(*it, "link", "snr_db", cfg.snr_db);
    }
    if (auto it = root.find("modem"); it != root.end()) {
        expect_object(*it, "modem");
        reject_unknown(*it, "modem", {"beta"});
        read_field(*it, "modem", "beta", cfg.beta);
    }
    if (auto it = root.find("device"); it != root.end()) {
        expect_object(*it, "device");
        reject_unknown(*it, "device",
                       {"g_hrs_us", "level_min_us", "level_max_us", "level_count",
                        "sigma_prog_us", "quantization", "g_unit_inv_us", "g_unit_mvm_us"});
        read_field(*it, "device", "g_hrs_us", cfg.g_hrs_us);
        read_field(*it, "device", "level_min_us", cfg.level_min_us);
        read_field(*it, "device", "level_max_us", cfg.level_max_us);
        read_field(*it, "device", "level_count", cfg.level_count);
        read_field(*it, "device", "sigma_prog_us", cfg.sigma_prog_us);
        read_field(*it, "device", "quantization", cfg.quantization);
        read_field(*it, "device", "g_unit_inv_us", cfg.g_unit_inv_us);
        read_field(*it, "device", "g_unit_mvm_us", cfg.g_unit_mvm_us);
    }
    if (auto it = root.find("oa"); it != root.end()) {
        expect_object(*it, "oa");
        reject_unknown(*it, "oa",
                       {"gain_db", "gbw_mhz", "vdd_v", "buffer_gain_db", "buffer_gbw_mhz"});
        read_field(*it, "oa", "gain_db", cfg.gain_db);
        read_field(*it, "oa", "gbw_mhz", cfg.gbw_mhz);
        read_field(*it, "oa", "vdd_v", cfg.vdd_v);
        read_field(*it, "oa", "buffer_gain_db", cfg.buffer_gain_db);
        read_field(*it, "oa", "buffer_gbw_mhz", cfg.buffer_gbw_mhz);
    }
    if (auto it = root.find("solver"); it != root.end()) {
        expect_object(*it, "solver");
        reject_unknown(*it, "solver", {"mode", "dt_ps", "t_end_ns", "settle_tol_mv", "strict"});
        read_field(*it, "solver", "mode", cfg.mode);
        read_field(*it, "solver", "dt_ps", cfg.dt_ps);
        read_field(*it, "solver", "t_end_ns", cfg.t_end_ns);
        read_field(*it, "solver", "settle_tol_mv", cfg.settle_tol_mv);
        read_field(*it, "solver", "strict", cfg.strict);
    }
    if (auto it = root.find("sah"); it != root.end()) {
        expect_object(*it, "sah");
        reject_unknown(*it, "sah", {"droop_v_per_ns"});
        read_field(*it, "sah", "droop_v_per_ns", cfg.sah_droop_v_per_ns);
    }
    if (auto it = root.find("sweep"); it != root.end()) {
        expect_object(*it, "sweep");
        reject_unknown(*it, "sweep",
                       {"max_symbols", "min_errors", "trials", "reuse_h", "neumann_terms"});
        read_field(*it, "sweep", "max_symbols", cfg.max_symbols);
        read_field(*it, "sweep", "min_errors", cfg.min_errors);
        read_field(*it, "sweep", "trials", cfg.trials);
        read_field(*it, "sweep", "reuse_h", cfg.reuse_h);
        read_field(*it, "sweep", "neumann_terms", cfg.neumann_terms);
    }
    if (auto it = root.find("cost"); it != root.end()) {
        expect_object(*it, "cost");
        reject_unknown(*it, "cost",
                       {"oa_inv_mw", "oa_inverter_mw", "oa_mvm_mw", "sah_buffer_mw", "dac_2bit_mw",
                        "adc_4bit_mw", "input_follower_mw", "digital_power_mw",
                        "digital_latency_ns"});
        read_field(*it, "cost", "oa_inv_mw", cfg.budget.oa_inv);
        read_field(*it, "cost", "oa_inverter_mw", cfg.budget.oa_inverter);
        read_field(*it, "cost", "oa_mvm_mw", cfg.budget.oa_mvm);
        read_field(*it, "cost", "sah_buffer_mw", cfg.budget.sah_buffer);
        read_field(*it, "cost", "dac_2bit_mw", cfg.budget.dac_2bit);
        read_field(*it, "cost", "adc_4bit_mw", cfg.budget.adc_4bit);
        read_field(*it, "cost", "input_follower_mw", cfg.budget.input_follower);
        read_field(*it, "cost", "digital_power_mw", cfg.digital_ref.power_mw);
        read_field(*it, "cost", "digital_latency_ns", cfg.digital_ref.latency_ns);
    }
    read_field(root, "config", "master_seed", cfg.master_seed);

    cfg.validate();
    return cfg;
}

inline SimConfig parse_config_text(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config_json(root);
}

inline SimConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace amc::config
