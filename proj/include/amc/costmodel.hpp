#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crossbar.hpp"
#include "errors.hpp"
#include "numerics.hpp"

namespace amc::costmodel {

/// Per-component unit powers in mW. The defaults are presentation constants
/// calibrated once against the published 125 mW / 2.5 nJ totals at K=16,
/// M=128 (with the MVM OAs near half the budget and RRAM under 2%); they are
/// not device measurements.
struct PowerBudget {
    double oa_inv = 0.3;
    double oa_inverter = 0.2;
    double oa_mvm = 0.2441;
    double sah_buffer = 0.1;
    double dac_2bit = 0.05;
    double adc_4bit = 0.15;
    double input_follower = 0.09;

    void validate() const {
        for (double v : {oa_inv, oa_inverter, oa_mvm, sah_buffer, dac_2bit, adc_4bit, input_follower})
            if (!(v >= 0.0)) throw invalid_input("PowerBudget: unit powers must be non-negative");
    }
};

/// Digital baseline constants; fixed reference values, not modeled.
struct DigitalReference {
    double power_mw = 64.0;
    double latency_ns = 1960.0;

    double energy_nj() const { return power_mw * latency_ns / 1000.0; }
};

struct ComponentCounts {
    std::size_t oa_inv = 0;
    std::size_t oa_inverter = 0;
    std::size_t oa_mvm = 0;
    std::size_t sah_buffer = 0;
    std::size_t dac_2bit = 0;
    std::size_t adc_4bit = 0;
    std::size_t input_follower = 0;
    std::size_t rram_cells = 0;
};

/// INV stage: 2K feedback OAs, 2K inverters, 2K S&H buffers, 2K DACs, 2K
/// input followers. MVM stage: 2M column OAs and 2M ADCs. RRAM cells cover
/// the positive and negative arrays of both stages.
inline ComponentCounts component_counts(std::size_t k, std::size_t m) {
    if (k < 1 || m < 1) throw invalid_input("component_counts: dimensions must be positive");
    ComponentCounts c;
    c.oa_inv = 2 * k;
    c.oa_inverter = 2 * k;
    c.sah_buffer = 2 * k;
    c.dac_2bit = 2 * k;
    c.input_follower = 2 * k;
    c.oa_mvm = 2 * m;
    c.adc_4bit = 2 * m;
    c.rram_cells = 2 * (2 * k) * (2 * k) + 2 * (2 * k) * (2 * m);
    return c;
}

/// Static dissipation of every resistive element at a solved operating point:
/// G V^2 summed over the INV arrays (columns driven by the OA outputs), the
/// feedback diagonal, the input conductances (DAC voltages), the MVM arrays
/// (rows driven by the held voltages), and the MVM feedback conductances.
/// Conductances in uS and voltages in V give uW; returned in mW.
inline double rram_static_power_mw(const crossbar::CrossbarProgram& p_inv,
                                   const crossbar::CrossbarProgram& p_mvm, const RVec& dac_v,
                                   const RVec& v_inv, const RVec& v_held, const RVec& x_out) {
    if (p_inv.role != crossbar::Role::INV || p_mvm.role != crossbar::Role::MVM)
        throw invalid_input("rram_static_power: program roles are swapped");
    const std::size_t n = p_inv.a.rows();
    if (v_inv.size() != n || dac_v.size() != n || v_held.size() != n || p_mvm.a.rows() != n ||
        x_out.size() != p_mvm.a.cols())
        throw invalid_input("rram_static_power: voltage vector shapes disagree with programs");

    double uw = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t c = 0; c < n; ++c)
            uw += (p_inv.a(j, c) + p_inv.b(j, c)) * v_inv[c] * v_inv[c];
        uw += p_inv.d[j] * v_inv[j] * v_inv[j];
        uw += p_inv.g_unit * dac_v[j] * dac_v[j];
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < p_mvm.a.cols(); ++c)
            uw += (p_mvm.a(r, c) + p_mvm.b(r, c)) * v_held[r] * v_held[r];
    for (std::size_t c = 0; c < p_mvm.a.cols(); ++c) uw += p_mvm.g_unit * x_out[c] * x_out[c];
    return uw / 1000.0;
}

struct CostRow {
    std::string component;
    std::size_t count = 0;
    double unit_mw = 0.0;
    double total_mw = 0.0;
    double fraction = 0.0;
};

struct CostReport {
    std::vector<CostRow> rows;
    double total_mw = 0.0;
    double latency_ns = 0.0;
    double energy_nj = 0.0;
    DigitalReference digital;
    double speedup = 0.0;
    double efficiency_ratio = 0.0;
};

inline CostReport power_report(const PowerBudget& budget, const ComponentCounts& counts,
                               double rram_mw, double latency_ns,
                               const DigitalReference& ref = {}) {
    budget.validate();
    if (!(latency_ns > 0.0)) throw invalid_input("power_report: latency must be positive");
    if (!(rram_mw >= 0.0)) throw invalid_input("power_report: rram power must be non-negative");

    CostReport rep;
    auto push = [&](const std::string& name, std::size_t count, double unit) {
        rep.rows.push_back({name, count, unit, unit * double(count), 0.0});
    };
    push("oa_inv", counts.oa_inv, budget.oa_inv);
    push("oa_inverter", counts.oa_inverter, budget.oa_inverter);
    push("oa_mvm", counts.oa_mvm, budget.oa_mvm);
    push("sah_buffer", counts.sah_buffer, budget.sah_buffer);
    push("dac_2bit", counts.dac_2bit, budget.dac_2bit);
    push("adc_4bit", counts.adc_4bit, budget.adc_4bit);
    push("input_follower", counts.input_follower, budget.input_follower);
    rep.rows.push_back({"rram", counts.rram_cells, counts.rram_cells ? rram_mw / double(counts.rram_cells) : 0.0,
                        rram_mw, 0.0});

    for (const auto& r : rep.rows) rep.total_mw += r.total_mw;
    if (rep.total_mw > 0.0)
        for (auto& r : rep.rows) r.fraction = r.total_mw / rep.total_mw;

    rep.latency_ns = latency_ns;
    rep.energy_nj = rep.total_mw * latency_ns / 1000.0;
    rep.digital = ref;
    rep.speedup = ref.latency_ns / latency_ns;
    rep.efficiency_ratio = rep.energy_nj > 0.0 ? ref.energy_nj() / rep.energy_nj : 0.0;
    return rep;
}

struct ComplexityRow {
    std::string scheme;
    std::uint64_t inversion_ops = 0;
    std::uint64_t multiplication_ops = 0;
};

/// Operation counts for inverting Z (K x K) and applying H^H (M x K).
inline std::vector<ComplexityRow> complexity_table(std::size_t k, std::size_t m) {
    if (k < 1 || m < 1) throw invalid_input("complexity_table: dimensions must be positive");
    const std::uint64_t k3 = std::uint64_t(k) * k * k;
    const std::uint64_t k2 = std::uint64_t(k) * k;
    const std::uint64_t mk2 = std::uint64_t(m) * k2;
    return {
        {"amc", 1, 1},
        {"neumann", k3, mk2},
        {"qr", 3 * k3 + 2 * k2, mk2},
        {"gauss-jordan", k3 + k2, mk2},
    };
}

struct LatencyReport {
    double window_ns = 10.0;
    double latency_ns = 20.0; // two schedule windows
    std::optional<double> inv_settled_ns;
    std::optional<double> mvm_settled_ns;
    double digital_latency_ns = 1960.0;
    double speedup = 98.0;
};

/// Latency accounting uses the fixed schedule windows; measured settling
/// instants ride along for reporting.
inline LatencyReport latency_report(std::optional<double> inv_settled_ns,
                                    std::optional<double> mvm_settled_ns, double window_ns = 10.0,
                                    const DigitalReference& ref = {}) {
    if (!(window_ns > 0.0)) throw invalid_input("latency_report: window must be positive");
    LatencyReport rep;
    rep.window_ns = window_ns;
    rep.latency_ns = 2.0 * window_ns;
    rep.inv_settled_ns = inv_settled_ns;
    rep.mvm_settled_ns = mvm_settled_ns;
    rep.digital_latency_ns = ref.latency_ns;
    rep.speedup = ref.latency_ns / rep.latency_ns;
    return rep;
}

} // namespace amc::costmodel
