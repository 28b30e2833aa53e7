#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "circuits.hpp"
#include "costmodel.hpp"
#include "crossbar.hpp"
#include "errors.hpp"
#include "linksim.hpp"

namespace amc::csv {

inline std::string num(double v, int sig = 12) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", sig, v);
    return buf;
}

/// Write via a temp file in the same directory, then rename into place, so a
/// reader never sees a half-written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw invalid_input("cannot open for writing: " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw invalid_input("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string ber_csv(const std::vector<linksim::BerPoint>& points) {
    std::string s = "snr_db,scheme,symbols,bit_errors,ber,ci_low,ci_high,seed\n";
    for (const auto& p : points) {
        s += num(p.snr_db) + ',' + linksim::to_string(p.scheme) + ',' +
             std::to_string(p.symbols_count) + ',' + std::to_string(p.bit_errors) + ',' +
             num(p.ber) + ',' + num(p.ci_low) + ',' + num(p.ci_high) + ',' +
             std::to_string(p.seed) + '\n';
    }
    return s;
}

inline std::string constellation_csv(const std::vector<linksim::TrialRecord>& records) {
    std::string s = "trial,user,re_ideal,im_ideal,re_rx,im_rx\n";
    for (const auto& r : records) {
        if (r.failed) continue;
        for (std::size_t u = 0; u < r.received.size(); ++u) {
            s += std::to_string(r.trial) + ',' + std::to_string(u) + ',' +
                 num(r.ideal[u].real()) + ',' + num(r.ideal[u].imag()) + ',' +
                 num(r.received[u].real()) + ',' + num(r.received[u].imag()) + '\n';
        }
    }
    return s;
}

namespace detail {

inline void waveform_rows(std::string& s, const char* stage, const circuits::TransientResult& tr,
                          double start_ns, double hold_until_ns) {
    if (tr.times.empty()) return;
    const double step = tr.times.size() > 1 ? tr.times[1] - tr.times[0] : tr.times.back();
    const std::size_t nodes = tr.node_voltages.front().size();

    auto emit = [&](double t, const RVec& v) {
        for (std::size_t j = 0; j < nodes; ++j)
            s += num(t) + ',' + stage + ',' + std::to_string(j) + ',' + num(v[j], 9) + '\n';
    };

    const RVec zeros(nodes, 0.0);
    for (double t = 0.0; t < start_ns - 1e-9; t += step) emit(t, zeros);
    for (std::size_t i = 0; i < tr.times.size(); ++i) emit(start_ns + tr.times[i], tr.node_voltages[i]);
    for (double t = start_ns + tr.times.back() + step; t <= hold_until_ns + 1e-9; t += step)
        emit(t, tr.node_voltages.back());
}

} // namespace detail

/// Full-schedule waveform: INV nodes are 0 until the input turns on and hold
/// their settled value while the MVM stage runs; MVM nodes are 0 until the
/// S&H hands over. Voltages carry 9 significant digits.
inline std::string waveform_csv(const circuits::ScheduledPipeline& sched) {
    std::string s = "time_ns,stage,node_index,voltage_v\n";
    const double end_ns =
        sched.mvm_start_ns + (sched.result.mvm.times.empty() ? 0.0 : sched.result.mvm.times.back());
    detail::waveform_rows(s, "INV", sched.result.inv, sched.inv_start_ns, end_ns);
    detail::waveform_rows(s, "MVM", sched.result.mvm, sched.mvm_start_ns, end_ns);
    return s;
}

inline std::string mapstats_csv(const crossbar::MappingStats& stats) {
    std::string s = "bin_low,bin_high,count,population\n";
    auto rows = [&](const crossbar::PopulationStats& pop, const char* name) {
        for (std::size_t b = 0; b < pop.counts.size(); ++b)
            s += num(crossbar::MappingStats::bin_low(b)) + ',' +
                 num(crossbar::MappingStats::bin_high(b)) + ',' + std::to_string(pop.counts[b]) +
                 ',' + name + '\n';
    };
    rows(stats.diag_preshift, "diag_preshift");
    rows(stats.diag_postshift, "diag_postshift");
    rows(stats.offdiag, "offdiag");
    return s;
}

inline std::string power_csv(const costmodel::CostReport& rep) {
    std::string s = "component,count,unit_power_mw,total_mw,fraction\n";
    for (const auto& r : rep.rows)
        s += r.component + ',' + std::to_string(r.count) + ',' + num(r.unit_mw) + ',' +
             num(r.total_mw) + ',' + num(r.fraction) + '\n';
    return s;
}

inline std::string complexity_csv(const std::vector<costmodel::ComplexityRow>& rows) {
    std::string s = "scheme,inversion_ops,multiplication_ops\n";
    for (const auto& r : rows)
        s += r.scheme + ',' + std::to_string(r.inversion_ops) + ',' +
             std::to_string(r.multiplication_ops) + '\n';
    return s;
}

} // namespace amc::csv
