#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "trendbreak/hp.hpp"
#include "trendbreak/l1.hpp"
#include "trendbreak/report.hpp"
#include "trendbreak/simulate.hpp"

namespace trendbreak {

/// Write-then-rename so readers never observe a partial file.
inline void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write: " + tmp.string());
        out << content;
    }
    fs::rename(tmp, target);
}

inline std::string format_full(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline nlohmann::json report_to_json(const ChangePointReport& rep) {
    nlohmann::json j;
    j["method"] = method_name(rep.method);
    if (rep.lambda) j["lambda"] = *rep.lambda;
    if (rep.threshold_rule) j["threshold_rule"] = *rep.threshold_rule;
    if (rep.alpha) j["alpha"] = *rep.alpha;
    if (rep.penalty) j["penalty"] = *rep.penalty;
    j["flagged_indices"] = rep.flagged_indices;
    j["intervals"] = nlohmann::json::array();
    for (const Interval& iv : rep.intervals) {
        j["intervals"].push_back({iv.lo, iv.hi});
    }
    nlohmann::json d;
    if (rep.diagnostics.rmse) d["rmse"] = *rep.diagnostics.rmse;
    if (rep.diagnostics.shapiro_p) d["shapiro_p"] = *rep.diagnostics.shapiro_p;
    if (rep.diagnostics.df_hat) d["df_hat"] = *rep.diagnostics.df_hat;
    if (rep.diagnostics.prob) d["prob"] = *rep.diagnostics.prob;
    if (rep.diagnostics.sigma2_hat) d["sigma2_hat"] = *rep.diagnostics.sigma2_hat;
    j["diagnostics"] = d;
    j["series_length"] = rep.series_length;
    return j;
}

inline std::string report_to_text(const ChangePointReport& rep,
                                  const std::vector<std::string>& labels = {}) {
    std::ostringstream os;
    os << "method: " << method_name(rep.method) << "\n";
    if (rep.lambda) os << "lambda: " << format_full(*rep.lambda) << "\n";
    if (rep.threshold_rule) os << "threshold_rule: " << *rep.threshold_rule << "\n";
    if (rep.alpha) os << "alpha: " << format_full(*rep.alpha) << "\n";
    if (rep.penalty) os << "penalty: " << format_full(*rep.penalty) << "\n";
    os << "series_length: " << rep.series_length << "\n";
    os << "detections: " << rep.intervals.size() << "\n";
    for (const Interval& iv : rep.intervals) {
        os << "  interval " << iv.lo << "-" << iv.hi;
        if (!labels.empty() && iv.lo < static_cast<int>(labels.size()) &&
            iv.hi < static_cast<int>(labels.size())) {
            os << "  (" << labels[iv.lo] << " .. " << labels[iv.hi] << ")";
        }
        os << "\n";
    }
    if (rep.diagnostics.rmse) os << "rmse: " << format_full(*rep.diagnostics.rmse) << "\n";
    if (rep.diagnostics.shapiro_p) {
        os << "shapiro_p: " << format_full(*rep.diagnostics.shapiro_p) << "\n";
    }
    if (rep.diagnostics.df_hat) os << "df_hat: " << format_full(*rep.diagnostics.df_hat) << "\n";
    if (rep.diagnostics.prob) os << "prob: " << format_full(*rep.diagnostics.prob) << "\n";
    if (rep.diagnostics.sigma2_hat) {
        os << "sigma2_hat: " << format_full(*rep.diagnostics.sigma2_hat) << "\n";
    }
    return os.str();
}

inline std::string hp_scan_to_csv(const HpScanResult& scan) {
    std::ostringstream os;
    os << "lambda,shapiro_p,log_rmse,prob_at_least_one\n";
    for (const HpLambdaRow& r : scan.rows) {
        os << format_full(r.lambda) << ',' << format_full(r.shapiro_p) << ','
           << format_full(std::log(r.rmse)) << ',' << format_full(r.prob_at_least_one) << "\n";
    }
    return os.str();
}

inline std::string l1_scan_to_csv(const L1ScanResult& scan) {
    std::ostringstream os;
    os << "lambda,shapiro_p,log_rmse,df_hat\n";
    for (const L1LambdaRow& r : scan.rows) {
        os << format_full(r.lambda) << ',' << format_full(r.shapiro_p) << ','
           << format_full(std::log(r.rmse)) << ',' << format_full(r.df_hat) << "\n";
    }
    return os.str();
}

inline std::string summary_to_text(const SimulationSummary& s) {
    std::ostringstream os;
    os << "scenario: " << s.scenario << "\n";
    os << "replications: " << s.replications << "\n";
    os << "base_seed: " << s.base_seed << "\n\n";
    os << "method  mean     std      min  25%  50%  75%  max\n";
    for (const MethodStudyResult& m : s.methods) {
        os << std::left << std::setw(7) << m.name << ' ' << std::right << std::fixed
           << std::setprecision(3) << std::setw(8) << m.counts.mean << ' ' << std::setw(8)
           << m.counts.stddev << ' ' << std::setw(4) << m.counts.min << ' ' << std::setw(4)
           << m.counts.q25 << ' ' << std::setw(4) << m.counts.median << ' ' << std::setw(4)
           << m.counts.q75 << ' ' << std::setw(4) << m.counts.max << "\n";
    }
    bool any_cp = false;
    for (const MethodStudyResult& m : s.methods) any_cp |= !m.tp_totals.empty();
    if (any_cp) {
        os << "\ntrue-positive totals and mean FDR\n";
        for (const MethodStudyResult& m : s.methods) {
            os << std::left << std::setw(7) << m.name;
            for (const auto& [cp, hits] : m.tp_totals) {
                os << "  cp" << cp << "=" << hits;
            }
            os << "  mean_fdr=" << std::fixed << std::setprecision(4) << m.mean_fdr << "\n";
        }
    }
    return os.str();
}

inline std::string summary_to_csv(const SimulationSummary& s) {
    std::ostringstream os;
    os << "method,mean,std,min,q25,median,q75,max,mean_fdr";
    std::vector<int> cps;
    for (const MethodStudyResult& m : s.methods) {
        for (const auto& [cp, hits] : m.tp_totals) {
            if (std::find(cps.begin(), cps.end(), cp) == cps.end()) cps.push_back(cp);
        }
    }
    for (int cp : cps) os << ",tp_at_" << cp;
    os << "\n";
    for (const MethodStudyResult& m : s.methods) {
        os << m.name << ',' << format_full(m.counts.mean) << ',' << format_full(m.counts.stddev)
           << ',' << m.counts.min << ',' << m.counts.q25 << ',' << m.counts.median << ','
           << m.counts.q75 << ',' << m.counts.max << ',' << format_full(m.mean_fdr);
        for (int cp : cps) {
            auto it = m.tp_totals.find(cp);
            os << ',' << (it != m.tp_totals.end() ? std::to_string(it->second) : "");
        }
        os << "\n";
    }
    return os.str();
}

inline std::string series_to_csv(const TimeSeries& y) {
    std::ostringstream os;
    const bool labeled = !y.labels.empty();
    os << (labeled ? "date,value\n" : "value\n");
    for (std::size_t i = 0; i < y.values.size(); ++i) {
        if (labeled) os << y.labels[i] << ',';
        os << format_full(y.values[i]) << "\n";
    }
    return os.str();
}

}  // namespace trendbreak
