#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "trendbreak/hp.hpp"
#include "trendbreak/l1.hpp"
#include "trendbreak/pelt.hpp"
#include "trendbreak/rng.hpp"
#include "trendbreak/stats.hpp"
#include "trendbreak/time_series.hpp"

namespace trendbreak {

/// Drift segment over series indices [start, end]; the drift applies to the
/// steps t in that range (t = 0 never takes a drift, y_0 is pure noise).
struct Segment {
    int start = 0;
    int end = 0;
    double drift = 0.0;
};

struct ScenarioSpec {
    std::size_t length = 0;  // T+1
    std::vector<Segment> segments;
    double sigma = 1.0;

    /// Segment boundaries: the last index of every segment except the final one.
    [[nodiscard]] std::vector<int> true_change_points() const {
        std::vector<int> cps;
        for (std::size_t k = 0; k + 1 < segments.size(); ++k) {
            cps.push_back(segments[k].end);
        }
        return cps;
    }
};

inline void validate_scenario(const ScenarioSpec& spec) {
    if (spec.length < 5) throw ParameterError("scenario length must be >= 5");
    if (!(spec.sigma >= 0.0)) throw ParameterError("scenario sigma must be >= 0");
    if (spec.segments.empty()) throw ParameterError("scenario needs at least one segment");
    int expect = 0;
    for (const Segment& s : spec.segments) {
        if (s.start != expect) throw ParameterError("segments must tile [0, T] without gaps");
        if (s.end < s.start) throw ParameterError("segment end before start");
        expect = s.end + 1;
    }
    if (expect != static_cast<int>(spec.length)) {
        throw ParameterError("segments must end at T");
    }
}

/// Built-in scenarios: "no-cp" (T = 99, drift 5, sigma 5) and
/// "two-cp" (T = 100, drifts 5/-5/5 switching after t = 20 and t = 50).
inline ScenarioSpec builtin_scenario(const std::string& name) {
    if (name == "no-cp") {
        return ScenarioSpec{100, {{0, 99, 5.0}}, 5.0};
    }
    if (name == "two-cp") {
        return ScenarioSpec{101, {{0, 20, 5.0}, {21, 50, -5.0}, {51, 100, 5.0}}, 5.0};
    }
    throw InputError("unknown scenario '" + name + "' (expected no-cp or two-cp)");
}

/// y_0 = eps_0; y_t = drift(t) + y_{t-1} + eps_t, eps ~ N(0, sigma^2) from the
/// deterministic sampler. Identical (spec, seed) gives bit-identical series.
inline TimeSeries simulate_random_walk(const ScenarioSpec& spec, std::uint64_t seed) {
    validate_scenario(spec);
    NormalSampler rng(seed);
    TimeSeries y;
    y.values.resize(spec.length);
    y.values[0] = rng.next(spec.sigma);
    std::size_t seg = 0;
    for (std::size_t t = 1; t < spec.length; ++t) {
        while (static_cast<int>(t) > spec.segments[seg].end) ++seg;
        y.values[t] = spec.segments[seg].drift + y.values[t - 1] + rng.next(spec.sigma);
    }
    return y;
}

struct CountStats {
    double mean = 0.0;
    double stddev = 0.0;
    int min = 0;
    int q25 = 0;
    int median = 0;
    int q75 = 0;
    int max = 0;
};

/// Mean, sample std, min/max and nearest-rank quartiles of integer counts.
inline CountStats summarize_counts(std::span<const int> counts) {
    if (counts.empty()) throw ParameterError("summarize_counts: empty input");
    std::vector<int> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    auto rank = [&](double q) {
        std::size_t r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
        r = std::min(std::max<std::size_t>(r, 1), n);
        return sorted[r - 1];
    };
    CountStats cs;
    double mean = 0.0;
    for (int c : sorted) mean += c;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (int c : sorted) var += (c - mean) * (c - mean);
    cs.mean = mean;
    cs.stddev = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    cs.min = sorted.front();
    cs.max = sorted.back();
    cs.q25 = rank(0.25);
    cs.median = rank(0.50);
    cs.q75 = rank(0.75);
    return cs;
}

struct HpMethod {
    double lambda = 13.0;
    double alpha = 0.05;
};
struct L1Method {
    double lambda = 1.0;
    ThresholdRule rule = MaxDfRule{};
    Optimizer optimizer = Optimizer::rprop;
    L1Config config;
};
struct PeltMethod {
    double penalty = 1.0;
    int min_segment_len = 2;  // benchmark configuration
    int candidate_step = 5;
};
using StudyMethod = std::variant<HpMethod, L1Method, PeltMethod>;

inline std::string study_method_name(const StudyMethod& m) {
    if (std::holds_alternative<HpMethod>(m)) return "hp";
    if (std::holds_alternative<L1Method>(m)) return "l1";
    return "pelt";
}

inline ChangePointReport run_method(const StudyMethod& m, const TimeSeries& y) {
    if (const auto* hp = std::get_if<HpMethod>(&m)) {
        return hp_detect(hp_fit(y, hp->lambda), hp->alpha);
    }
    if (const auto* l1 = std::get_if<L1Method>(&m)) {
        L1Fit fit = l1_fit(y, l1->lambda, l1->optimizer, l1->config);
        return l1_threshold_detect(fit, l1->rule);
    }
    const auto& pe = std::get<PeltMethod>(m);
    return pelt_report(y, pelt_l2(y, pe.penalty, pe.min_segment_len, pe.candidate_step),
                       pe.penalty);
}

struct MethodStudyResult {
    std::string name;
    std::vector<int> counts_per_rep;        // reported intervals per replication
    CountStats counts;
    std::map<int, int> tp_totals;           // true cp index -> hits across reps
    double mean_fdr = 0.0;
};

struct SimulationSummary {
    std::size_t replications = 0;
    std::uint64_t base_seed = 0;
    std::string scenario;
    std::vector<MethodStudyResult> methods;
};

/// Monte-Carlo study: replication r uses seed base_seed + r; detections are
/// scored against the scenario's true change points with zero slack; counts
/// are the numbers of reported intervals.
inline SimulationSummary run_study(const ScenarioSpec& spec,
                                   std::span<const StudyMethod> methods,
                                   std::size_t replications, std::uint64_t base_seed) {
    validate_scenario(spec);
    if (replications < 1) throw ParameterError("run_study: replications must be >= 1");
    const std::vector<int> true_cps = spec.true_change_points();

    SimulationSummary summary;
    summary.replications = replications;
    summary.base_seed = base_seed;
    std::vector<MethodStudyResult> results(methods.size());
    for (std::size_t k = 0; k < methods.size(); ++k) {
        results[k].name = study_method_name(methods[k]);
        for (int cp : true_cps) results[k].tp_totals[cp] = 0;
    }

    std::vector<double> fdr_sums(methods.size(), 0.0);
    for (std::size_t r = 0; r < replications; ++r) {
        const TimeSeries y = simulate_random_walk(spec, base_seed + r);
        for (std::size_t k = 0; k < methods.size(); ++k) {
            const ChangePointReport rep = run_method(methods[k], y);
            results[k].counts_per_rep.push_back(static_cast<int>(rep.intervals.size()));
            const DetectionMetrics mx = score_detections(rep.intervals, true_cps, 0);
            for (const auto& [cp, hit] : mx.per_true_cp_hits) results[k].tp_totals[cp] += hit;
            fdr_sums[k] += mx.fdr;
        }
    }
    for (std::size_t k = 0; k < methods.size(); ++k) {
        results[k].counts = summarize_counts(results[k].counts_per_rep);
        results[k].mean_fdr = fdr_sums[k] / static_cast<double>(replications);
    }
    summary.methods = std::move(results);
    return summary;
}

}  // namespace trendbreak
