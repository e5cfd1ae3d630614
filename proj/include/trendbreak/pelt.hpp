#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "trendbreak/report.hpp"
#include "trendbreak/time_series.hpp"

namespace trendbreak {

struct PeltResult {
    std::vector<int> change_points;     // last index of each segment but the final one
    std::vector<double> segment_costs;  // per segment, in order
    double total_objective = 0.0;       // sum of costs + penalty * (#change points)
};

/// Exact penalized least-squares segmentation by the pruned dynamic program.
/// Segment cost is the within-segment sum of squared deviations from the
/// segment mean, O(1) per lookup via prefix sums.
///
/// candidate_step restricts admissible segment boundaries to multiples of the
/// step (the final boundary is always admissible); with step 1 and
/// min_segment_len 1 the result is the unconstrained optimum.
inline PeltResult pelt_l2(const TimeSeries& y, double penalty = 1.0,
                          int min_segment_len = 1, int candidate_step = 1) {
    if (!(penalty >= 0.0)) throw ParameterError("pelt_l2: penalty must be >= 0");
    if (min_segment_len < 1) throw ParameterError("pelt_l2: min_segment_len must be >= 1");
    if (candidate_step < 1) throw ParameterError("pelt_l2: candidate_step must be >= 1");
    const int n = static_cast<int>(y.size());

    std::vector<double> ps(n + 1, 0.0), ps2(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        ps[i + 1] = ps[i] + y.values[i];
        ps2[i + 1] = ps2[i] + y.values[i] * y.values[i];
    }
    auto seg_cost = [&](int a, int b) {  // indices [a, b)
        const double s = ps[b] - ps[a];
        const double s2 = ps2[b] - ps2[a];
        return s2 - s * s / static_cast<double>(b - a);
    };

    // Admissible boundaries: multiples of candidate_step, plus n itself.
    std::vector<int> bounds;
    for (int t = candidate_step; t < n; t += candidate_step) bounds.push_back(t);
    bounds.push_back(n);

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> F(n + 1, inf);
    std::vector<int> prev(n + 1, 0);
    F[0] = -penalty;
    // Candidates carry a removal deadline: a candidate dominated at boundary t
    // is only safe to drop once the dominating boundary itself is feasible,
    // i.e. from boundary t + min_segment_len on.
    struct Cand {
        int pos;
        int drop_at;  // INT_MAX while undominated
    };
    std::vector<Cand> candidates{{0, std::numeric_limits<int>::max()}};

    for (int t : bounds) {
        double best = inf;
        int arg = -1;
        for (const Cand& c : candidates) {
            if (t >= c.drop_at) continue;
            if (t - c.pos < min_segment_len) continue;
            const double v = F[c.pos] + seg_cost(c.pos, t) + penalty;
            if (v < best) {
                best = v;
                arg = c.pos;
            }
        }
        if (arg < 0) continue;
        F[t] = best;
        prev[t] = arg;
        std::vector<Cand> kept;
        kept.reserve(candidates.size() + 1);
        for (Cand c : candidates) {
            if (t >= c.drop_at) continue;  // expired
            if (t - c.pos >= min_segment_len && F[c.pos] + seg_cost(c.pos, t) > F[t]) {
                c.drop_at = std::min(c.drop_at, t + min_segment_len);
            }
            kept.push_back(c);
        }
        kept.push_back({t, std::numeric_limits<int>::max()});
        candidates = std::move(kept);
    }

    PeltResult res;
    std::vector<int> ends;  // exclusive segment ends, reversed
    for (int t = n; t != 0; t = prev[t]) ends.push_back(t);
    std::vector<double> costs;
    int b = n;
    for (std::size_t k = 0; k < ends.size(); ++k) {
        const int a = (k + 1 < ends.size()) ? ends[k + 1] : 0;
        costs.push_back(seg_cost(a, b));
        if (a != 0) res.change_points.push_back(a - 1);  // last index of the left segment
        b = a;
    }
    std::reverse(costs.begin(), costs.end());
    std::reverse(res.change_points.begin(), res.change_points.end());
    res.segment_costs = std::move(costs);
    res.total_objective = 0.0;
    for (double c : res.segment_costs) res.total_objective += c;
    res.total_objective += penalty * static_cast<double>(res.change_points.size());
    return res;
}

inline ChangePointReport pelt_report(const TimeSeries& y, const PeltResult& res,
                                     double penalty) {
    ChangePointReport rep;
    rep.method = Method::pelt;
    rep.penalty = penalty;
    rep.series_length = y.size();
    rep.flagged_indices = res.change_points;
    rep.intervals = merge_adjacent(rep.flagged_indices);
    // trend = per-segment means, for the rmse diagnostic
    std::vector<double> trend(y.size());
    std::size_t a = 0;
    std::vector<int> bounds = res.change_points;
    bounds.push_back(static_cast<int>(y.size()) - 1);
    for (int last : bounds) {
        double mean = 0.0;
        for (std::size_t i = a; i <= static_cast<std::size_t>(last); ++i) mean += y.values[i];
        mean /= static_cast<double>(last + 1 - static_cast<int>(a));
        for (std::size_t i = a; i <= static_cast<std::size_t>(last); ++i) trend[i] = mean;
        a = static_cast<std::size_t>(last) + 1;
    }
    rep.diagnostics.rmse = rmse(y.values, trend);
    rep.diagnostics.sigma2_hat = sigma2_second_diff(y.values);
    return rep;
}

}  // namespace trendbreak
