#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "trendbreak/errors.hpp"
#include "trendbreak/normal.hpp"
#include "trendbreak/time_series.hpp"

namespace trendbreak {

struct NormalityResult {
    double w = 0.0;
    double p_value = 0.0;
    std::size_t n = 0;
};

/// Shapiro-Wilk W and p-value, Royston's AS R94 approximation.
/// Valid for 3 <= n <= 5000. p for n > 11 uses the log-normalizing
/// transformation of (1 - W); small n use the published polynomial fits.
inline NormalityResult shapiro_wilk(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 3) throw ParameterError("shapiro_wilk: sample too small (n < 3)");
    if (n > 5000) throw ParameterError("shapiro_wilk: n > 5000 unsupported");

    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());

    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double ssq = 0.0;
    for (double v : x) ssq += (v - mean) * (v - mean);
    if (!(ssq > 0.0)) throw ParameterError("shapiro_wilk: degenerate sample (zero variance)");

    // Blom scores for expected normal order statistics.
    std::vector<double> m(n);
    double ssumm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) /
                               (static_cast<double>(n) + 0.25));
        ssumm2 += m[i] * m[i];
    }

    std::vector<double> a(n, 0.0);
    if (n == 3) {
        a[0] = -std::sqrt(0.5);
        a[2] = std::sqrt(0.5);
    } else {
        const double rsn = 1.0 / std::sqrt(static_cast<double>(n));
        const double an = -2.706056 * std::pow(rsn, 5) + 4.434685 * std::pow(rsn, 4) -
                          2.071190 * std::pow(rsn, 3) - 0.147981 * rsn * rsn +
                          0.221157 * rsn + m[n - 1] / std::sqrt(ssumm2);
        if (n > 5) {
            const double an1 = -3.582633 * std::pow(rsn, 5) + 5.682633 * std::pow(rsn, 4) -
                               1.752461 * std::pow(rsn, 3) - 0.293762 * rsn * rsn +
                               0.042981 * rsn + m[n - 2] / std::sqrt(ssumm2);
            const double phi = (ssumm2 - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                               (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
            const double fac = std::sqrt(phi);
            for (std::size_t i = 2; i + 2 < n; ++i) a[i] = m[i] / fac;
            a[n - 1] = an;
            a[n - 2] = an1;
            a[0] = -an;
            a[1] = -an1;
        } else {
            const double phi = (ssumm2 - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
            const double fac = std::sqrt(phi);
            for (std::size_t i = 1; i + 1 < n; ++i) a[i] = m[i] / fac;
            a[n - 1] = an;
            a[0] = -an;
        }
    }

    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i) num += a[i] * x[i];
    double w = num * num / ssq;
    if (w > 1.0) w = 1.0;

    double p;
    const double nd = static_cast<double>(n);
    if (n == 3) {
        p = 1.90985931710274 * (std::asin(std::sqrt(w)) - 1.04719755119660);
        p = std::clamp(p, 0.0, 1.0);
    } else if (n <= 11) {
        const double g = -2.273 + 0.459 * nd;
        const double mu = 0.5440 - 0.39978 * nd + 0.025054 * nd * nd - 0.0006714 * nd * nd * nd;
        const double sig =
            std::exp(1.3822 - 0.77857 * nd + 0.062767 * nd * nd - 0.0020322 * nd * nd * nd);
        const double arg = g - std::log1p(-w);
        if (!(arg > 0.0)) {
            p = 0.0;
        } else {
            const double z = (-std::log(arg) - mu) / sig;
            p = normal_sf(z);
        }
    } else {
        const double ln = std::log(nd);
        const double mu = -1.5861 - 0.31082 * ln - 0.083751 * ln * ln + 0.0038915 * ln * ln * ln;
        const double sig = std::exp(-0.4803 - 0.082676 * ln + 0.0030302 * ln * ln);
        const double z = (std::log1p(-w) - mu) / sig;
        p = normal_sf(z);
    }
    return NormalityResult{w, p, n};
}

/// (1 / (2(T-1))) * sum of squared second differences of y; estimates the
/// per-step noise variance of a drifting random walk.
inline double sigma2_second_diff(std::span<const double> y) {
    const std::size_t n = y.size();
    if (n < 3) throw DimensionError("sigma2_second_diff needs length >= 3");
    double acc = 0.0;
    for (std::size_t j = 0; j + 2 < n; ++j) {
        const double d = y[j] - 2.0 * y[j + 1] + y[j + 2];
        acc += d * d;
    }
    return acc / (2.0 * static_cast<double>(n - 2));
}

/// Sum of squared residuals divided by T (note: T, not T+1, while the sum
/// runs over all T+1 terms).
inline double sigma2_residual_mse(std::span<const double> y, std::span<const double> trend) {
    if (y.size() != trend.size()) throw DimensionError("sigma2_residual_mse: length mismatch");
    if (y.size() < 2) throw DimensionError("sigma2_residual_mse: need length >= 2");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - trend[i];
        acc += r * r;
    }
    return acc / static_cast<double>(y.size() - 1);
}

inline double rmse(std::span<const double> y, std::span<const double> trend) {
    return std::sqrt(sigma2_residual_mse(y, trend));
}

/// Half-open detection intervals in index units: [lo, hi] expresses a change
/// somewhere between index lo and index hi.
struct Interval {
    int lo = 0;
    int hi = 0;
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Maximal runs of consecutive flagged indices become [first, last+1];
/// an isolated index i becomes [i, i+1] ("change between i and i+1").
inline std::vector<Interval> merge_adjacent(std::span<const int> indices) {
    std::vector<Interval> out;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (k > 0 && indices[k] <= indices[k - 1]) {
            throw ParameterError("merge_adjacent: indices must be strictly increasing");
        }
        if (!out.empty() && indices[k] == out.back().hi) {
            out.back().hi = indices[k] + 1;
        } else {
            out.push_back(Interval{indices[k], indices[k] + 1});
        }
    }
    return out;
}

struct DetectionMetrics {
    int true_positives = 0;
    int false_positives = 0;
    double fdr = 0.0;
    std::map<int, int> per_true_cp_hits;  // true cp index -> 0/1
};

/// Interval-containment scoring. Each true change point claims its closest
/// covering interval (within slack); an interval is a true positive if it was
/// claimed at least once; TP + FP equals the number of intervals; FDR is
/// FP/(FP+TP), defined as 0 when nothing was detected.
inline DetectionMetrics score_detections(std::span<const Interval> intervals,
                                         std::span<const int> true_cps, int slack = 0) {
    if (slack < 0) throw ParameterError("score_detections: slack must be >= 0");
    for (std::size_t k = 1; k < intervals.size(); ++k) {
        if (intervals[k].lo <= intervals[k - 1].hi) {
            throw ParameterError("score_detections: intervals must be sorted and non-overlapping");
        }
    }
    DetectionMetrics mx;
    std::vector<bool> claimed(intervals.size(), false);
    for (int cp : true_cps) {
        int best = -1;
        int best_dist = 0;
        for (std::size_t k = 0; k < intervals.size(); ++k) {
            const Interval& iv = intervals[k];
            if (cp < iv.lo - slack || cp > iv.hi + slack) continue;
            const int dist = (cp >= iv.lo && cp <= iv.hi)
                                 ? 0
                                 : std::min(std::abs(cp - iv.lo), std::abs(cp - iv.hi));
            if (best < 0 || dist < best_dist) {
                best = static_cast<int>(k);
                best_dist = dist;
            }
        }
        if (best >= 0) {
            claimed[best] = true;
            mx.per_true_cp_hits[cp] = 1;
        } else {
            mx.per_true_cp_hits[cp] = 0;
        }
    }
    for (bool c : claimed) mx.true_positives += c ? 1 : 0;
    mx.false_positives = static_cast<int>(intervals.size()) - mx.true_positives;
    const int total = mx.true_positives + mx.false_positives;
    mx.fdr = total > 0 ? static_cast<double>(mx.false_positives) / total : 0.0;
    return mx;
}

}  // namespace trendbreak
