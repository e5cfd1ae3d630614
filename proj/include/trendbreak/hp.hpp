#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "trendbreak/linalg.hpp"
#include "trendbreak/normal.hpp"
#include "trendbreak/report.hpp"
#include "trendbreak/stats.hpp"
#include "trendbreak/time_series.hpp"

namespace trendbreak {

/// Quadratic-smoothing trend fit: trend = (I + 2*lambda*D2^T D2)^-1 y.
struct HpFit {
    double lambda = 0.0;
    std::vector<double> trend;
    std::vector<double> residuals;            // y - trend
    std::vector<double> residual_variances;   // diag of 8 l^2 s^2 M^-1 D2^T D2 M^-1
    double sigma2_hat = 0.0;                  // second-difference noise estimate
};

/// Diagonal of 8 lambda^2 sigma2 * M^-1 D2^T D2 M^-1 with M = I + 2 lambda D2^T D2,
/// computed column by column with banded solves: entry t is
/// 8 l^2 s^2 * ||D2 (M^-1 e_t)||^2. No dense matrix is formed.
inline std::vector<double> hp_residual_variance_diag(double lambda, double sigma2,
                                                     std::size_t n) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ParameterError("hp_residual_variance_diag: lambda must be finite and >= 0");
    }
    if (!(sigma2 >= 0.0)) throw ParameterError("hp_residual_variance_diag: sigma2 must be >= 0");
    std::vector<double> out(n, 0.0);
    if (lambda == 0.0 || sigma2 == 0.0) return out;
    PentaSystem sys = penta_identity_plus_scaled_dtd(n, 2.0 * lambda);
    PentaCholesky fact(sys);
    const double scale = 8.0 * lambda * lambda * sigma2;
    std::vector<double> e(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        e[t] = 1.0;
        std::vector<double> col = fact.solve(e);
        e[t] = 0.0;
        double acc = 0.0;
        for (std::size_t j = 0; j + 2 < n; ++j) {
            const double d = col[j] - 2.0 * col[j + 1] + col[j + 2];
            acc += d * d;
        }
        out[t] = scale * acc;
    }
    return out;
}

inline HpFit hp_fit(const TimeSeries& y, double lambda) {
    validate_series(y);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ParameterError("hp_fit: lambda must be finite and >= 0");
    }
    const std::size_t n = y.size();
    HpFit fit;
    fit.lambda = lambda;
    if (lambda == 0.0) {
        fit.trend = y.values;
        fit.residuals.assign(n, 0.0);
    } else {
        PentaSystem sys = penta_identity_plus_scaled_dtd(n, 2.0 * lambda);
        sys.rhs = y.values;
        fit.trend = solve_penta(sys);
        fit.residuals.resize(n);
        for (std::size_t i = 0; i < n; ++i) fit.residuals[i] = y.values[i] - fit.trend[i];
    }
    fit.sigma2_hat = sigma2_second_diff(y.values);
    fit.residual_variances = hp_residual_variance_diag(lambda, fit.sigma2_hat, n);
    return fit;
}

/// Flags index t when |residual_t| exceeds the two-sided z band of the fit's
/// own residual scale, sqrt((1/T) * sum residual^2). Indices whose model
/// residual variance is exactly zero are never flagged.
inline ChangePointReport hp_detect(const HpFit& fit, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("hp_detect: alpha must be in (0,1)");
    const std::size_t n = fit.residuals.size();
    ChangePointReport rep;
    rep.method = Method::hp;
    rep.lambda = fit.lambda;
    rep.alpha = alpha;
    rep.series_length = n;

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = fit.trend[i] + fit.residuals[i];
    const double s2 = sigma2_residual_mse(y, fit.trend);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const double band = z * std::sqrt(s2);
    for (std::size_t t = 0; t < n; ++t) {
        if (fit.residual_variances[t] <= 0.0) continue;
        if (std::fabs(fit.residuals[t]) > band) {
            rep.flagged_indices.push_back(static_cast<int>(t));
        }
    }
    rep.intervals = merge_adjacent(rep.flagged_indices);
    rep.diagnostics.rmse = std::sqrt(s2);
    rep.diagnostics.sigma2_hat = fit.sigma2_hat;
    return rep;
}

/// P(at least one change point in a window of length h) under the rate-mu
/// model, as the detector defines it: 1 - (mu*h) * exp(-mu*h).
/// Note the expression equals 1 at mu = 0, dips to 1 - 1/e at mu*h = 1, and
/// rises back toward 1 as mu*h grows.
inline double poisson_prob_at_least_one(double mu, double h) {
    if (!(mu >= 0.0)) throw ParameterError("poisson_prob_at_least_one: mu must be >= 0");
    if (!(h > 0.0)) throw ParameterError("poisson_prob_at_least_one: h must be > 0");
    const double mh = mu * h;
    return 1.0 - mh * std::exp(-mh);
}

struct HpLambdaRow {
    double lambda = 0.0;
    double shapiro_p = 0.0;
    double rmse = 0.0;
    int n_detected = 0;       // flagged indices before merging
    double mu_hat = 0.0;      // n_detected / (T+1)
    double prob_at_least_one = 0.0;
};

struct HpScanResult {
    std::vector<HpLambdaRow> rows;
    std::optional<double> selected_lambda;
};

/// Grid scan: per lambda, fit, detect at alpha, estimate the detection rate
/// mu = count/(T+1) with h = 1, and select the largest lambda whose
/// probability reaches prob_threshold.
inline HpScanResult hp_lambda_scan(const TimeSeries& y, std::span<const double> grid,
                                   double alpha = 0.05, double prob_threshold = 0.95) {
    validate_series(y);
    if (grid.empty()) throw ParameterError("hp_lambda_scan: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw ParameterError("hp_lambda_scan: grid must ascend");
    }
    HpScanResult res;
    for (double lam : grid) {
        HpFit fit = hp_fit(y, lam);
        ChangePointReport rep = hp_detect(fit, alpha);
        HpLambdaRow row;
        row.lambda = lam;
        row.n_detected = static_cast<int>(rep.flagged_indices.size());
        row.mu_hat = static_cast<double>(row.n_detected) / static_cast<double>(y.size());
        row.prob_at_least_one = poisson_prob_at_least_one(row.mu_hat, 1.0);
        row.rmse = rmse(y.values, fit.trend);
        bool degenerate = true;
        for (double r : fit.residuals) {
            if (r != fit.residuals[0]) { degenerate = false; break; }
        }
        row.shapiro_p = degenerate ? 1.0 : shapiro_wilk(fit.residuals).p_value;
        if (row.prob_at_least_one >= prob_threshold) res.selected_lambda = lam;
        res.rows.push_back(row);
    }
    return res;
}

}  // namespace trendbreak
