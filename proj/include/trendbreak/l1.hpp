#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "trendbreak/linalg.hpp"
#include "trendbreak/normal.hpp"
#include "trendbreak/report.hpp"
#include "trendbreak/stats.hpp"
#include "trendbreak/time_series.hpp"

namespace trendbreak {

struct RpropConfig {
    double eta_plus = 1.2;
    double eta_minus = 0.5;
    double s_max = 50.0;
    double s_min = 1e-6;
    double s_init = 1e-2;
};

struct ProximalConfig {
    double step_size = 1.0;            // outer gradient step, in (0, 1]
    int inner_max_iterations = 20000;  // splitting iterations per prox evaluation
    double inner_tolerance = 1e-10;    // residual tolerance, relative to data scale
};

struct L1Config {
    int max_iterations = 400;
    RpropConfig rprop;
    ProximalConfig proximal;
    double w_floor = 1e-8;  // clamp for |D2 x| when forming reweighted systems
};

enum class Optimizer { rprop, proximal };

struct L1Fit {
    double lambda = 0.0;
    std::vector<double> trend;
    std::vector<double> residuals;
    std::vector<double> kink_magnitudes;  // |(D2 trend)_j|, j = 0..T-2
    double df_hat = 0.0;
    std::vector<double> loss_trace;
    Optimizer optimizer = Optimizer::rprop;
    int iterations_run = 0;
    bool converged = false;
};

/// (1/2)||y - x||^2 + 2*lambda*||D2 x||_1.
inline double l1_loss(std::span<const double> y, std::span<const double> x, double lambda) {
    if (y.size() != x.size()) throw DimensionError("l1_loss: length mismatch");
    double quad = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - x[i];
        quad += r * r;
    }
    double pen = 0.0;
    for (std::size_t j = 0; j + 2 < x.size(); ++j) {
        pen += std::fabs(x[j] - 2.0 * x[j + 1] + x[j + 2]);
    }
    return 0.5 * quad + 2.0 * lambda * pen;
}

/// x - y + 2*lambda*D2^T sgn(D2 x), with sgn(0) = 0.
inline std::vector<double> l1_subgradient(std::span<const double> y, std::span<const double> x,
                                          double lambda) {
    if (y.size() != x.size()) throw DimensionError("l1_subgradient: length mismatch");
    const std::size_t n = x.size();
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = x[i] - y[i];
    for (std::size_t j = 0; j + 2 < n; ++j) {
        const double d = x[j] - 2.0 * x[j + 1] + x[j + 2];
        const double s = (d > 0.0) ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        const double c = 2.0 * lambda * s;
        g[j] += c;
        g[j + 1] -= 2.0 * c;
        g[j + 2] += c;
    }
    return g;
}

namespace detail {

inline void fill_fit_outputs(L1Fit& fit, const std::vector<double>& y,
                             const std::vector<double>& x) {
    const std::size_t n = y.size();
    fit.trend = x;
    fit.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i) fit.residuals[i] = y[i] - x[i];
    fit.kink_magnitudes.resize(n - 2);
    for (std::size_t j = 0; j + 2 < n; ++j) {
        fit.kink_magnitudes[j] = std::fabs(x[j] - 2.0 * x[j + 1] + x[j + 2]);
    }
}

inline bool trailing_window_converged(const std::vector<double>& trace, int window = 10,
                                      double tol = 1e-6) {
    const std::size_t k = trace.size();
    if (k <= static_cast<std::size_t>(window)) return false;
    const double ref = trace[k - 1 - window];
    const double denom = std::max(std::fabs(ref), 1e-300);
    return std::fabs(trace[k - 1] - ref) / denom < tol;
}

}  // namespace detail

/// Estimated maximum number of change points at this penalty: the count of
/// kinks exceeding the two-sided z band of the null curvature scale
/// sqrt(2 * sigma2_mse), floored at the alpha-level per-point budget
/// ceil(alpha * (T+1)). At lambda = 0 every interior point counts (T-1).
inline double l1_df(const L1Fit& fit, double lambda, double alpha = 0.05) {
    const std::size_t n = fit.trend.size();
    const double cap = static_cast<double>(n - 2);
    if (lambda == 0.0) return cap;
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = fit.trend[i] + fit.residuals[i];
    const double s2 = sigma2_residual_mse(y, fit.trend);
    const double band = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(2.0 * s2);
    int count = 0;
    for (double k : fit.kink_magnitudes) {
        if (k > band) ++count;
    }
    const int floor_count = static_cast<int>(std::ceil(alpha * static_cast<double>(n)));
    const double df = std::max(static_cast<double>(count), static_cast<double>(floor_count));
    return std::clamp(df, 0.0, cap);
}

/// Reweighted system I + 2*lambda*D2^T W^-1 D2 with W^-1 = 1/max(|kink|, w_floor).
/// Positive definite for every fit by construction.
inline PentaSystem l1_reweighted_system(const L1Fit& fit, double lambda,
                                        double w_floor = 1e-8) {
    const std::size_t n = fit.trend.size();
    std::vector<double> winv(n - 2);
    for (std::size_t j = 0; j < winv.size(); ++j) {
        winv[j] = 1.0 / std::max(fit.kink_magnitudes[j], w_floor);
    }
    return penta_identity_plus_weighted_dtd(n, 2.0 * lambda, winv);
}

/// Sign-based adaptive-step fit (resilient backpropagation family).
///
/// Works on the box-constrained dual of the objective: minimize
/// (1/2)||y - D2^T v||^2 over ||v||_inf <= 2*lambda, with trend = y - D2^T v.
/// Per-coordinate steps grow by eta_plus while consecutive gradient signs
/// agree and shrink by eta_minus on a flip (the flipped component is zeroed
/// for one iteration). The primal loss is recorded every iteration.
inline L1Fit l1_fit_rprop(const TimeSeries& y, double lambda, const L1Config& config = {}) {
    validate_series(y);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ParameterError("l1_fit_rprop: lambda must be finite and > 0");
    }
    const std::size_t n = y.size();
    const std::size_t m = n - 2;
    const double box = 2.0 * lambda;
    const RpropConfig& rc = config.rprop;

    std::vector<double> v(m, 0.0), g_prev(m, 0.0), step(m, rc.s_init);
    std::vector<double> x(n), g(m);
    L1Fit fit;
    fit.lambda = lambda;
    fit.optimizer = Optimizer::rprop;
    fit.loss_trace.reserve(static_cast<std::size_t>(config.max_iterations));

    for (int it = 0; it < config.max_iterations; ++it) {
        // x = y - D2^T v, g = -D2 x
        x = y.values;
        for (std::size_t j = 0; j < m; ++j) {
            x[j] -= v[j];
            x[j + 1] += 2.0 * v[j];
            x[j + 2] -= v[j];
        }
        for (std::size_t j = 0; j < m; ++j) {
            g[j] = -(x[j] - 2.0 * x[j + 1] + x[j + 2]);
        }
        for (std::size_t j = 0; j < m; ++j) {
            const double prod = g[j] * g_prev[j];
            if (prod > 0.0) {
                step[j] = std::min(step[j] * rc.eta_plus, rc.s_max);
            } else if (prod < 0.0) {
                step[j] = std::max(step[j] * rc.eta_minus, rc.s_min);
                g[j] = 0.0;
            }
            if (g[j] > 0.0) {
                v[j] -= step[j];
            } else if (g[j] < 0.0) {
                v[j] += step[j];
            }
            v[j] = std::clamp(v[j], -box, box);
            g_prev[j] = g[j];
        }
        x = y.values;
        for (std::size_t j = 0; j < m; ++j) {
            x[j] -= v[j];
            x[j + 1] += 2.0 * v[j];
            x[j + 2] -= v[j];
        }
        fit.loss_trace.push_back(l1_loss(y.values, x, lambda));
        fit.iterations_run = it + 1;
    }
    // Active-set polish: coordinates pinned at the box stay put; the free
    // block solves its least-squares condition exactly (one banded solve on
    // (D2 D2^T)_FF, still pentadiagonal under the compressed indexing).
    // Accepted only if it does not increase the loss.
    {
        std::vector<int> free_idx;
        for (std::size_t j = 0; j < m; ++j) {
            if (std::fabs(v[j]) < box * (1.0 - 1e-12)) free_idx.push_back(static_cast<int>(j));
        }
        if (!free_idx.empty()) {
            std::vector<double> r = y.values;  // y - D2^T v restricted to active part
            for (std::size_t j = 0; j < m; ++j) {
                if (std::fabs(v[j]) >= box * (1.0 - 1e-12)) {
                    r[j] -= v[j];
                    r[j + 1] += 2.0 * v[j];
                    r[j + 2] -= v[j];
                }
            }
            const std::size_t f = free_idx.size();
            PentaSystem sys;
            sys.n = f;
            sys.diag.assign(f, 6.0);
            sys.off1.assign(f > 1 ? f - 1 : 0, 0.0);
            sys.off2.assign(f > 2 ? f - 2 : 0, 0.0);
            sys.rhs.assign(f, 0.0);
            for (std::size_t a = 0; a < f; ++a) {
                if (a + 1 < f && free_idx[a + 1] - free_idx[a] == 1) sys.off1[a] = -4.0;
                if (a + 1 < f && free_idx[a + 1] - free_idx[a] == 2) sys.off1[a] = 1.0;
                if (a + 2 < f && free_idx[a + 2] - free_idx[a] == 2) sys.off2[a] = 1.0;
                const int j = free_idx[a];
                sys.rhs[a] = r[j] - 2.0 * r[j + 1] + r[j + 2];
            }
            try {
                const std::vector<double> vf = solve_penta(sys);
                std::vector<double> v_new = v;
                for (std::size_t a = 0; a < f; ++a) {
                    v_new[free_idx[a]] = std::clamp(vf[a], -box, box);
                }
                std::vector<double> x_new = y.values;
                for (std::size_t j = 0; j < m; ++j) {
                    x_new[j] -= v_new[j];
                    x_new[j + 1] += 2.0 * v_new[j];
                    x_new[j + 2] -= v_new[j];
                }
                const double cand = l1_loss(y.values, x_new, lambda);
                if (!fit.loss_trace.empty() && cand <= fit.loss_trace.back()) {
                    x = std::move(x_new);
                    fit.loss_trace.push_back(cand);
                }
            } catch (const SingularityError&) {
                // keep the unpolished iterate
            }
        }
    }
    fit.converged = detail::trailing_window_converged(fit.loss_trace);
    detail::fill_fit_outputs(fit, y.values, x);
    fit.df_hat = l1_df(fit, lambda);
    return fit;
}

namespace detail {

/// prox of t*||D2 . ||_1 at v, by ADMM with a banded normal-equation solve.
/// Splitting: minimize (1/2)||u - v||^2 + t*||z||_1 s.t. D2 u = z.
inline std::vector<double> curvature_l1_prox(const std::vector<double>& v, double t,
                                             const ProximalConfig& pc) {
    const std::size_t n = v.size();
    const std::size_t m = n - 2;
    const double rho = std::max(t, 1.0);
    PentaSystem sys = penta_identity_plus_scaled_dtd(n, rho);
    PentaCholesky fact(sys);

    double scale = 1.0;
    for (double a : v) scale = std::max(scale, std::fabs(a));
    const double tol = pc.inner_tolerance * scale;

    std::vector<double> z(m), w(m, 0.0), u(v), rhs(n), du(m);
    for (std::size_t j = 0; j < m; ++j) z[j] = v[j] - 2.0 * v[j + 1] + v[j + 2];
    for (int it = 0; it < pc.inner_max_iterations; ++it) {
        rhs = v;
        for (std::size_t j = 0; j < m; ++j) {
            const double c = rho * (z[j] - w[j]);
            rhs[j] += c;
            rhs[j + 1] -= 2.0 * c;
            rhs[j + 2] += c;
        }
        u = fact.solve(rhs);
        for (std::size_t j = 0; j < m; ++j) du[j] = u[j] - 2.0 * u[j + 1] + u[j + 2];
        double primal_res = 0.0, dual_res = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double a = du[j] + w[j];
            const double zn = std::copysign(std::max(std::fabs(a) - t / rho, 0.0), a);
            dual_res = std::max(dual_res, rho * std::fabs(zn - z[j]));
            z[j] = zn;
            w[j] += du[j] - z[j];
            primal_res = std::max(primal_res, std::fabs(du[j] - z[j]));
        }
        if (primal_res < tol && dual_res < tol) break;
    }
    return u;
}

}  // namespace detail

/// Proximal gradient descent on the composite objective: gradient step on the
/// quadratic part (unit curvature, so step_size <= 1), then the exact
/// proximal map of the curvature penalty evaluated by an inner splitting
/// solver. The recorded loss trace is non-increasing; with the default unit
/// step the first proximal step already lands on the minimizer.
inline L1Fit l1_fit_proximal(const TimeSeries& y, double lambda, const L1Config& config = {}) {
    validate_series(y);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ParameterError("l1_fit_proximal: lambda must be finite and > 0");
    }
    const double s = config.proximal.step_size;
    if (!(s > 0.0 && s <= 1.0)) {
        throw ParameterError("l1_fit_proximal: step_size must be in (0, 1]");
    }
    const std::size_t n = y.size();
    L1Fit fit;
    fit.lambda = lambda;
    fit.optimizer = Optimizer::proximal;

    std::vector<double> x = y.values;
    double prev_loss = l1_loss(y.values, x, lambda);
    for (int it = 0; it < config.max_iterations; ++it) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = x[i] - s * (x[i] - y.values[i]);
        x = detail::curvature_l1_prox(v, 2.0 * lambda * s, config.proximal);
        const double cur = l1_loss(y.values, x, lambda);
        fit.loss_trace.push_back(cur);
        fit.iterations_run = it + 1;
        if (it >= 1 && std::fabs(prev_loss - cur) <= 1e-12 * std::max(1.0, std::fabs(cur))) {
            fit.converged = true;
            break;
        }
        prev_loss = cur;
    }
    if (!fit.converged) fit.converged = detail::trailing_window_converged(fit.loss_trace);
    detail::fill_fit_outputs(fit, y.values, x);
    fit.df_hat = l1_df(fit, lambda);
    return fit;
}

inline L1Fit l1_fit(const TimeSeries& y, double lambda, Optimizer opt,
                    const L1Config& config = {}) {
    return opt == Optimizer::rprop ? l1_fit_rprop(y, lambda, config)
                                   : l1_fit_proximal(y, lambda, config);
}

struct MaxDfRule {};
struct PercentileRule {
    double alpha = 0.05;
};
struct TopKRule {
    int k = 2;
};
using ThresholdRule = std::variant<MaxDfRule, PercentileRule, TopKRule>;

inline std::string threshold_rule_name(const ThresholdRule& rule) {
    if (std::holds_alternative<MaxDfRule>(rule)) return "max-df";
    if (const auto* p = std::get_if<PercentileRule>(&rule)) {
        return "percentile:" + std::to_string(p->alpha);
    }
    return "top-k:" + std::to_string(std::get<TopKRule>(rule).k);
}

namespace detail {

/// Indices (into the kink array) of the k largest magnitudes; ties at the
/// boundary resolve toward fewer detections.
inline std::vector<int> top_k_kinks(std::span<const double> mags, int k) {
    const int m = static_cast<int>(mags.size());
    if (k <= 0) return {};
    k = std::min(k, m);
    std::vector<double> sorted(mags.begin(), mags.end());
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end(),
                     std::greater<double>());
    const double thr = sorted[k - 1];
    int ge = 0;
    for (double v : mags) ge += (v >= thr) ? 1 : 0;
    std::vector<int> out;
    for (int j = 0; j < m; ++j) {
        if (mags[j] <= 0.0) continue;  // an exactly flat stretch is never a kink
        if (ge > k ? mags[j] > thr : mags[j] >= thr) out.push_back(j);
    }
    return out;
}

}  // namespace detail

/// Threshold detection on kink magnitudes. Kink row j sits at series index
/// j+1 (the curvature is centered there); flagged indices use series
/// coordinates and are merged into intervals.
inline ChangePointReport l1_threshold_detect(const L1Fit& fit, const ThresholdRule& rule) {
    const std::size_t m = fit.kink_magnitudes.size();
    std::vector<int> rows;
    if (std::holds_alternative<MaxDfRule>(rule)) {
        const int k = static_cast<int>(std::ceil(fit.df_hat));
        rows = detail::top_k_kinks(fit.kink_magnitudes, k);
    } else if (const auto* pr = std::get_if<PercentileRule>(&rule)) {
        if (!(pr->alpha > 0.0 && pr->alpha < 1.0)) {
            throw ParameterError("percentile rule: alpha must be in (0,1)");
        }
        // nearest-rank (1-alpha) percentile
        std::vector<double> sorted(fit.kink_magnitudes.begin(), fit.kink_magnitudes.end());
        std::sort(sorted.begin(), sorted.end());
        const std::size_t rank = static_cast<std::size_t>(
            std::ceil((1.0 - pr->alpha) * static_cast<double>(m)));
        const double thr = sorted[std::min(std::max<std::size_t>(rank, 1), m) - 1];
        for (std::size_t j = 0; j < m; ++j) {
            if (fit.kink_magnitudes[j] > 0.0 && fit.kink_magnitudes[j] >= thr) {
                rows.push_back(static_cast<int>(j));
            }
        }
    } else {
        const int k = std::get<TopKRule>(rule).k;
        if (k > static_cast<int>(m)) throw ParameterError("top-k rule: k exceeds T-1");
        rows = detail::top_k_kinks(fit.kink_magnitudes, k);
    }

    ChangePointReport rep;
    rep.method = Method::l1;
    rep.lambda = fit.lambda;
    rep.threshold_rule = threshold_rule_name(rule);
    rep.series_length = fit.trend.size();
    for (int j : rows) rep.flagged_indices.push_back(j + 1);
    std::sort(rep.flagged_indices.begin(), rep.flagged_indices.end());
    rep.intervals = merge_adjacent(rep.flagged_indices);
    std::vector<double> y(fit.trend.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = fit.trend[i] + fit.residuals[i];
    rep.diagnostics.rmse = rmse(y, fit.trend);
    rep.diagnostics.df_hat = fit.df_hat;
    rep.diagnostics.sigma2_hat = sigma2_residual_mse(y, fit.trend);
    return rep;
}

/// 1 / ((T-1) * sigma).
inline double l1_lambda_lower_bound(double sigma, int T) {
    if (!(sigma > 0.0)) throw ParameterError("l1_lambda_lower_bound: sigma must be > 0");
    if (T < 2) throw ParameterError("l1_lambda_lower_bound: T must be >= 2");
    return 1.0 / (static_cast<double>(T - 1) * sigma);
}

/// Residual scale of the asymptotic (affine) fit: the large-lambda limit of
/// the trend is the least-squares line, since affine sequences are the null
/// space of the curvature penalty.
inline double affine_fit_sigma(const TimeSeries& y) {
    const std::size_t n = y.size();
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        st += t;
        sy += y.values[i];
        stt += t * t;
        sty += t * y.values[i];
    }
    const double nd = static_cast<double>(n);
    const double denom = nd * stt - st * st;
    const double b = (nd * sty - st * sy) / denom;
    const double a = (sy - b * st) / nd;
    std::vector<double> line(n);
    for (std::size_t i = 0; i < n; ++i) line[i] = a + b * static_cast<double>(i);
    return std::sqrt(sigma2_residual_mse(y.values, line));
}

struct L1LambdaRow {
    double lambda = 0.0;
    double shapiro_p = 0.0;
    double rmse = 0.0;
    double df_hat = 0.0;
    bool lower_bound_ok = false;
};

struct L1ScanResult {
    std::vector<L1LambdaRow> rows;
    std::optional<double> selected_lambda;
    double lambda_lower_bound = 0.0;
};

/// Grid scan: per lambda fit (RPROP by default), Shapiro-Wilk p on the
/// standardized residuals, RMSE, df estimate, and the lower-bound flag.
/// Selected lambda is the smallest grid value with p > alpha that clears the
/// lower bound; absent when none qualifies.
inline L1ScanResult l1_lambda_scan(const TimeSeries& y, std::span<const double> grid,
                                   double alpha = 0.05, const L1Config& config = {},
                                   Optimizer opt = Optimizer::rprop) {
    validate_series(y);
    if (grid.empty()) throw ParameterError("l1_lambda_scan: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw ParameterError("l1_lambda_scan: grid must ascend");
    }
    if (!(grid.front() > 0.0)) throw ParameterError("l1_lambda_scan: grid must be positive");

    L1ScanResult res;
    res.lambda_lower_bound = l1_lambda_lower_bound(affine_fit_sigma(y), y.horizon());
    for (double lam : grid) {
        L1Fit fit = l1_fit(y, lam, opt, config);
        L1LambdaRow row;
        row.lambda = lam;
        row.rmse = rmse(y.values, fit.trend);
        row.df_hat = fit.df_hat;
        row.lower_bound_ok = lam >= res.lambda_lower_bound;
        const double s2 = sigma2_residual_mse(y.values, fit.trend);
        if (s2 > 0.0) {
            std::vector<double> std_resid(fit.residuals);
            const double s = std::sqrt(s2);
            for (double& r : std_resid) r /= s;
            row.shapiro_p = shapiro_wilk(std_resid).p_value;
        } else {
            row.shapiro_p = 1.0;
        }
        if (!res.selected_lambda && row.shapiro_p > alpha && row.lower_bound_ok) {
            res.selected_lambda = lam;
        }
        res.rows.push_back(row);
    }
    return res;
}

}  // namespace trendbreak
