#pragma once
#include <limits>
#include <cstdint>

// Test-only oracles, independent of the library's solve paths.

#include <cmath>
#include <random>
#include <vector>

#include "trendbreak/linalg.hpp"
#include "trendbreak/rng.hpp"

namespace tbtest {

/// Dense Gaussian elimination with partial pivoting; the reference solver
/// for small systems.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        }
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double v = b[i];
        for (std::size_t c = i + 1; c < n; ++c) v -= a[i][c] * x[c];
        x[i] = v / a[i][i];
    }
    return x;
}

/// Dense matrix of a PentaSystem.
inline std::vector<std::vector<double>> dense_of(const trendbreak::PentaSystem& sys) {
    const std::size_t n = sys.n;
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        a[i][i] = sys.diag[i];
        if (i + 1 < n) a[i][i + 1] = a[i + 1][i] = sys.off1[i];
        if (i + 2 < n) a[i][i + 2] = a[i + 2][i] = sys.off2[i];
    }
    return a;
}

/// Dense n x n matrix for I + c * D2^T D2, built from the explicit D2.
inline std::vector<std::vector<double>> dense_hp_matrix(std::size_t n, double c) {
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
    for (std::size_t j = 0; j + 2 < n; ++j) {
        const double st[3] = {1.0, -2.0, 1.0};
        for (int p = 0; p < 3; ++p) {
            for (int q = 0; q < 3; ++q) {
                a[j + p][j + q] += c * st[p] * st[q];
            }
        }
    }
    return a;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed,
                                         double scale = 1.0) {
    trendbreak::NormalSampler rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.next(scale);
    return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

/// Best penalized-segmentation objective by exhaustive search (test oracle).
inline double brute_force_segmentation(const std::vector<double>& y, double penalty,
                                       int min_seg, int step = 1) {
    const int n = static_cast<int>(y.size());
    std::vector<double> ps(n + 1, 0.0), ps2(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        ps[i + 1] = ps[i] + y[i];
        ps2[i + 1] = ps2[i] + y[i] * y[i];
    }
    auto cost = [&](int a, int b) {
        const double s = ps[b] - ps[a], s2 = ps2[b] - ps2[a];
        return s2 - s * s / (b - a);
    };
    std::vector<int> interior;
    for (int t = step; t < n; t += step) interior.push_back(t);
    const int k = static_cast<int>(interior.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
        std::vector<int> bounds{0};
        for (int i = 0; i < k; ++i) {
            if (mask & (1u << i)) bounds.push_back(interior[i]);
        }
        bounds.push_back(n);
        bool feasible = true;
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
            if (bounds[i + 1] - bounds[i] < min_seg) {
                feasible = false;
                break;
            }
            total += cost(bounds[i], bounds[i + 1]);
        }
        if (!feasible) continue;
        total += penalty * static_cast<double>(bounds.size() - 2);
        best = std::min(best, total);
    }
    return best;
}

/// Exact minimizer of (1/2)||y-x||^2 + 2*lambda*||D2 x||_1 for tiny n by
/// enumerating the sign pattern of D2 x and checking the KKT conditions of
/// each candidate. Returns the optimal x.
inline std::vector<double> exact_l1tf_enumerated(const std::vector<double>& y, double lambda) {
    const std::size_t n = y.size();
    const std::size_t m = n - 2;
    auto d2_row = [&](std::size_t j, const std::vector<double>& x) {
        return x[j] - 2.0 * x[j + 1] + x[j + 2];
    };
    std::vector<int> pattern(m, 0);
    std::vector<double> best;
    double best_loss = 0.0;
    bool have = false;
    const std::size_t total = static_cast<std::size_t>(std::pow(3.0, double(m)));
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (std::size_t j = 0; j < m; ++j) {
            pattern[j] = static_cast<int>(c % 3) - 1;  // -1, 0, +1
            c /= 3;
        }
        // unknowns: x (n) and the dual entries v_j for zero-pattern rows.
        // stationarity: x - y + 2*lambda*D2^T u = 0 with u_j = pattern or free;
        // plus constraints D2 x = 0 on zero rows.
        std::vector<std::size_t> zrows;
        for (std::size_t j = 0; j < m; ++j) {
            if (pattern[j] == 0) zrows.push_back(j);
        }
        const std::size_t dim = n + zrows.size();
        std::vector<std::vector<double>> a(dim, std::vector<double>(dim, 0.0));
        std::vector<double> b(dim, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            a[i][i] = 1.0;
            b[i] = y[i];
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (pattern[j] != 0) {
                const double c2 = 2.0 * lambda * pattern[j];
                b[j] -= c2;
                b[j + 1] += 2.0 * c2;
                b[j + 2] -= c2;
            }
        }
        for (std::size_t k = 0; k < zrows.size(); ++k) {
            const std::size_t j = zrows[k];
            const double c2 = 2.0 * lambda;
            a[j][n + k] += c2;
            a[j + 1][n + k] -= 2.0 * c2;
            a[j + 2][n + k] += c2;
            a[n + k][j] = 1.0;
            a[n + k][j + 1] = -2.0;
            a[n + k][j + 2] = 1.0;
        }
        std::vector<double> sol;
        try {
            sol = dense_solve(a, b);
        } catch (...) {
            continue;
        }
        bool feasible = true;
        for (std::size_t k = 0; k < zrows.size(); ++k) {
            if (std::fabs(sol[n + k]) > 1.0 + 1e-9) feasible = false;
        }
        std::vector<double> x(sol.begin(), sol.begin() + n);
        for (std::size_t j = 0; j < m && feasible; ++j) {
            if (pattern[j] > 0 && d2_row(j, x) < -1e-9) feasible = false;
            if (pattern[j] < 0 && d2_row(j, x) > 1e-9) feasible = false;
        }
        if (!feasible) continue;
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) loss += 0.5 * (y[i] - x[i]) * (y[i] - x[i]);
        for (std::size_t j = 0; j < m; ++j) loss += 2.0 * lambda * std::fabs(d2_row(j, x));
        if (!have || loss < best_loss) {
            best = x;
            best_loss = loss;
            have = true;
        }
    }
    return best;
}

inline double ols_line_value(const std::vector<double>& y, std::size_t i) {
    const std::size_t n = y.size();
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        st += k;
        sy += y[k];
        stt += static_cast<double>(k) * k;
        sty += k * y[k];
    }
    const double nd = static_cast<double>(n);
    const double b = (nd * sty - st * sy) / (nd * stt - st * st);
    const double a = (sy - b * st) / nd;
    return a + b * static_cast<double>(i);
}

}  // namespace tbtest
