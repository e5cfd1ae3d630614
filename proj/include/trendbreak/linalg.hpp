#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "trendbreak/errors.hpp"

namespace trendbreak {

// Index convention used throughout: series index t = 0..n-1; the second
// difference has rows j = 0..n-3 with row j reading x[j] - 2x[j+1] + x[j+2],
// i.e. the curvature centered at series index j+1.

/// D2 x for x of length n >= 3; output length n-2.
inline std::vector<double> second_difference(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 3) {
        throw DimensionError("second_difference needs length >= 3, got " +
                             std::to_string(n));
    }
    std::vector<double> d(n - 2);
    for (std::size_t j = 0; j + 2 < n; ++j) {
        d[j] = x[j] - 2.0 * x[j + 1] + x[j + 2];
    }
    return d;
}

/// D2^T v for v of length n-2; output length n.
inline std::vector<double> second_difference_transpose_apply(std::span<const double> v,
                                                             std::size_t n) {
    if (n < 3 || v.size() != n - 2) {
        throw DimensionError("second_difference_transpose_apply: v must have length n-2");
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < v.size(); ++j) {
        out[j] += v[j];
        out[j + 1] -= 2.0 * v[j];
        out[j + 2] += v[j];
    }
    return out;
}

/// Symmetric pentadiagonal system M x = rhs with M = I + c * D2^T W D2
/// (W diagonal, positive). Only the main diagonal and the two upper
/// off-diagonals are stored; M is symmetric by construction.
struct PentaSystem {
    std::size_t n = 0;
    std::vector<double> diag;   // length n
    std::vector<double> off1;   // length n-1
    std::vector<double> off2;   // length n-2
    std::vector<double> rhs;    // length n
};

/// I + c * D2^T diag(w) D2, accumulated row by row of D2.
inline PentaSystem penta_identity_plus_weighted_dtd(std::size_t n, double c,
                                                    std::span<const double> w) {
    if (n < 3 || w.size() != n - 2) {
        throw DimensionError("penta builder: weight vector must have length n-2");
    }
    PentaSystem sys;
    sys.n = n;
    sys.diag.assign(n, 1.0);
    sys.off1.assign(n - 1, 0.0);
    sys.off2.assign(n - 2, 0.0);
    sys.rhs.assign(n, 0.0);
    for (std::size_t j = 0; j + 2 < n; ++j) {
        const double cw = c * w[j];
        // outer product of the row stencil (1, -2, 1) at columns j, j+1, j+2
        sys.diag[j] += cw;
        sys.diag[j + 1] += 4.0 * cw;
        sys.diag[j + 2] += cw;
        sys.off1[j] += -2.0 * cw;
        sys.off1[j + 1] += -2.0 * cw;
        sys.off2[j] += cw;
    }
    return sys;
}

inline PentaSystem penta_identity_plus_scaled_dtd(std::size_t n, double c) {
    std::vector<double> ones(n - 2, 1.0);
    return penta_identity_plus_weighted_dtd(n, c, ones);
}

inline std::vector<double> penta_matvec(const PentaSystem& sys,
                                        std::span<const double> x) {
    const std::size_t n = sys.n;
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double v = sys.diag[i] * x[i];
        if (i >= 1) v += sys.off1[i - 1] * x[i - 1];
        if (i + 1 < n) v += sys.off1[i] * x[i + 1];
        if (i >= 2) v += sys.off2[i - 2] * x[i - 2];
        if (i + 2 < n) v += sys.off2[i] * x[i + 2];
        out[i] = v;
    }
    return out;
}

/// Banded LDL^T factorization of a symmetric positive-definite pentadiagonal
/// matrix. Factor once, solve many right-hand sides in O(n) each.
class PentaCholesky {
  public:
    explicit PentaCholesky(const PentaSystem& sys) : n_(sys.n) {
        if (n_ < 1) throw DimensionError("empty system");
        d_.assign(n_, 0.0);
        l1_.assign(n_ > 1 ? n_ - 1 : 0, 0.0);
        l2_.assign(n_ > 2 ? n_ - 2 : 0, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double di = sys.diag[i];
            if (i >= 1) di -= l1_[i - 1] * l1_[i - 1] * d_[i - 1];
            if (i >= 2) di -= l2_[i - 2] * l2_[i - 2] * d_[i - 2];
            if (!(di > 0.0) || !std::isfinite(di)) {
                throw SingularityError("nonpositive pivot at row " + std::to_string(i));
            }
            d_[i] = di;
            if (i + 1 < n_) {
                double e = sys.off1[i];
                if (i >= 1) e -= l1_[i - 1] * d_[i - 1] * l2_[i - 1];
                l1_[i] = e / di;
            }
            if (i + 2 < n_) {
                l2_[i] = sys.off2[i] / di;
            }
        }
    }

    [[nodiscard]] std::vector<double> solve(std::span<const double> b) const {
        if (b.size() != n_) throw DimensionError("rhs length mismatch");
        std::vector<double> x(b.begin(), b.end());
        // forward: L z = b
        for (std::size_t i = 1; i < n_; ++i) {
            x[i] -= l1_[i - 1] * x[i - 1];
            if (i >= 2) x[i] -= l2_[i - 2] * x[i - 2];
        }
        // diagonal
        for (std::size_t i = 0; i < n_; ++i) x[i] /= d_[i];
        // backward: L^T x = z
        for (std::size_t i = n_; i-- > 0;) {
            if (i + 1 < n_) x[i] -= l1_[i] * x[i + 1];
            if (i + 2 < n_) x[i] -= l2_[i] * x[i + 2];
        }
        return x;
    }

  private:
    std::size_t n_;
    std::vector<double> d_, l1_, l2_;
};

/// Solve M x = rhs with iterative refinement (extended-precision residual)
/// so badly scaled systems still reach ~1e-10 relative residuals.
inline std::vector<double> solve_penta(const PentaSystem& sys) {
    PentaCholesky fact(sys);
    std::vector<double> x = fact.solve(sys.rhs);
    const std::size_t n = sys.n;
    double bmax = 0.0;
    for (double b : sys.rhs) bmax = std::max(bmax, std::fabs(b));
    std::vector<double> r(n);
    for (int pass = 0; pass < 4; ++pass) {
        double rmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            long double v = static_cast<long double>(sys.diag[i]) * x[i];
            if (i >= 1) v += static_cast<long double>(sys.off1[i - 1]) * x[i - 1];
            if (i + 1 < n) v += static_cast<long double>(sys.off1[i]) * x[i + 1];
            if (i >= 2) v += static_cast<long double>(sys.off2[i - 2]) * x[i - 2];
            if (i + 2 < n) v += static_cast<long double>(sys.off2[i]) * x[i + 2];
            r[i] = static_cast<double>(static_cast<long double>(sys.rhs[i]) - v);
            rmax = std::max(rmax, std::fabs(r[i]));
        }
        if (rmax <= 1e-12 * std::max(bmax, 1e-300)) break;
        const std::vector<double> corr = fact.solve(r);
        for (std::size_t i = 0; i < n; ++i) x[i] += corr[i];
    }
    return x;
}

/// The unique x of length n = len(d)+2 with D2 x = d, x[0] = x0, x[n-1] = xT.
/// Builds a particular double cumulative sum and corrects by the affine
/// function (in the null space of D2) matching both endpoints.
inline std::vector<double> reconstruct_from_second_diff(std::span<const double> d,
                                                        double x0, double xT) {
    const std::size_t n = d.size() + 2;
    std::vector<double> p(n, 0.0);
    for (std::size_t t = 1; t + 1 < n; ++t) {
        p[t + 1] = d[t - 1] + 2.0 * p[t] - p[t - 1];
    }
    const double a = x0 - p[0];
    const double b = (xT - p[n - 1] - a) / static_cast<double>(n - 1);
    for (std::size_t t = 0; t < n; ++t) {
        p[t] += a + b * static_cast<double>(t);
    }
    return p;
}

}  // namespace trendbreak
