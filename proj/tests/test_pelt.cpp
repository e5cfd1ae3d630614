#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "trendbreak/pelt.hpp"
#include "trendbreak/simulate.hpp"

using namespace trendbreak;

namespace {

// Exhaustive search over all admissible segmentations (test oracle).
double brute_force_best(const std::vector<double>& y, double penalty, int min_seg, int step,
                        std::vector<int>* best_cps = nullptr) {
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
        bool ok = true;
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
            if (bounds[i + 1] - bounds[i] < min_seg) {
                ok = false;
                break;
            }
            total += cost(bounds[i], bounds[i + 1]);
        }
        if (!ok) continue;
        total += penalty * static_cast<double>(bounds.size() - 2);
        if (total < best) {
            best = total;
            if (best_cps) {
                best_cps->clear();
                for (std::size_t i = 1; i + 1 < bounds.size(); ++i) {
                    best_cps->push_back(bounds[i] - 1);
                }
            }
        }
    }
    return best;
}

}  // namespace

TEST_CASE("constant series has no change points") {
    TimeSeries y;
    y.values.assign(30, 7.5);
    const PeltResult res = pelt_l2(y, 1.0);
    CHECK(res.change_points.empty());
    CHECK(res.total_objective == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("two-level series splits at the boundary") {
    TimeSeries y;
    y.values = {0, 0, 0, 10, 10, 10};
    const PeltResult res = pelt_l2(y, 1.0);
    REQUIRE(res.change_points.size() == 1);
    CHECK(res.change_points[0] == 2);

    std::vector<int> oracle_cps;
    const double oracle = brute_force_best(y.values, 1.0, 1, 1, &oracle_cps);
    CHECK(res.total_objective == Catch::Approx(oracle));
    CHECK(res.change_points == oracle_cps);
}

TEST_CASE("pelt equals exhaustive search on short series") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        for (std::size_t n = 4; n <= 12; n += 2) {
            TimeSeries y;
            y.values = tbtest::random_vector(n, 5000 + seed * 100 + n, 3.0);
            for (double pen : {0.5, 1.0, 2.0, 5.0}) {
                for (int min_seg : {1, 2}) {
                    const PeltResult res = pelt_l2(y, pen, min_seg, 1);
                    const double oracle = brute_force_best(y.values, pen, min_seg, 1);
                    CHECK(res.total_objective == Catch::Approx(oracle).margin(1e-9));
                    ++checked;
                }
            }
        }
    }
    CHECK(checked > 500);
}

TEST_CASE("pelt with a restricted boundary grid matches the restricted oracle") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TimeSeries y;
        y.values = tbtest::random_vector(12, 7000 + seed, 4.0);
        const PeltResult res = pelt_l2(y, 1.0, 2, 5);
        const double oracle = brute_force_best(y.values, 1.0, 2, 5);
        CHECK(res.total_objective == Catch::Approx(oracle).margin(1e-9));
    }
}

TEST_CASE("detection count is non-increasing in the penalty") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TimeSeries y = simulate_random_walk(builtin_scenario("no-cp"), 600 + seed);
        std::size_t prev = y.size();
        for (double pen : {0.5, 1.0, 2.0, 5.0, 20.0, 100.0}) {
            const std::size_t k = pelt_l2(y, pen).change_points.size();
            CHECK(k <= prev);
            prev = k;
        }
    }
}

TEST_CASE("benchmark configuration detects about nineteen on drifting walks") {
    int total = 0;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const TimeSeries y = simulate_random_walk(builtin_scenario("no-cp"), 800 + seed);
        const PeltResult res = pelt_l2(y, 1.0, 2, 5);
        CHECK(res.change_points.size() <= 19);
        CHECK(res.change_points.size() >= 15);
        total += static_cast<int>(res.change_points.size());
        // objective identity
        double acc = 0.0;
        for (double c : res.segment_costs) acc += c;
        acc += 1.0 * static_cast<double>(res.change_points.size());
        CHECK(res.total_objective == Catch::Approx(acc));
        for (std::size_t i = 1; i < res.change_points.size(); ++i) {
            CHECK(res.change_points[i] > res.change_points[i - 1]);
        }
    }
    CHECK(total >= 25 * 18);  // mean close to 19
}

TEST_CASE("pelt parameter validation") {
    TimeSeries y;
    y.values.assign(10, 1.0);
    CHECK_THROWS_AS(pelt_l2(y, -1.0), ParameterError);
    CHECK_THROWS_AS(pelt_l2(y, 1.0, 0), ParameterError);
    CHECK_THROWS_AS(pelt_l2(y, 1.0, 1, 0), ParameterError);
}
