#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trendbreak/stats.hpp"

namespace trendbreak {

enum class Method { hp, l1, pelt };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::hp: return "hp";
        case Method::l1: return "l1";
        case Method::pelt: return "pelt";
    }
    return "?";
}

struct Diagnostics {
    std::optional<double> rmse;
    std::optional<double> shapiro_p;
    std::optional<double> df_hat;          // l1
    std::optional<double> prob;            // hp: P(at least one cp in [t, t+1])
    std::optional<double> sigma2_hat;
};

/// Shared detection output for all three methods.
struct ChangePointReport {
    Method method = Method::hp;
    std::optional<double> lambda;
    std::optional<std::string> threshold_rule;
    std::optional<double> alpha;
    std::optional<double> penalty;
    std::vector<int> flagged_indices;
    std::vector<Interval> intervals;
    Diagnostics diagnostics;
    std::size_t series_length = 0;
};

}  // namespace trendbreak
