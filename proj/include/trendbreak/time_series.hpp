#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "trendbreak/errors.hpp"

namespace trendbreak {

/// Ordered observations y_0..y_T with optional per-index labels (dates).
///
/// Index t runs 0..T, so size() == T+1. Detectors require size() >= 5;
/// low-level difference operators accept anything >= 3.
struct TimeSeries {
    std::vector<double> values;
    std::vector<std::string> labels;  // empty, or one label per value

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] int horizon() const noexcept {  // T
        return static_cast<int>(values.size()) - 1;
    }
};

inline void validate_series(const TimeSeries& y) {
    if (y.values.size() < 5) {
        throw DimensionError("time series needs at least 5 observations, got " +
                             std::to_string(y.values.size()));
    }
    for (std::size_t i = 0; i < y.values.size(); ++i) {
        if (!std::isfinite(y.values[i])) {
            throw ParameterError("non-finite value at index " + std::to_string(i));
        }
    }
    if (!y.labels.empty() && y.labels.size() != y.values.size()) {
        throw DimensionError("label count does not match value count");
    }
}

inline TimeSeries make_series(std::vector<double> values,
                              std::vector<std::string> labels = {}) {
    TimeSeries y{std::move(values), std::move(labels)};
    validate_series(y);
    return y;
}

}  // namespace trendbreak
