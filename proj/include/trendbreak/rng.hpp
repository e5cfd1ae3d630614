#pragma once

#include <cstdint>
#include <random>

#include "trendbreak/normal.hpp"

namespace trendbreak {

/// Deterministic standard-normal stream.
///
/// Algorithm (documented so runs are reproducible across platforms):
/// mt19937_64 seeded directly; each draw maps the top 53 bits to the open
/// unit interval via u = (bits + 0.5) * 2^-53 and applies the inverse normal
/// CDF. Identical seeds give bit-identical streams.
class NormalSampler {
  public:
    explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}

    double next() {
        const std::uint64_t bits = gen_() >> 11;
        const double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
        return normal_quantile(u);
    }

    double next(double sigma) { return sigma * next(); }

  private:
    std::mt19937_64 gen_;
};

}  // namespace trendbreak
