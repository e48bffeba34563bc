/**
 * @file stats.hpp
 * @brief Small descriptive statistics shared by the gp, features and synth modules.
 */
#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace lcmodel::stats {

[[nodiscard]] double mean(std::span<const double> x);

/// Unbiased (n - 1) variance; 0 for fewer than two values.
[[nodiscard]] double sample_variance(std::span<const double> x);

/// Mean of the two central order statistics for even sizes.
[[nodiscard]] double median(std::span<const double> x);

/// Percentile `p` in [0, 100] by linear interpolation between order statistics at rank p/100 * (n - 1).
[[nodiscard]] double percentile(std::span<const double> x, double p);

/// Same as percentile() on data that is already sorted ascending.
[[nodiscard]] double percentile_sorted(std::span<const double> sorted, double p);

[[nodiscard]] inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace lcmodel::stats
