#pragma once

#include <span>

namespace qdlab {

[[nodiscard]] double normal_cdf(double z);
[[nodiscard]] double normal_quantile(double p);

struct TrendTest {
    double s = 0.0;         ///< Kendall S statistic
    double variance = 0.0;  ///< tie-corrected variance of S
    double z = 0.0;         ///< continuity-corrected score
    double p_increasing = 1.0;
    double p_decreasing = 1.0;
};

/// Mann-Kendall trend test on a series in its given order.
[[nodiscard]] TrendTest mann_kendall(std::span<const double> series);

}  // namespace qdlab
