#include "qdlab/stats.hpp"

#include "qdlab/types.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace qdlab {

double normal_cdf(double z) { return boost::math::cdf(boost::math::normal(), z); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile level must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal(), p);
}

TrendTest mann_kendall(std::span<const double> series) {
    TrendTest out;
    const std::size_t n = series.size();
    if (n < 3) return out;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double diff = series[j] - series[i];
            out.s += (diff > 0.0) - (diff < 0.0);
        }
    }
    std::vector<double> sorted(series.begin(), series.end());
    std::sort(sorted.begin(), sorted.end());
    double ties = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        ties += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j;
    }
    const double nd = static_cast<double>(n);
    out.variance = (nd * (nd - 1.0) * (2.0 * nd + 5.0) - ties) / 18.0;
    if (out.variance > 0.0) {
        if (out.s > 0.0) out.z = (out.s - 1.0) / std::sqrt(out.variance);
        if (out.s < 0.0) out.z = (out.s + 1.0) / std::sqrt(out.variance);
    }
    out.p_increasing = 1.0 - normal_cdf(out.z);
    out.p_decreasing = normal_cdf(out.z);
    return out;
}

}  // namespace qdlab
