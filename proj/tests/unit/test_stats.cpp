#include "qdlab/estimators.hpp"
#include "qdlab/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace qdlab;

TEST(Normal, KnownValues) {
    EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
    EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-14);
    EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
    EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
}

TEST(Normal, QuantileInvertsCdf) {
    for (double p = 1e-6; p < 1.0; p *= 3.0) EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-12 * std::max(1.0, p / 1e-3));
}

TEST(MannKendall, StrictlyIncreasingSeries) {
    const std::vector<double> s{1, 2, 3, 4, 5};
    const TrendTest t = mann_kendall(s);
    EXPECT_DOUBLE_EQ(t.s, 10.0);
    EXPECT_NEAR(t.variance, 5.0 * 4.0 * 15.0 / 18.0, 1e-12);
    EXPECT_NEAR(t.z, 9.0 / std::sqrt(50.0 / 3.0), 1e-12);
    EXPECT_NEAR(t.p_increasing, 1.0 - normal_cdf(t.z), 1e-14);
    EXPECT_LT(t.p_increasing, 0.05);
    EXPECT_GT(t.p_decreasing, 0.95);
}

TEST(MannKendall, TiesReduceTheVariance) {
    const std::vector<double> s{1, 1, 2, 2, 3};
    const TrendTest t = mann_kendall(s);
    // two tie groups of size 2: each removes 2*1*9/18 = 1
    EXPECT_NEAR(t.variance, 50.0 / 3.0 - 2.0, 1e-12);
    EXPECT_DOUBLE_EQ(t.s, 8.0);
}

TEST(MannKendall, ConstantSeriesHasNoTrend) {
    const std::vector<double> s(8, 2.5);
    const TrendTest t = mann_kendall(s);
    EXPECT_DOUBLE_EQ(t.s, 0.0);
    EXPECT_GE(t.p_increasing, 0.5);
}

TEST(MannKendall, NoiseRarelyRejects) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    int rejections = 0;
    for (int trial = 0; trial < 400; ++trial) {
        std::vector<double> s(12);
        for (double& v : s) v = n01(rng);
        if (mann_kendall(s).p_increasing < 0.05) ++rejections;
    }
    // nominal 5% level, 400 trials
    EXPECT_LT(rejections, 40);
}

TEST(Summarize, MeanAndStandardError) {
    const std::vector<double> s{1.0, 2.0, 3.0, 4.0};
    const Estimate e = summarize(s);
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    EXPECT_NEAR(e.std_error, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
    EXPECT_EQ(e.n_paths, 4u);
}
