#include "helpers.hpp"

#include "qdlab/domain.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace qdlab;
using qdlab::testing::vec;

namespace {

std::vector<Domain> builtin_domains() {
    return {Domain::ball(vec({0.0, 0.0}), 1.0), Domain::ball(vec({0.2, -0.1, 0.3}), 0.7),
            Domain::ellipsoid(vec({0.0, 0.0}), vec({1.5, 0.6})), Domain::smoothed_box(vec({0.1, 0.0}), vec({1.0, 0.5})),
            Domain::ball(vec({0.0}), 1.0)};
}

}  // namespace

TEST(PsiEval, CenterOfUnitBall) {
    const Domain d = Domain::ball(vec({0.0, 0.0, 0.0}), 1.0);
    const PsiJet j = d.psi_eval(vec({0.0, 0.0, 0.0}));
    EXPECT_DOUBLE_EQ(j.value, 1.0);
    EXPECT_LT(j.grad.norm(), 1e-15);
    EXPECT_LT((j.hess + 2.0 * Mat::Identity(3, 3)).norm(), 1e-14);
}

TEST(PsiEval, BoundaryPointGradientNorm) {
    const Domain d = Domain::ball(vec({0.0, 0.0}), 1.0);
    const PsiJet j = d.psi_eval(vec({1.0, 0.0}));
    EXPECT_NEAR(j.value, 0.0, 1e-15);
    EXPECT_NEAR(j.grad.norm(), 2.0, 1e-14);
}

TEST(PsiEval, OffCenterPoint) {
    const Domain d = Domain::ball(vec({0.0, 0.0}), 1.0);
    const PsiJet j = d.psi_eval(vec({0.6, 0.0}));
    EXPECT_NEAR(j.value, 0.64, 1e-14);
    EXPECT_NEAR(j.grad[0], -1.2, 1e-14);
    EXPECT_NEAR(j.grad[1], 0.0, 1e-14);
}

TEST(PsiEval, OutsideBoxRejected) {
    const Domain d = Domain::ball(vec({0.0, 0.0}), 1.0);
    EXPECT_THROW((void)d.psi_eval(vec({3.0, 0.0})), Error);
}

TEST(PsiEval, IllFormedShapesRejected) {
    EXPECT_THROW((void)Domain::ball(vec({0.0}), -1.0), Error);
    EXPECT_THROW((void)Domain::ellipsoid(vec({0.0, 0.0}), vec({1.0, 0.0})), Error);
}

TEST(DomainProperties, DerivativesMatchFiniteDifferences) {
    std::mt19937_64 rng(41);
    for (const Domain& d : builtin_domains()) {
        const Box box = d.bounding_box();
        const double diam = (box.hi - box.lo).norm();
        const double step = 1e-5 * diam;
        for (const Vec& x : sample_interior(d, 30, rng)) {
            const PsiJet j = d.psi_eval(x);
            for (int i = 0; i < d.dim(); ++i) {
                const Vec e = Vec::Unit(d.dim(), i) * step;
                const double fd = (d.psi(x + e) - d.psi(x - e)) / (2.0 * step);
                EXPECT_NEAR(fd, j.grad[i], 1e-6 * std::max(1.0, std::abs(j.grad[i]))) << d.describe();
                const Vec gfd = (d.psi_jet(x + e).grad - d.psi_jet(x - e).grad) / (2.0 * step);
                for (int k = 0; k < d.dim(); ++k) {
                    EXPECT_NEAR(gfd[k], j.hess(k, i), 1e-6 * std::max(1.0, std::abs(j.hess(k, i)))) << d.describe();
                }
            }
            EXPECT_LE((j.hess - j.hess.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

TEST(DomainProperties, ThirdDerivativesMatchHessianDifferences) {
    std::mt19937_64 rng(43);
    for (const Domain& d : builtin_domains()) {
        for (const Vec& x : sample_interior(d, 10, rng)) {
            const auto third = d.psi_third(x);
            ASSERT_TRUE(third.has_value()) << d.describe();
            for (int i = 0; i < d.dim(); ++i) {
                const Vec e = Vec::Unit(d.dim(), i) * 1e-5;
                const Mat fd = (d.psi_jet(x + e).hess - d.psi_jet(x - e).hess) / 2e-5;
                EXPECT_LT((fd - (*third)[static_cast<std::size_t>(i)]).cwiseAbs().maxCoeff(), 1e-5) << d.describe();
            }
        }
    }
}

TEST(DomainProperties, BoundarySamplesAreOnTheZeroLevel) {
    for (const Domain& d : builtin_domains()) {
        std::mt19937_64 rng(5);
        const auto pts = sample_boundary(d, 1000, rng);
        ASSERT_EQ(pts.size(), 1000u);
        for (const Vec& x : pts) {
            EXPECT_LE(std::abs(d.psi(x)), 1e-10) << d.describe();
            EXPECT_GE(d.psi_jet(x).grad.norm(), 1.0 - 1e-12) << d.describe();
        }
    }
}

TEST(DomainProperties, InteriorSamplesArePositive) {
    std::mt19937_64 rng(6);
    for (const Domain& d : builtin_domains()) {
        for (const Vec& x : sample_interior(d, 500, rng)) EXPECT_GT(d.psi(x), 0.0);
    }
}

TEST(NormalizePsi, IdentityDiffusionNeedsNoRescale) {
    for (int d = 1; d <= 3; ++d) {
        const auto p = qdlab::testing::constant_problem({{std::sqrt(2.0) * Mat::Identity(d, d), Vec::Zero(d)}},
                                                        qdlab::testing::constant_g(d, 0.0));
        const NormalizationResult r = normalize_psi(qdlab::testing::unit_ball(d), p);
        EXPECT_DOUBLE_EQ(r.scale, 1.0);
        EXPECT_NEAR(r.sup_generator_before, -2.0 * d, 1e-12);
    }
}

TEST(NormalizePsi, SmallDiffusionScalesByTwo) {
    // a = I / 8 means sigma = I / 2.
    const auto p = qdlab::testing::constant_problem({{0.5 * Mat::Identity(2, 2), Vec::Zero(2)}},
                                                    qdlab::testing::constant_g(2, 0.0));
    const NormalizationResult r = normalize_psi(qdlab::testing::unit_ball(2), p);
    EXPECT_NEAR(r.scale, 2.0, 1e-12);
    EXPECT_NEAR(r.domain.psi(vec({0.3, 0.4})), 2.0 * (1.0 - 0.25), 1e-12);
}

TEST(NormalizePsi, StrongDriftMakesGeneratorPositive) {
    // b = -C x raises psi along the flow, so L psi = -2 tr a + 2 C |x|^2 turns positive.
    auto model = std::make_shared<LambdaModel>(
        2, 2, 1,
        [](std::size_t, const Vec& x, int, CoefficientJet& out) {
            out.sigma = 0.1 * Mat::Identity(2, 2);
            out.b = -50.0 * x;
        },
        [](const Vec&, int) { return ScalarJet{0.0, Vec::Zero(2), Mat::Zero(2, 2)}; });
    const ControlProblem p("strong_drift", model, {"a"}, 1.0);
    try {
        (void)normalize_psi(qdlab::testing::unit_ball(2), p);
        FAIL() << "expected NormalizationImpossible";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NormalizationImpossible);
        EXPECT_NE(std::string(e.what()).find("x="), std::string::npos);
    }
}

TEST(NormalizePsi, SupGeneratorAtMostMinusOneAfterScaling) {
    const auto p = make_builtin_problem("degenerate2d");
    const NormalizationResult r = normalize_psi(default_domain(2), p);
    std::mt19937_64 rng(77);
    double sup = -1e300;
    CoefficientJet jet;
    for (const Vec& x : sample_interior(r.domain, 10000, rng)) {
        const PsiJet pj = r.domain.psi_jet(x);
        for (std::size_t a = 0; a < p.num_controls(); ++a) {
            p.coefficients(a, x, 0, jet);
            sup = std::max(sup, (jet.diffusion().cwiseProduct(pj.hess)).sum() + jet.b.dot(pj.grad));
        }
    }
    EXPECT_LE(sup, -1.0 + 1e-9);
}

TEST(RegionClassify, Thresholds) {
    const Levels lv(0.01, 0.25);
    EXPECT_EQ(classify_psi(-0.1, lv), RegionTag::Outside);
    EXPECT_EQ(classify_psi(0.005, lv), RegionTag::Collar);
    EXPECT_EQ(classify_psi(0.05, lv), RegionTag::BoundaryLayer);
    EXPECT_EQ(classify_psi(0.1, lv), RegionTag::Overlap);
    EXPECT_EQ(classify_psi(0.5, lv), RegionTag::Interior);
}

TEST(RegionClassify, PointsOnTheUnitDisk) {
    const Domain d = Domain::ball(vec({0.0, 0.0}), 1.0);
    // psi = 0.1 at |x|^2 = 0.9
    EXPECT_EQ(region_classify(d, vec({std::sqrt(0.9), 0.0}), 0.01, 0.25), RegionTag::Overlap);
    EXPECT_EQ(region_classify(d, vec({std::sqrt(0.5), 0.0}), 0.01, 0.25), RegionTag::Interior);
    EXPECT_EQ(region_classify(d, vec({1.2, 0.0}), 0.01, 0.25), RegionTag::Outside);
}

TEST(RegionClassify, InvalidLevelsRejected) {
    const Domain d = Domain::ball(vec({0.0}), 1.0);
    for (auto [delta, lambda] : std::vector<std::pair<double, double>>{{0.1, 0.25}, {0.01, 1.2}, {-0.1, 0.5}, {0.0, 0.5}}) {
        try {
            (void)region_classify(d, vec({0.0}), delta, lambda);
            FAIL() << delta << " " << lambda;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidLevels);
        }
    }
}

TEST(RegionClassify, TagsPartitionByPsiAlone) {
    const Levels lv(1e-4, 0.25);
    const Domain d = Domain::ellipsoid(vec({0.0, 0.0}), vec({1.0, 0.5}));
    std::mt19937_64 rng(8);
    for (const Vec& x : sample_interior(d, 300, rng)) {
        EXPECT_EQ(region_classify(d, x, lv), classify_psi(d.psi(x), lv));
    }
}

TEST(Bisect, FindsLevelCrossing) {
    const double t = bisect_level([](double s) { return 1.0 - 4.0 * s * s; }, 0.0, 1e-14);
    EXPECT_NEAR(t, 0.5, 1e-12);
}

TEST(Levels, SwitchLevelsInsideOverlap) {
    const Levels lv(1e-4, 0.25);
    EXPECT_GT(lv.switch_low(), lv.lambda_sq());
    EXPECT_LT(lv.switch_high(), lv.lambda());
    EXPECT_LT(lv.switch_low(), lv.switch_high());
}
