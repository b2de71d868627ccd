#include "helpers.hpp"

#include "qdlab/linalg.hpp"
#include "qdlab/recipe.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace qdlab;
using qdlab::testing::mat2;
using qdlab::testing::vec;

namespace {

Mat random_skew(std::mt19937_64& rng, int n, double scale) {
    std::normal_distribution<double> n01;
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = scale * n01(rng);
    return a - a.transpose();
}

CoefficientJet unit_sigma_jet() {
    CoefficientJet jet;
    jet.reset(1, 1, 1);
    jet.sigma = Mat::Constant(1, 1, 1.0);
    jet.b = Vec::Zero(1);
    return jet;
}

}  // namespace

TEST(SkewExp, ZeroIsIdentity) {
    EXPECT_LT((skew_exp(Mat::Zero(3, 3), 2.0) - Mat::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SkewExp, QuarterTurn) {
    const Mat r = skew_exp(mat2(0, 1, -1, 0), std::numbers::pi / 2);
    EXPECT_LT((r - mat2(0, 1, -1, 0)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SkewExp, MatchesClosedFormRotation) {
    for (double s : {-3.0, 0.01, 0.7, 12.0}) {
        const Mat r = skew_exp(mat2(0, 1, -1, 0), s);
        EXPECT_LT((r - mat2(std::cos(s), std::sin(s), -std::sin(s), std::cos(s))).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(SkewExp, RandomSkewGivesRotation) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat p = random_skew(rng, 4, trial < 25 ? 0.1 : 3.0);
        const Mat r = skew_exp(p, 1.0);
        EXPECT_LE((r * r.transpose() - Mat::Identity(4, 4)).norm(), 1e-12);
        EXPECT_NEAR(r.determinant(), 1.0, 1e-10);
        // group property
        EXPECT_LT((skew_exp(p, 0.5) * skew_exp(p, 0.5) - r).cwiseAbs().maxCoeff(), 1e-11);
    }
}

TEST(SkewExp, NonSkewRejected) {
    try {
        (void)skew_exp(mat2(0, 1, 1, 0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonSkewInput);
    }
    EXPECT_FALSE(is_skew(mat2(1, 0, 0, 0)));
    EXPECT_TRUE(is_skew(mat2(0, 2, -2, 0)));
}

TEST(BoundaryRecipe, OneDimensionalHandValues) {
    const Domain d = Domain::ball(vec({0.0}), 1.0);
    const PsiJet psi = d.psi_jet(vec({0.6}));
    const QuasiRecipe q = boundary_recipe(unit_sigma_jet(), psi, vec({1.0}), 0.25, 1e-9);
    EXPECT_NEAR(q.upsilon, 1.44, 1e-14);
    EXPECT_NEAR(q.r, -3.5417, 5e-5);
    // independent evaluation: rho = -(psi_sigma)(psi_sigma)_xi / Upsilon, r = rho + psi_xi / psi
    const double psi_sigma = -1.2;
    const double psi_sigma_xi = -2.0;
    const double rho = -psi_sigma * psi_sigma_xi / (psi_sigma * psi_sigma);
    EXPECT_NEAR(rho, -5.0 / 3.0, 1e-15);
    EXPECT_NEAR(q.r, rho + (-1.2 / 0.64), 1e-13);
    EXPECT_NEAR(q.r_hat, std::pow(1.2 / 0.64, 2), 1e-12);
    EXPECT_DOUBLE_EQ(q.p(0, 0), 0.0);
    EXPECT_NEAR(q.pi[0], 2.0 * (-1.2) / (layer_weight(0.64, 0.25) * 0.64) * (-1.2), 1e-12);
}

TEST(BoundaryRecipe, SingleNoiseHasNoRotation) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> n01;
    const Domain d = Domain::ball(vec({0.0, 0.0}), 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        CoefficientJet jet;
        jet.reset(2, 1, 1);
        jet.sigma = Mat(2, 1);
        jet.sigma << 1.0 + 0.1 * n01(rng), 0.5 * n01(rng);
        jet.dsigma[0] = Mat::Constant(2, 1, n01(rng));
        jet.b = Vec::Zero(2);
        const QuasiRecipe q = boundary_recipe(jet, d.psi_jet(vec({0.7, 0.2})), vec({n01(rng), n01(rng)}), 0.25, 1e-9);
        EXPECT_DOUBLE_EQ(q.p(0, 0), 0.0);
    }
}

TEST(BoundaryRecipe, TangentialDirection) {
    const Domain d = Domain::ball(vec({0.0, 0.0}), 1.0);
    CoefficientJet jet;
    jet.reset(2, 2, 1);
    jet.sigma = mat2(1.2, 0.1, -0.3, 0.9);
    jet.dsigma[0] = mat2(0.2, 0.0, 0.1, -0.4);
    jet.dsigma[1] = mat2(0.0, 0.3, 0.2, 0.1);
    jet.b = Vec::Zero(2);
    const Vec x = vec({0.8, 0.0});
    const Vec tangent = vec({0.0, 1.0});
    const QuasiRecipe q = boundary_recipe(jet, d.psi_jet(x), tangent, 0.25, 1e-9);
    const Vec along = jet.sigma.transpose() * d.psi_jet(x).grad;
    const Vec along_xi = jet.sigma.transpose() * (d.psi_jet(x).hess * tangent) + jet.sigma_dir(tangent).transpose() * d.psi_jet(x).grad;
    EXPECT_NEAR(q.r, -along.dot(along_xi) / along.squaredNorm(), 1e-14);
    EXPECT_DOUBLE_EQ(q.r_hat, 0.0);
    EXPECT_LT(q.pi.cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_TRUE(is_skew(q.p));
}

TEST(BoundaryRecipe, RotationGeneratorIsSkew) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    const Domain d = Domain::ellipsoid(vec({0.0, 0.0}), vec({1.5, 0.7}));
    for (int trial = 0; trial < 30; ++trial) {
        CoefficientJet jet;
        jet.reset(2, 3, 1);
        jet.sigma = Mat(2, 3);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 3; ++j) jet.sigma(i, j) = n01(rng);
        jet.dsigma[0] = jet.sigma * 0.3;
        jet.dsigma[1] = -jet.sigma * 0.2;
        jet.b = Vec::Zero(2);
        const QuasiRecipe q = boundary_recipe(jet, d.psi_jet(vec({1.2, 0.1})), vec({n01(rng), n01(rng)}), 0.25, 1e-9);
        EXPECT_LE((q.p + q.p.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(BoundaryRecipe, SmallUpsilonRejected) {
    const Domain d = Domain::ball(vec({0.0, 0.0}), 1.0);
    CoefficientJet jet;
    jet.reset(2, 2, 1);
    jet.sigma = mat2(0, 0, 0, 1);  // noise only along x1, normal at (0.8, 0) is x0
    jet.b = Vec::Zero(2);
    try {
        (void)boundary_recipe(jet, d.psi_jet(vec({0.8, 0.0})), vec({1.0, 0.0}), 0.25, 1e-9);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UpsilonTooSmall);
    }
}

TEST(InteriorRecipe, ZeroFieldsGiveZeroAuxiliaries) {
    const ControlProblem p = make_builtin_problem("laplace2d");
    const QuasiRecipe q = interior_recipe(p, InteriorCondition::zero(2, 2), 0, vec({0.1, 0.2}), vec({1.0, -2.0}), vec({0.5, 0.5}));
    EXPECT_EQ(q.kind, RecipeKind::Interior);
    EXPECT_DOUBLE_EQ(q.r, 0.0);
    EXPECT_DOUBLE_EQ(q.r_hat, 0.0);
    EXPECT_DOUBLE_EQ(q.pi.norm(), 0.0);
    EXPECT_DOUBLE_EQ(q.p.norm(), 0.0);
    EXPECT_DOUBLE_EQ(q.p_hat.norm(), 0.0);
}

TEST(InteriorRecipe, HalfMSigmaXi) {
    const InteriorCondition ic = InteriorCondition::constant(vec({0.0}), 2.0, {Mat::Zero(1, 1)}, 1);
    const QuasiRecipe q = interior_recipe(unit_sigma_jet(), ic, 0, vec({0.0}), vec({3.0}), vec({0.0}));
    EXPECT_DOUBLE_EQ(q.pi[0], 3.0);
}

TEST(InteriorRecipe, RotationLinearInXi) {
    const InteriorCondition ic =
        InteriorCondition::constant(vec({0.0, 0.0}), 0.0, {mat2(0, 1, -1, 0), Mat::Zero(2, 2)}, 2);
    CoefficientJet jet;
    jet.reset(2, 2, 0);
    jet.sigma = Mat::Identity(2, 2);
    jet.b = Vec::Zero(2);
    const QuasiRecipe q = interior_recipe(jet, ic, 0, vec({0.0, 0.0}), vec({2.0, 0.0}), vec({0.0, 0.0}));
    EXPECT_LT((q.p - mat2(0, 2, -2, 0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SelectRecipe, HysteresisBand) {
    const Levels lv(1e-4, 0.25);
    const double mid = 0.5 * (lv.switch_low() + lv.switch_high());
    EXPECT_EQ(select_recipe(RecipeMode::Switched, 0.01, lv, RecipeKind::Interior), RecipeKind::Boundary);
    EXPECT_EQ(select_recipe(RecipeMode::Switched, 0.5, lv, RecipeKind::Boundary), RecipeKind::Interior);
    EXPECT_EQ(select_recipe(RecipeMode::Switched, mid, lv, RecipeKind::Boundary), RecipeKind::Boundary);
    EXPECT_EQ(select_recipe(RecipeMode::Switched, mid, lv, RecipeKind::Interior), RecipeKind::Interior);
    EXPECT_EQ(select_recipe(RecipeMode::BoundaryOnly, 0.9, lv, RecipeKind::None), RecipeKind::Boundary);
    EXPECT_EQ(select_recipe(RecipeMode::None, 0.9, lv, RecipeKind::None), RecipeKind::None);
}

TEST(SelectRecipe, NoDoubleSwitchAcrossTheBand) {
    // A sweep through the band flips at most once in each direction.
    const Levels lv(1e-4, 0.25);
    RecipeKind kind = RecipeKind::None;
    int switches = 0;
    for (int k = 0; k <= 1000; ++k) {
        const double psi = 0.01 + 0.5 * k / 1000.0 + 0.004 * std::sin(k);
        const RecipeKind next = select_recipe(RecipeMode::Switched, psi, lv, kind);
        if (kind != RecipeKind::None && next != kind) ++switches;
        kind = next;
    }
    EXPECT_EQ(switches, 1);
}
