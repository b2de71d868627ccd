#include "helpers.hpp"

#include "qdlab/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace qdlab;
using qdlab::testing::vec;

namespace {

std::vector<Vec> interior_nodes(const GridSolution& s, const Domain& d, double margin) {
    std::vector<Vec> out;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.inside[k] && d.psi(s.node(k)) > margin) out.push_back(s.node(k));
    }
    return out;
}

}  // namespace

TEST(OracleSolve, IntervalBenchmark) {
    const ControlProblem p = make_builtin_problem("ode1d");
    const GridSolution s = solve_bellman_fd(p, default_domain(1), 1e-3);
    EXPECT_TRUE(s.converged);
    EXPECT_NEAR(oracle_value(s, vec({0.0})), 0.5, 1e-4);
    const DirectionalJet j = oracle_derivatives(s, vec({0.5}), vec({1.0}));
    EXPECT_NEAR(j.value, 0.375, 1e-6);
    EXPECT_NEAR(j.first, -0.5, 1e-6);
    EXPECT_NEAR(j.second, -1.0, 1e-4);
    EXPECT_LE(s.max_residual(), 1e-8);
}

TEST(OracleSolve, TwoControlsSelectTheLargerDiffusion) {
    const ControlProblem p = make_builtin_problem("twocontrol1d", {{"f", -1.0}});
    const GridSolution s = solve_bellman_fd(p, default_domain(1), 0.01);
    ASSERT_TRUE(s.converged);
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.inside[k]) EXPECT_EQ(s.labels.at(static_cast<std::size_t>(s.policy[k])), "2") << s.node(k);
    }
    EXPECT_NEAR(oracle_value(s, vec({0.0})), -0.25, 1e-3);
}

TEST(OracleSolve, ConstantDataGivesConstantValue) {
    const ControlProblem p = qdlab::testing::constant_problem(
        {{std::sqrt(2.0) * Mat::Identity(2, 2), vec({0.3, -0.1})}}, qdlab::testing::constant_g(2, 2.0));
    const GridSolution s = solve_bellman_fd(p, default_domain(2), 0.05);
    ASSERT_TRUE(s.converged);
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.inside[k]) EXPECT_NEAR(s.v[k], 2.0, 1e-10);
    }
    const DirectionalJet j = oracle_derivatives(s, vec({0.1, 0.1}), vec({0.6, 0.8}));
    EXPECT_NEAR(j.value, 2.0, 1e-10);
    EXPECT_NEAR(j.first, 0.0, 1e-8);
    EXPECT_NEAR(j.second, 0.0, 1e-6);
    const std::vector<Vec> probe = interior_nodes(s, default_domain(2), 0.1);
    EXPECT_LE(bellman_residual(p, default_domain(2), s, probe), 1e-9);
}

TEST(OracleSolve, ResidualHistoryNonincreasing) {
    const ControlProblem p = make_builtin_problem("twocontrol1d", {{"f", -1.0}});
    OracleOptions o;
    o.init = InitialGuess::Zero;
    const GridSolution s = solve_bellman_fd(p, default_domain(1), 0.01, o);
    ASSERT_GE(s.residual_history.size(), 1u);
    for (std::size_t k = 1; k < s.residual_history.size(); ++k) {
        EXPECT_LE(s.residual_history[k], s.residual_history[k - 1] * (1 + 1e-12) + 1e-14);
    }
}

TEST(OracleSolve, TooFewNodesRejected) {
    EXPECT_THROW((void)solve_bellman_fd(make_builtin_problem("ode1d"), default_domain(1), 0.5), Error);
}

TEST(OracleResidual, BumpCreatesSpike) {
    const ControlProblem p = make_builtin_problem("ode1d");
    const double h = 0.01;
    GridSolution s = solve_bellman_fd(p, default_domain(1), h);
    const std::size_t k = s.nearest(vec({0.2}));
    const std::vector<Vec> at{s.node(k)};
    EXPECT_LE(bellman_residual(p, default_domain(1), s, at), 1e-8);
    s.v[k] += h * h;
    // a = 1, so the second difference moves by -2
    EXPECT_NEAR(bellman_residual(p, default_domain(1), s, at), 2.0, 1e-6);
}

TEST(OracleInterpolation, QuadraticIsReproduced) {
    const GridSolution s = GridSolution::sample(default_domain(1), 1e-3, [](const Vec& x) { return x[0] * x[0]; });
    const DirectionalJet j = oracle_derivatives(s, vec({0.3337}), vec({1.0}));
    EXPECT_NEAR(j.value, 0.3337 * 0.3337, 1e-12);
    EXPECT_NEAR(j.first, 2 * 0.3337, 1e-9);
    EXPECT_NEAR(j.second, 2.0, 1e-6);
    const GridSolution s2 = GridSolution::sample(default_domain(2), 0.01, [](const Vec& x) { return x[0] * x[1]; });
    const DirectionalJet j2 = oracle_derivatives(s2, vec({0.123, -0.2}), vec({1.0, 1.0}));
    EXPECT_NEAR(j2.second, 2.0, 1e-6);
}

TEST(OracleInterpolation, NearBoundaryIsOutOfStencil) {
    const GridSolution s = GridSolution::sample(default_domain(1), 0.01, [](const Vec& x) { return x[0]; });
    try {
        (void)oracle_derivatives(s, vec({0.999}), vec({1.0}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OutOfStencil);
    }
}

TEST(OracleProperties, DiscreteComparison) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> gap(0.0, 0.5);
    for (int trial = 0; trial < 4; ++trial) {
        const Mat sigma = qdlab::testing::mat2(1.2, 0.3, -0.2, 0.8);
        const Vec b = vec({u(rng), u(rng)});
        const qdlab::testing::Quadratic g1{u(rng), vec({u(rng), u(rng)}), qdlab::testing::mat2(u(rng), 0, 0, u(rng))};
        qdlab::testing::Quadratic g2 = g1;
        g2.g0 += gap(rng);
        const double f1 = u(rng);
        const double f2 = f1 + gap(rng);
        const double c = 0.5;
        const ControlProblem p1 = qdlab::testing::constant_problem({{sigma, b, c, f1}}, g1);
        const ControlProblem p2 = qdlab::testing::constant_problem({{sigma, b, c, f2}}, g2);
        const GridSolution s1 = solve_bellman_fd(p1, default_domain(2), 0.05);
        const GridSolution s2 = solve_bellman_fd(p2, default_domain(2), 0.05);
        for (std::size_t k = 0; k < s1.size(); ++k) {
            if (s1.inside[k]) EXPECT_LE(s1.v[k], s2.v[k] + 1e-10);
        }
    }
}

TEST(OracleProperties, GridHalvingRatio) {
    const ParamMap params{{"c", 1.0}};
    const ControlProblem p = make_builtin_problem("ode1d", params);
    const ClosedForm exact = *builtin_closed_form("ode1d", params);
    std::vector<double> errors;
    for (double h : {0.02, 0.01, 0.005}) {
        const GridSolution s = solve_bellman_fd(p, default_domain(1), h);
        errors.push_back(std::abs(oracle_value(s, vec({0.3})) - exact(vec({0.3})).value));
    }
    for (std::size_t k = 1; k < errors.size(); ++k) {
        const double ratio = errors[k - 1] / errors[k];
        EXPECT_GE(ratio, 3.0);
        EXPECT_LE(ratio, 5.0);
    }
}

TEST(Uniqueness, LinearSingleControl) {
    const UniquenessReport r = uniqueness_probe(make_builtin_problem("ode1d"), default_domain(1), 0.01, 1e-8, 3);
    EXPECT_TRUE(r.pass);
    EXPECT_LE(r.max_deviation, 1e-9);
    EXPECT_EQ(r.runs.size(), 3u);
}

TEST(Uniqueness, TwoControls) {
    const UniquenessReport r =
        uniqueness_probe(make_builtin_problem("twocontrol1d", {{"f", -1.0}}), default_domain(1), 0.01, 1e-8, 3);
    EXPECT_TRUE(r.pass);
    EXPECT_LE(r.max_deviation, 1e-7);
}

TEST(Uniqueness, DegenerateWithWideStencil) {
    const ControlProblem p = make_builtin_problem("degenerate2d", {{"angle", std::numbers::pi / 6}});
    const GridSolution s = solve_bellman_fd(p, default_domain(2), 0.05);
    EXPECT_TRUE(s.converged);
    EXPECT_FALSE(s.wide_nodes.empty());
    const UniquenessReport r = uniqueness_probe(p, default_domain(2), 0.05, 1e-8, 3);
    EXPECT_TRUE(r.pass);
    EXPECT_LE(r.max_deviation, 1e-7);
}

TEST(OracleProvider, MovesInwardNearTheBoundary) {
    const ControlProblem p = make_builtin_problem("ode1d");
    auto s = std::make_shared<const GridSolution>(solve_bellman_fd(p, default_domain(1), 0.01));
    const OracleProvider provider(s, p, default_domain(1));
    const ScalarJet j = provider.evaluate(vec({0.995}), 2, false);
    EXPECT_NEAR(j.value, 0.5 * (1 - 0.995 * 0.995), 1e-3);
    EXPECT_NEAR(j.grad[0], -0.995, 1e-2);
    const ScalarJet b = provider.evaluate(vec({1.0}), 1, true);
    EXPECT_DOUBLE_EQ(b.value, 0.0);
}

TEST(OracleProvider, GridPolicyFollowsArgmax) {
    const ControlProblem p = make_builtin_problem("twocontrol1d", {{"f", -1.0}});
    auto s = std::make_shared<const GridSolution>(solve_bellman_fd(p, default_domain(1), 0.02));
    const MarkovPolicy pol = grid_policy(s);
    for (double x : {-0.99, -0.3, 0.0, 0.5, 0.999}) EXPECT_EQ(pol(vec({x})), 1u);
}

TEST(OracleCsv, HeaderAndRows) {
    const ControlProblem p = make_builtin_problem("ode1d");
    const GridSolution s = solve_bellman_fd(p, default_domain(1), 0.1);
    std::ostringstream os;
    write_csv(s, os);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "x0,inside,v,policy,residual");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, s.size());
}
