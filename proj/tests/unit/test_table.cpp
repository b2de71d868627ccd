#include "helpers.hpp"

#include "qdlab/harness.hpp"
#include "qdlab/oracle.hpp"
#include "qdlab/table.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace qdlab;
using qdlab::testing::vec;

namespace {

Vec node_point(const CoefficientTable& t, std::size_t flat) {
    Vec x(t.dim());
    for (int i = 0; i < t.dim(); ++i) {
        const auto n = static_cast<std::size_t>(t.nodes[i]);
        x[i] = t.lo[i] + (t.hi[i] - t.lo[i]) * static_cast<double>(flat % n) / (t.nodes[i] - 1);
        flat /= n;
    }
    return x;
}

/// Samples every coefficient of a problem at the grid nodes.
CoefficientTable sample(const ControlProblem& p, Vec lo, Vec hi, std::vector<int> nodes) {
    CoefficientTable t{std::move(lo), std::move(hi), std::move(nodes), p.noise_dim(), {}, {}};
    const std::size_t n = t.node_count();
    const int d = p.dim();
    for (std::size_t c = 0; c < p.num_controls(); ++c) {
        CoefficientTable::Control ctl;
        ctl.label = p.label(c);
        ctl.sigma.assign(static_cast<std::size_t>(d * t.noise_dim), std::vector<double>(n));
        ctl.b.assign(static_cast<std::size_t>(d), std::vector<double>(n));
        ctl.c.resize(n);
        ctl.f.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const CoefficientJet jet = p.coefficients(c, node_point(t, k), 0);
            for (int i = 0; i < d; ++i) {
                for (int r = 0; r < t.noise_dim; ++r) ctl.sigma[static_cast<std::size_t>(i * t.noise_dim + r)][k] = jet.sigma(i, r);
                ctl.b[static_cast<std::size_t>(i)][k] = jet.b[i];
            }
            ctl.c[k] = jet.c;
            ctl.f[k] = jet.f;
        }
        t.controls.push_back(std::move(ctl));
    }
    t.g.resize(n);
    for (std::size_t k = 0; k < n; ++k) t.g[k] = p.g(node_point(t, k)).value;
    return t;
}

double quad(const Vec& x) { return 1.0 + x[0] - 2.0 * x[1] + 0.5 * x[0] * x[0] + 0.75 * x[0] * x[1] - x[1] * x[1]; }

}  // namespace

TEST(Table, ReproducesQuadraticDataWithDerivatives) {
    CoefficientTable t{vec({-1.0, -2.0}), vec({2.0, 1.0}), {7, 5}, 1, {}, {}};
    const std::size_t n = t.node_count();
    CoefficientTable::Control ctl{"a", {std::vector<double>(n), std::vector<double>(n)}, {}, {}, std::vector<double>(n)};
    t.g.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec x = node_point(t, k);
        ctl.sigma[0][k] = 1.0;
        ctl.sigma[1][k] = 0.5;
        ctl.f[k] = quad(x);
        t.g[k] = x[0] * x[1];
    }
    t.controls.push_back(ctl);
    const ControlProblem p = make_table_problem(t);
    EXPECT_GT(p.k0(), 0.0);
    for (const Vec& x : {vec({0.1, -0.3}), vec({-0.95, 0.9}), vec({1.97, -1.99}), vec({0.5, 0.5})}) {
        const CoefficientJet jet = p.coefficients(0, x, 2);
        EXPECT_NEAR(jet.f, quad(x), 1e-12);
        EXPECT_NEAR(jet.df[0], 1.0 + x[0] + 0.75 * x[1], 1e-11);
        EXPECT_NEAR(jet.df[1], -2.0 + 0.75 * x[0] - 2.0 * x[1], 1e-11);
        EXPECT_NEAR(jet.d2f(0, 0), 1.0, 1e-9);
        EXPECT_NEAR(jet.d2f(0, 1), 0.75, 1e-9);
        EXPECT_NEAR(jet.d2f(1, 0), 0.75, 1e-9);
        EXPECT_NEAR(jet.d2f(1, 1), -2.0, 1e-9);
        EXPECT_NEAR(jet.sigma(1, 0), 0.5, 1e-12);
        EXPECT_NEAR(jet.dsigma[0](0, 0), 0.0, 1e-11);
        EXPECT_EQ(jet.c, 0.0);
        const ScalarJet g = p.g(x, 2);
        EXPECT_NEAR(g.value, x[0] * x[1], 1e-12);
        EXPECT_NEAR(g.grad[0], x[1], 1e-11);
        EXPECT_NEAR(g.hess(0, 1), 1.0, 1e-9);
    }
}

TEST(Table, SampledProblemMatchesTheOriginalOracle) {
    const ControlProblem original = make_builtin_problem("degenerate2d");
    const ControlProblem table = make_table_problem(sample(original, vec({-1.1, -1.1}), vec({1.1, 1.1}), {45, 45}));
    ASSERT_EQ(table.labels(), original.labels());
    const Vec x = vec({0.2, -0.1});
    const CoefficientJet a = original.coefficients(0, x, 0);
    const CoefficientJet b = table.coefficients(0, x, 0);
    EXPECT_LE((a.diffusion() - b.diffusion()).cwiseAbs().maxCoeff(), 1e-3);
    const Domain dom = default_domain(2);
    const double v0 = oracle_value(solve_bellman_fd(original, dom, 0.05), vec({0.0, 0.0}));
    const double v1 = oracle_value(solve_bellman_fd(table, dom, 0.05), vec({0.0, 0.0}));
    EXPECT_NEAR(v1, v0, 1e-3 * std::max(1.0, std::abs(v0)));
}

TEST(Table, InconsistentSizesAreRejected) {
    CoefficientTable t{vec({-1.0}), vec({1.0}), {5}, 1, {{"a", {std::vector<double>(5, 1.0)}, {}, {}, {}}},
                       std::vector<double>(5, 0.0)};
    EXPECT_NO_THROW((void)make_table_problem(t));
    CoefficientTable short_g = t;
    short_g.g.pop_back();
    EXPECT_THROW((void)make_table_problem(short_g), Error);
    CoefficientTable few_nodes = t;
    few_nodes.nodes = {2};
    EXPECT_THROW((void)make_table_problem(few_nodes), Error);
    CoefficientTable bad_sigma = t;
    bad_sigma.controls[0].sigma.push_back(std::vector<double>(5, 0.0));
    EXPECT_THROW((void)make_table_problem(bad_sigma), Error);
    CoefficientTable duplicate = t;
    duplicate.controls.push_back(duplicate.controls[0]);
    EXPECT_THROW((void)make_table_problem(duplicate), Error);
}

TEST(Table, HarnessRunsATableProblem) {
    nlohmann::json cfg = nlohmann::json::parse(R"({"schema_version":1,"params":{"n_paths":2000,"seed":3},
      "estimators":[{"kind":"value","label":"v0","x0":[0.0]},{"kind":"oracle","label":"grid","x0":[0.0]}]})");
    const std::vector<double> ones(5, 1.0);
    cfg["problem"] = {{"name", "table"},
                      {"table",
                       {{"lo", {-1.0}},
                        {"hi", {1.0}},
                        {"nodes", {5}},
                        {"controls", {{{"label", "a"}, {"sigma", {std::vector<double>(5, std::sqrt(2.0))}}, {"f", ones}}}},
                        {"g", std::vector<double>(5, 0.0)}}}};
    const RunResult r = run_experiment(parse_config(cfg.dump()), {});
    ASSERT_EQ(r.exit_code, kExitOk) << r.message;
    const nlohmann::json j = nlohmann::json::parse(r.results_json);
    const nlohmann::json& est = j["results"][0]["estimate"];
    EXPECT_NEAR(est["mean"].get<double>(), 0.5, 3 * est["std_error"].get<double>() + 0.05);
}

TEST(Table, ConfigErrorsPointIntoTheTable) {
    const auto pointer = [](const std::string& problem) {
        try {
            (void)parse_config(R"({"schema_version":1,"problem":)" + problem +
                               R"(,"estimators":[{"kind":"value","x0":[0]}]})");
        } catch (const ConfigError& e) {
            return e.pointer();
        }
        return std::string("no error");
    };
    EXPECT_EQ(pointer(R"({"name":"table"})"), "/problem/table");
    EXPECT_EQ(pointer(R"({"name":"ode1d","table":{}})"), "/problem/table");
    EXPECT_EQ(pointer(R"({"name":"table","table":{"lo":[-1],"hi":[1],"nodes":[3],"g":[0,0],
        "controls":[{"sigma":[[1,1,1]]}]}})"),
              "/problem/table/g");
    EXPECT_EQ(pointer(R"({"name":"table","table":{"lo":[-1],"hi":[1],"nodes":[3],"g":[0,0,0],
        "controls":[{"sigma":[[1,1,1]],"c":[0,-1,0]}]}})"),
              "/problem/table/controls/0/c");
}
