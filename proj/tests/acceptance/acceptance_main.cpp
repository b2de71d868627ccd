#include "qdlab/builtins.hpp"
#include "qdlab/harness.hpp"
#include "qdlab/oracle.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace qdlab;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Timer {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json run(const json& config, int threads = 1) {
    const RunResult r = run_experiment(parse_config(config.dump()), {.threads = threads});
    if (r.exit_code != kExitOk) throw std::runtime_error("exit " + std::to_string(r.exit_code) + ": " + r.message);
    return json::parse(r.results_json)["results"];
}

json by_label(const json& results, const std::string& label) {
    for (const json& r : results) {
        if (r["label"] == label) return r;
    }
    throw std::runtime_error("no result labelled " + label);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

Vec vec1(double x) { return Vec::Constant(1, x); }

Outcome closed_form_value() {
    Timer timer;
    const json res = run({{"schema_version", 1},
                          {"problem", {{"name", "ode1d"}}},
                          {"params", {{"n_paths", 10000}, {"dt0", 1e-3}}},
                          {"estimators", {{{"kind", "value"}, {"label", "mc"}, {"x0", {0.0}}}}}});
    const double mc_seconds = timer.seconds();
    const json est = by_label(res, "mc")["estimate"];
    const double mean = est["mean"];
    const double se = est["std_error"];
    const GridSolution sol = solve_bellman_fd(make_builtin_problem("ode1d"), default_domain(1), 1e-3);
    const double grid = oracle_value(sol, vec1(0.0));
    const bool ok = std::abs(mean - 0.5) <= 3 * se + 0.05 && std::abs(grid - 0.5) <= 1e-4 && mc_seconds <= 30.0;
    return {ok, "mc=" + fmt(mean) + "+-" + fmt(se) + " grid=" + fmt(grid) + " mc_time=" + fmt(mc_seconds) + "s"};
}

Outcome controlled_selection() {
    const ControlProblem p = make_builtin_problem("twocontrol1d", {{"f", -1.0}});
    const GridSolution sol = solve_bellman_fd(p, default_domain(1), 0.01);
    std::set<std::string> used;
    for (std::size_t k = 0; k < sol.size(); ++k) {
        if (sol.inside[k]) used.insert(sol.labels.at(static_cast<std::size_t>(sol.policy[k])));
    }
    const double grid = oracle_value(sol, vec1(0.0));
    const json res = run({{"schema_version", 1},
                          {"problem", {{"name", "twocontrol1d"}, {"params", {{"f", -1.0}}}}},
                          {"params", {{"n_paths", 10000}}},
                          {"estimators", {{{"kind", "value"}, {"label", "sup"}, {"x0", {0.0}}, {"policy", "sup"}}}}});
    const std::string argmax = by_label(res, "sup")["argmax_policy"];
    const bool ok = used == std::set<std::string>{"2"} && std::abs(grid + 0.25) <= 1e-3 && argmax == "2";
    std::string labels;
    for (const auto& l : used) labels += l + " ";
    return {ok, "grid_policies={ " + labels + "} grid_v0=" + fmt(grid) + " sup_argmax=" + argmax};
}

Outcome mu_example() {
    const json res = run({{"schema_version", 1}, {"builtin", "exa-mu"}});
    const double parallel = by_label(res, "mu_parallel")["mu"];
    const double orthogonal = by_label(res, "mu_orthogonal")["mu"];
    const bool ok = std::abs(parallel - 1.0) <= 1e-9 && std::abs(orthogonal) <= 1e-9;
    return {ok, "mu(1,1)=" + fmt(parallel) + " mu(1,-1)=" + fmt(orthogonal)};
}

Outcome first_derivative_agreement() {
    Timer timer;
    struct Case {
        std::string name;
        json params;
        double x0;
    };
    const std::vector<Case> cases{{"ode1d", json::object(), 0.5}, {"twocontrol1d", {{"f", -1.0}}, 0.5}};
    bool ok = true;
    std::string detail;
    for (const Case& c : cases) {
        json problem = {{"name", c.name}};
        if (!c.params.empty()) problem["params"] = c.params;
        const json res = run({{"schema_version", 1},
                              {"problem", problem},
                              {"params", {{"n_paths", 10000}, {"dt0", 1e-3}}},
                              {"estimators",
                               {{{"kind", "first_quasi"}, {"label", "quasi"}, {"x0", {c.x0}}, {"xi", {1.0}}},
                                {{"kind", "first_fd"}, {"label", "fd"}, {"x0", {c.x0}}, {"xi", {1.0}}, {"eps", 0.05}},
                                {{"kind", "oracle"}, {"label", "grid"}, {"h", 0.005}, {"x0", {c.x0}}, {"xi", {1.0}}}}}});
        const json q = by_label(res, "quasi")["estimate"];
        const json fd = by_label(res, "fd")["estimate"];
        const double grid = by_label(res, "grid")["at_x0"]["first"];
        const double qm = q["mean"], qs = q["std_error"], fm = fd["mean"], fs = fd["std_error"];
        const bool vs_fd = std::abs(qm - fm) <= 3 * std::hypot(qs, fs) + 0.05;
        const bool vs_grid = std::abs(qm - grid) <= 3 * qs + 0.05;
        ok = ok && vs_fd && vs_grid;
        detail += c.name + ": quasi=" + fmt(qm) + "+-" + fmt(qs) + " fd=" + fmt(fm) + "+-" + fmt(fs) +
                  " grid=" + fmt(grid) + "; ";
    }
    const double seconds = timer.seconds();
    ok = ok && seconds <= 60.0;
    return {ok, detail + "time=" + fmt(seconds) + "s"};
}

Outcome pathwise_convergence() {
    const json res = run({{"schema_version", 1},
                          {"problem", {{"name", "ode1d"}}},
                          {"interior_condition", {{"name", "constant"}, {"rho", {0.5}}, {"m", 0.5}}},
                          {"params", {{"recipe", "interior"}, {"eps", {0.1, 0.05, 0.025}}}},
                          {"estimators",
                           {{{"kind", "convergence"}, {"label", "conv"}, {"x0", {0.5}}, {"xi", {1.0}}, {"n_seeds", 64}}}}});
    const json c = by_label(res, "conv");
    bool ok = true;
    std::string detail = "first_ratios=";
    for (const double r : c["first_ratios"]) {
        ok = ok && r >= 1.5 && r <= 3.0;
        detail += fmt(r) + " ";
    }
    detail += "second_ratios=";
    for (const double r : c["second_ratios"]) {
        ok = ok && r >= 1.5 && r <= 3.0;
        detail += fmt(r) + " ";
    }
    return {ok, detail};
}

Outcome supermartingale() {
    const std::vector<double> checkpoints{0.0, 0.005, 0.01, 0.02, 0.04, 0.08, 0.16, 0.32};
    const json res = run({{"schema_version", 1},
                          {"problem", {{"name", "ode1d"}}},
                          {"params", {{"n_paths", 10000}, {"lambda", 0.25}}},
                          {"estimators",
                           {{{"kind", "supermartingale"},
                             {"label", "boundary"},
                             {"barrier", "boundary"},
                             {"x0", {std::sqrt(1.0 - 0.125)}},
                             {"xi", {1.0}},
                             {"checkpoints", checkpoints}},
                            {{"kind", "supermartingale"},
                             {"label", "interior"},
                             {"barrier", "interior"},
                             {"x0", {0.5}},
                             {"xi", {1.0}},
                             {"checkpoints", checkpoints}}}}});
    bool ok = true;
    std::string detail;
    for (const char* label : {"boundary", "interior"}) {
        const json r = by_label(res, label);
        for (const char* which : {"barrier_process", "sqrt_barrier_process"}) {
            const json v = r[which];
            ok = ok && v["pass"].get<bool>();
            detail += std::string(label) + "/" + which + " max_z=" + fmt(v["max_z"]) + " crit=" + fmt(v["critical_z"]) +
                      (v["pass"].get<bool>() ? " ok; " : " FAIL; ");
        }
    }
    return {ok, detail};
}

Outcome moment_ladders() {
    const double lambda = 0.25;
    const double delta = 1e-4;
    const json res = run({{"schema_version", 1},
                          {"problem", {{"name", "ode1d"}}},
                          {"params", {{"n_paths", 4000}, {"lambda", lambda}, {"delta", delta}}},
                          {"estimators",
                           {{{"kind", "moment_ladder"},
                             {"label", "boundary"},
                             {"barrier", "boundary"},
                             {"x0", {0.0}},
                             {"outer", {1.0}},
                             {"xi", {1.0}},
                             {"psi_hi", 0.8 * lambda},
                             {"psi_lo", 10 * delta},
                             {"points", 10}},
                            {{"kind", "moment_ladder"},
                             {"label", "interior"},
                             {"barrier", "interior"},
                             {"x0", {0.0}},
                             {"outer", {1.0}},
                             {"xi", {1.0}},
                             {"psi_hi", 0.9},
                             {"psi_lo", 1.2 * lambda * lambda},
                             {"points", 10}}}}});
    bool ok = true;
    std::string detail;
    for (const char* label : {"boundary", "interior"}) {
        const json r = by_label(res, label);
        ok = ok && r["pass"].get<bool>();
        double min_p = 1.0;
        std::size_t items = 0;
        std::string worst;
        for (const json& t : r["trends"]) {
            if (!t["counted"].get<bool>()) continue;
            const double p = t["trend"]["p_increasing"];
            if (p < min_p) {
                min_p = p;
                worst = t["item"];
            }
            ++items;
        }
        detail += std::string(label) + ": items=" + std::to_string(items) + " min_p=" + fmt(min_p) + " (" + worst + "); ";
    }
    return {ok, detail};
}

Outcome derivative_bounds() {
    struct Case {
        std::string name;
        json params;
        std::vector<double> x0, outer, xi;
        double h, psi_hi, psi_lo;
    };
    const std::vector<Case> cases{
        {"ode1d", json::object(), {0.0}, {1.0}, {1.0}, 0.002, 0.5, 0.01},
        {"twocontrol1d", {{"f", -1.0}}, {0.0}, {1.0}, {1.0}, 0.002, 0.5, 0.01},
        {"degenerate2d", json::object(), {0.0, 0.0}, {0.6, 0.8}, {0.6, 0.8}, 0.01, 0.5, 0.04},
    };
    bool ok = true;
    std::string detail;
    for (const Case& c : cases) {
        json problem = {{"name", c.name}};
        if (!c.params.empty()) problem["params"] = c.params;
        const json res = run({{"schema_version", 1},
                              {"problem", problem},
                              {"estimators",
                               {{{"kind", "derivative_bounds"},
                                 {"label", "bounds"},
                                 {"provider", "oracle"},
                                 {"h", c.h},
                                 {"x0", c.x0},
                                 {"outer", c.outer},
                                 {"xi", c.xi},
                                 {"psi_hi", c.psi_hi},
                                 {"psi_lo", c.psi_lo},
                                 {"points", 10}}}}});
        const json r = by_label(res, "bounds");
        ok = ok && r["pass"].get<bool>();
        detail += c.name + ": C=(" + fmt(r["fitted_first"]) + "," + fmt(r["fitted_lower"]) + "," +
                  fmt(r["fitted_upper"]) + ") p=(" + fmt(r["first_trend"]["p_increasing"]) + "," +
                  fmt(r["lower_trend"]["p_increasing"]) + "," + fmt(r["upper_trend"]["p_increasing"]) + "); ";
    }
    return {ok, detail};
}

Outcome exit_gap() {
    const json res = run({{"schema_version", 1},
                          {"problem", {{"name", "ode1d"}}},
                          {"params", {{"n_paths", 10000}, {"eps", {0.1, 0.05, 0.025}}}},
                          {"estimators", {{{"kind", "exit_gap"}, {"label", "gap"}, {"x0", {0.5}}, {"xi", {1.0}}}}}});
    const json rows = by_label(res, "gap")["rows"];
    bool ok = rows.size() == 3;
    std::string detail;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const double g = rows[k]["gap"], se = rows[k]["std_error"];
        detail += "eps=" + fmt(rows[k]["eps"]) + ":" + fmt(g) + "+-" + fmt(se) + " ";
        if (k > 0) {
            const double prev = rows[k - 1]["gap"], prev_se = rows[k - 1]["std_error"];
            ok = ok && g <= prev + 2 * std::hypot(se, prev_se);
        }
    }
    return {ok, detail};
}

Outcome oracle_checks() {
    constexpr double kTol = 1e-8;
    bool ok = true;
    std::string detail;
    const std::vector<std::pair<std::string, ParamMap>> problems{
        {"ode1d", {}}, {"twocontrol1d", {{"f", -1.0}}}, {"degenerate2d", {}}};
    for (const auto& [name, params] : problems) {
        const ControlProblem p = make_builtin_problem(name, params);
        const Domain d = default_domain(p.dim());
        const double h = p.dim() == 1 ? 1e-3 : 0.02;
        const GridSolution sol = solve_bellman_fd(p, d, h);
        const UniquenessReport u = uniqueness_probe(p, d, p.dim() == 1 ? 0.01 : 0.04, kTol, 3);
        ok = ok && sol.converged && sol.max_residual() <= kTol && u.max_deviation <= 10 * kTol;
        detail += name + ": residual=" + fmt(sol.max_residual()) + " uniq=" + fmt(u.max_deviation) + "; ";
    }
    for (const double c : {1.0, 4.0}) {
        const ParamMap params{{"c", c}};
        const ControlProblem p = make_builtin_problem("ode1d", params);
        const ClosedForm exact = *builtin_closed_form("ode1d", params);
        std::vector<double> errors;
        for (const double h : {0.02, 0.01, 0.005}) {
            const GridSolution sol = solve_bellman_fd(p, default_domain(1), h);
            double err = 0.0;
            for (std::size_t k = 0; k < sol.size(); ++k) {
                if (sol.inside[k]) err = std::max(err, std::abs(sol.v[k] - exact(sol.node(k)).value));
            }
            errors.push_back(err);
        }
        detail += "cosh c=" + fmt(c) + " ratios=";
        for (std::size_t k = 1; k < errors.size(); ++k) {
            const double ratio = errors[k - 1] / errors[k];
            ok = ok && ratio >= 3.0 && ratio <= 5.0;
            detail += fmt(ratio) + " ";
        }
        detail += "; ";
    }
    // quadratic solution: the scheme is exact up to roundoff
    const ControlProblem lap = make_builtin_problem("laplace2d");
    const ClosedForm lap_exact = *builtin_closed_form("laplace2d", {});
    const GridSolution lap_sol = solve_bellman_fd(lap, default_domain(2), 0.05);
    double lap_err = 0.0;
    for (std::size_t k = 0; k < lap_sol.size(); ++k) {
        if (lap_sol.inside[k]) lap_err = std::max(lap_err, std::abs(lap_sol.v[k] - lap_exact(lap_sol.node(k)).value));
    }
    ok = ok && lap_err <= 1e-9;
    detail += "laplace2d quadratic error=" + fmt(lap_err);
    return {ok, detail};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "qdlab_acceptance_determinism";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const json config = {{"schema_version", 1},
                         {"problem", {{"name", "ode1d"}}},
                         {"params", {{"n_paths", 4000}, {"seed", 42}}},
                         {"estimators",
                          {{{"kind", "value"}, {"label", "v"}, {"x0", {0.0}}},
                           {{"kind", "first_quasi"}, {"label", "quasi"}, {"x0", {0.5}}, {"xi", {1.0}}},
                           {{"kind", "first_fd"}, {"label", "fd"}, {"x0", {0.5}}, {"xi", {1.0}}}}}};
    std::ofstream(dir / "config.json") << config.dump(2);
    const std::string cli = QDLAB_CLI;
    std::vector<std::string> payloads;
    int failures = 0;
    for (const auto& [threads, sub] : std::vector<std::pair<int, std::string>>{{1, "a"}, {3, "b"}, {1, "c"}}) {
        const std::string cmd = cli + " run --config " + (dir / "config.json").string() + " --threads " +
                                std::to_string(threads) + " --out " + (dir / sub).string() + " >/dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) ++failures;
        payloads.push_back(slurp(dir / sub / "results.json"));
    }
    const bool same = !payloads[0].empty() && payloads[0] == payloads[1] && payloads[0] == payloads[2];
    std::filesystem::remove_all(dir);
    return {failures == 0 && same, "cli_failures=" + std::to_string(failures) +
                                       " bytes=" + std::to_string(payloads[0].size()) + (same ? " identical" : " differ")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"closed-form value", closed_form_value},
        {"controlled selection", controlled_selection},
        {"mu example", mu_example},
        {"first-derivative agreement", first_derivative_agreement},
        {"pathwise convergence", pathwise_convergence},
        {"supermartingale verdicts", supermartingale},
        {"moment-bound ladders", moment_ladders},
        {"derivative-bound ratios", derivative_bounds},
        {"exit-time gap", exit_gap},
        {"oracle self-checks", oracle_checks},
        {"determinism", determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << "criterion " << id << " (" << criteria[k].first << "): " << (o.pass ? "PASS" : "FAIL") << "  "
                  << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
