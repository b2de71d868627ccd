#include "qdlab/harness.hpp"

#include "qdlab/assumptions.hpp"
#include "qdlab/domain.hpp"
#include "qdlab/estimators.hpp"
#include "qdlab/oracle.hpp"
#include "qdlab/problem.hpp"
#include "qdlab/verification.hpp"

#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#ifndef QDLAB_VERSION
#define QDLAB_VERSION "0.0.0"
#endif

namespace qdlab {

namespace {

using json = nlohmann::ordered_json;

const std::set<std::string> kKinds{"value",           "first_fd",        "second_fd",     "first_quasi",
                                   "second_quasi",    "convergence",     "exit_gap",      "exit_tail",
                                   "oracle",          "uniqueness",      "supermartingale", "moment_ladder",
                                   "derivative_bounds", "normal_derivative", "mu"};

/// Kinds that simulate the boundary construction and so rely on nondegeneracy along the normal.
const std::set<std::string> kNeedsNormalNondegeneracy{"first_quasi",     "second_quasi",  "convergence",
                                                      "exit_gap",        "supermartingale", "moment_ladder"};

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string child(const std::string& ptr, std::size_t idx) { return ptr + "/" + std::to_string(idx); }

void require_keys(const json& obj, const std::string& ptr, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(ptr.empty() ? "/" : ptr, "expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError(child(ptr, key), "unknown key");
    }
}

double read_number(const json& v, const std::string& ptr) {
    if (!v.is_number()) throw ConfigError(ptr, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(ptr, "expected a finite number");
    return x;
}

double read_positive(const json& v, const std::string& ptr) {
    const double x = read_number(v, ptr);
    if (!(x > 0.0)) throw ConfigError(ptr, "expected a positive number");
    return x;
}

std::size_t read_count(const json& v, const std::string& ptr, std::size_t min_value = 1) {
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value)) {
        throw ConfigError(ptr, "expected an integer >= " + std::to_string(min_value));
    }
    return v.get<std::size_t>();
}

std::string read_string(const json& v, const std::string& ptr) {
    if (!v.is_string()) throw ConfigError(ptr, "expected a string");
    return v.get<std::string>();
}

Vec read_vec(const json& v, const std::string& ptr) {
    if (!v.is_array() || v.empty() || v.size() > static_cast<std::size_t>(kMaxDim)) {
        throw ConfigError(ptr, "expected an array of 1 to " + std::to_string(kMaxDim) + " numbers");
    }
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = read_number(v[i], child(ptr, i));
    return out;
}

std::vector<double> read_list(const json& v, const std::string& ptr) {
    if (!v.is_array() || v.empty()) throw ConfigError(ptr, "expected a nonempty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(read_number(v[i], child(ptr, i)));
    return out;
}

Mat read_mat(const json& v, const std::string& ptr) {
    if (!v.is_array() || v.empty() || v.size() > static_cast<std::size_t>(kMaxDim)) {
        throw ConfigError(ptr, "expected a square matrix as an array of rows");
    }
    const auto n = static_cast<Eigen::Index>(v.size());
    Mat out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec row = read_vec(v[static_cast<std::size_t>(i)], child(ptr, static_cast<std::size_t>(i)));
        if (row.size() != n) throw ConfigError(child(ptr, static_cast<std::size_t>(i)), "row length mismatch");
        out.row(i) = row.transpose();
    }
    return out;
}

DomainSpec parse_domain(const json& j, const std::string& ptr) {
    require_keys(j, ptr, {"kind", "center", "radius", "semi_axes"});
    DomainSpec d;
    if (j.contains("kind")) d.type = read_string(j["kind"], child(ptr, "kind"));
    if (d.type != "ball" && d.type != "ellipsoid" && d.type != "smoothed_box") {
        throw ConfigError(child(ptr, "kind"), "expected ball, ellipsoid or smoothed_box");
    }
    if (!j.contains("center")) throw ConfigError(child(ptr, "center"), "missing");
    d.center = read_vec(j["center"], child(ptr, "center"));
    if (d.type == "ball") {
        if (j.contains("radius")) d.radius = read_positive(j["radius"], child(ptr, "radius"));
    } else {
        if (!j.contains("semi_axes")) throw ConfigError(child(ptr, "semi_axes"), "missing");
        d.semi_axes = read_vec(j["semi_axes"], child(ptr, "semi_axes"));
        if (d.semi_axes.size() != d.center.size()) throw ConfigError(child(ptr, "semi_axes"), "dimension mismatch");
        if ((d.semi_axes.array() <= 0.0).any()) throw ConfigError(child(ptr, "semi_axes"), "must be positive");
    }
    return d;
}

std::vector<double> read_nodal(const json& v, const std::string& ptr, std::size_t n) {
    std::vector<double> out = read_list(v, ptr);
    if (out.size() != n) throw ConfigError(ptr, "expected " + std::to_string(n) + " node values");
    return out;
}

CoefficientTable parse_table(const json& j, const std::string& ptr) {
    require_keys(j, ptr, {"lo", "hi", "nodes", "noise_dim", "controls", "g"});
    for (const char* key : {"lo", "hi", "nodes", "controls", "g"}) {
        if (!j.contains(key)) throw ConfigError(child(ptr, key), "missing");
    }
    CoefficientTable t;
    t.lo = read_vec(j["lo"], child(ptr, "lo"));
    t.hi = read_vec(j["hi"], child(ptr, "hi"));
    const json& nodes = j["nodes"];
    if (!nodes.is_array() || nodes.size() != static_cast<std::size_t>(t.lo.size())) {
        throw ConfigError(child(ptr, "nodes"), "expected one node count per axis");
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) t.nodes.push_back(static_cast<int>(read_count(nodes[i], child(child(ptr, "nodes"), i), 3)));
    if (t.hi.size() != t.lo.size()) throw ConfigError(child(ptr, "hi"), "dimension mismatch");
    for (Eigen::Index i = 0; i < t.lo.size(); ++i) {
        if (!(t.hi[i] > t.lo[i])) throw ConfigError(child(child(ptr, "hi"), static_cast<std::size_t>(i)), "must exceed lo");
    }
    if (j.contains("noise_dim")) {
        const std::size_t k = read_count(j["noise_dim"], child(ptr, "noise_dim"));
        if (k > static_cast<std::size_t>(kMaxDim)) throw ConfigError(child(ptr, "noise_dim"), "too large");
        t.noise_dim = static_cast<int>(k);
    }
    const std::size_t n = t.node_count();
    const auto d = static_cast<std::size_t>(t.dim());
    t.g = read_nodal(j["g"], child(ptr, "g"), n);
    const json& controls = j["controls"];
    if (!controls.is_array() || controls.empty()) throw ConfigError(child(ptr, "controls"), "expected a nonempty array");
    std::set<std::string> labels;
    for (std::size_t c = 0; c < controls.size(); ++c) {
        const std::string cp = child(child(ptr, "controls"), c);
        const json& cj = controls[c];
        require_keys(cj, cp, {"label", "sigma", "b", "c", "f"});
        CoefficientTable::Control ctl;
        ctl.label = cj.contains("label") ? read_string(cj["label"], child(cp, "label")) : std::to_string(c + 1);
        if (!labels.insert(ctl.label).second) throw ConfigError(child(cp, "label"), "duplicate label");
        if (!cj.contains("sigma")) throw ConfigError(child(cp, "sigma"), "missing");
        const json& sigma = cj["sigma"];
        if (!sigma.is_array() || sigma.size() != d * static_cast<std::size_t>(t.noise_dim)) {
            throw ConfigError(child(cp, "sigma"), "expected d * noise_dim arrays of node values");
        }
        for (std::size_t k = 0; k < sigma.size(); ++k) ctl.sigma.push_back(read_nodal(sigma[k], child(child(cp, "sigma"), k), n));
        if (cj.contains("b")) {
            const json& b = cj["b"];
            if (!b.is_array() || b.size() != d) throw ConfigError(child(cp, "b"), "expected one array per coordinate");
            for (std::size_t k = 0; k < d; ++k) ctl.b.push_back(read_nodal(b[k], child(child(cp, "b"), k), n));
        }
        if (cj.contains("c")) {
            ctl.c = read_nodal(cj["c"], child(cp, "c"), n);
            if (std::any_of(ctl.c.begin(), ctl.c.end(), [](double v) { return v < 0.0; })) {
                throw ConfigError(child(cp, "c"), "must be nonnegative");
            }
        }
        if (cj.contains("f")) ctl.f = read_nodal(cj["f"], child(cp, "f"), n);
        t.controls.push_back(std::move(ctl));
    }
    return t;
}

ConditionSpec parse_condition(const json& j, const std::string& ptr) {
    require_keys(j, ptr, {"name", "rho", "m", "q"});
    ConditionSpec c;
    if (j.contains("name")) c.name = read_string(j["name"], child(ptr, "name"));
    if (c.name != "zero" && c.name != "constant") throw ConfigError(child(ptr, "name"), "expected zero or constant");
    if (j.contains("rho")) c.rho = read_vec(j["rho"], child(ptr, "rho"));
    if (j.contains("m")) c.m = read_number(j["m"], child(ptr, "m"));
    if (j.contains("q")) {
        const json& q = j["q"];
        if (!q.is_array()) throw ConfigError(child(ptr, "q"), "expected an array of skew matrices");
        for (std::size_t i = 0; i < q.size(); ++i) c.q_basis.push_back(read_mat(q[i], child(child(ptr, "q"), i)));
    }
    if (c.name == "zero" && (c.rho.size() > 0 || c.m != 0.0 || !c.q_basis.empty())) {
        throw ConfigError(child(ptr, "name"), "the zero condition takes no fields");
    }
    return c;
}

ExperimentParams parse_params(const json& j, const std::string& ptr) {
    require_keys(j, ptr, {"delta", "lambda", "k1", "eps", "dt0", "horizon", "n_paths", "seed", "recipe"});
    ExperimentParams p;
    if (j.contains("delta")) p.delta = read_positive(j["delta"], child(ptr, "delta"));
    if (j.contains("lambda")) p.lambda = read_positive(j["lambda"], child(ptr, "lambda"));
    try {
        (void)Levels(p.delta, p.lambda);
    } catch (const Error& e) {
        throw ConfigError(child(ptr, "lambda"), e.what());
    }
    if (j.contains("k1")) p.k1 = read_positive(j["k1"], child(ptr, "k1"));
    if (j.contains("eps")) {
        p.eps = read_list(j["eps"], child(ptr, "eps"));
        for (std::size_t i = 0; i < p.eps.size(); ++i) {
            if (!(p.eps[i] > 0.0)) throw ConfigError(child(child(ptr, "eps"), i), "expected a positive number");
        }
    }
    if (j.contains("dt0")) p.dt0 = read_positive(j["dt0"], child(ptr, "dt0"));
    if (j.contains("horizon")) p.horizon = read_positive(j["horizon"], child(ptr, "horizon"));
    if (j.contains("n_paths")) p.n_paths = read_count(j["n_paths"], child(ptr, "n_paths"));
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError(child(ptr, "seed"), "expected an unsigned integer");
        p.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("recipe")) {
        p.recipe = read_string(j["recipe"], child(ptr, "recipe"));
        if (p.recipe != "switched" && p.recipe != "none" && p.recipe != "interior" && p.recipe != "boundary") {
            throw ConfigError(child(ptr, "recipe"), "expected switched, none, interior or boundary");
        }
    }
    return p;
}

EstimatorSpec parse_estimator(const json& j, const std::string& ptr, std::size_t idx) {
    require_keys(j, ptr,
                 {"kind", "label", "x0", "xi", "eta0", "outer", "policy", "provider", "barrier", "eps", "h",
                  "normal_bound", "psi_hi", "psi_lo", "checkpoints", "n_paths", "n_seeds", "points"});
    EstimatorSpec e;
    if (!j.contains("kind")) throw ConfigError(child(ptr, "kind"), "missing");
    e.kind = read_string(j["kind"], child(ptr, "kind"));
    if (!kKinds.count(e.kind)) throw ConfigError(child(ptr, "kind"), "unknown estimator kind '" + e.kind + "'");
    e.label = j.contains("label") ? read_string(j["label"], child(ptr, "label")) : e.kind + "_" + std::to_string(idx);
    if (e.label.empty() || e.label.find_first_of("/\\ .") != std::string::npos) {
        throw ConfigError(child(ptr, "label"), "labels must be nonempty and free of separators");
    }
    if (j.contains("x0")) e.x0 = read_vec(j["x0"], child(ptr, "x0"));
    if (j.contains("xi")) e.xi = read_vec(j["xi"], child(ptr, "xi"));
    if (j.contains("eta0")) e.eta0 = read_vec(j["eta0"], child(ptr, "eta0"));
    if (j.contains("outer")) e.outer = read_vec(j["outer"], child(ptr, "outer"));
    if (j.contains("policy")) e.policy = read_string(j["policy"], child(ptr, "policy"));
    if (j.contains("provider")) {
        e.provider = read_string(j["provider"], child(ptr, "provider"));
        if (e.provider != "closed_form" && e.provider != "oracle" && e.provider != "boundary_data") {
            throw ConfigError(child(ptr, "provider"), "expected closed_form, oracle or boundary_data");
        }
    }
    if (j.contains("barrier")) {
        e.barrier = read_string(j["barrier"], child(ptr, "barrier"));
        if (e.barrier != "boundary" && e.barrier != "interior") {
            throw ConfigError(child(ptr, "barrier"), "expected boundary or interior");
        }
    }
    if (j.contains("eps")) e.eps = read_positive(j["eps"], child(ptr, "eps"));
    if (j.contains("h")) e.h = read_positive(j["h"], child(ptr, "h"));
    if (j.contains("normal_bound")) e.normal_bound = read_positive(j["normal_bound"], child(ptr, "normal_bound"));
    if (j.contains("psi_hi")) e.psi_hi = read_positive(j["psi_hi"], child(ptr, "psi_hi"));
    if (j.contains("psi_lo")) e.psi_lo = read_positive(j["psi_lo"], child(ptr, "psi_lo"));
    if (j.contains("checkpoints")) {
        e.checkpoints = read_list(j["checkpoints"], child(ptr, "checkpoints"));
        if (!std::is_sorted(e.checkpoints.begin(), e.checkpoints.end()) || e.checkpoints.front() < 0.0) {
            throw ConfigError(child(ptr, "checkpoints"), "expected nondecreasing nonnegative times");
        }
    }
    if (j.contains("n_paths")) e.n_paths = read_count(j["n_paths"], child(ptr, "n_paths"));
    if (j.contains("n_seeds")) e.n_seeds = read_count(j["n_seeds"], child(ptr, "n_seeds"), 2);
    if (j.contains("points")) e.points = read_count(j["points"], child(ptr, "points"), 2);
    return e;
}

const std::map<std::string, std::pair<std::string, std::string>>& presets() {
    static const std::map<std::string, std::pair<std::string, std::string>> table{
        {"ode1d-value",
         {"Monte Carlo v(0) for the one-dimensional exit-time benchmark",
          R"({"schema_version":1,"problem":{"name":"ode1d"},"params":{"n_paths":10000},
              "estimators":[{"kind":"value","label":"v_at_0","x0":[0.0]}]})"}},
        {"ode1d-derivatives",
         {"first-derivative estimators at x = 0.5 on the exit-time benchmark",
          R"({"schema_version":1,"problem":{"name":"ode1d"},"params":{"n_paths":10000},
              "estimators":[{"kind":"first_quasi","label":"quasi","x0":[0.5],"xi":[1.0]},
                            {"kind":"first_fd","label":"fd","x0":[0.5],"xi":[1.0],"eps":0.05},
                            {"kind":"oracle","label":"grid","h":0.01,"x0":[0.5],"xi":[1.0]}]})"}},
        {"twocontrol-selection",
         {"sup over constant policies and the grid oracle on the two-control benchmark",
          R"({"schema_version":1,"problem":{"name":"twocontrol1d","params":{"f":-1.0}},"params":{"n_paths":10000},
              "estimators":[{"kind":"value","label":"sup_value","x0":[0.0],"policy":"sup"},
                            {"kind":"oracle","label":"grid","h":0.01,"x0":[0.0],"xi":[1.0]}]})"}},
        {"exa-mu",
         {"directional degeneracy of a = [[1, 1], [1, 1]] along (1, 1) and (1, -1)",
          R"({"schema_version":1,"problem":{"name":"paper-example-exa"},
              "estimators":[{"kind":"mu","label":"mu_parallel","x0":[0.1,0.2],"xi":[1.0,1.0]},
                            {"kind":"mu","label":"mu_orthogonal","x0":[0.1,0.2],"xi":[1.0,-1.0]}]})"}},
    };
    return table;
}

json estimate_json(const Estimate& e) {
    json j;
    j["mean"] = e.mean;
    j["std_error"] = e.std_error;
    j["n_paths"] = e.n_paths;
    j["truncated_fraction"] = e.truncated_fraction;
    j["horizon_fraction"] = e.horizon_fraction;
    j["aborted_fraction"] = e.aborted_fraction;
    j["bias_bound"] = e.bias_bound;
    j["boundary_band"] = e.boundary_band;
    j["flags"] = e.flags;
    return j;
}

json vec_json(const Vec& v) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

json trend_json(const TrendTest& t) {
    return json{{"s", t.s}, {"variance", t.variance}, {"z", t.z}, {"p_increasing", t.p_increasing},
                {"p_decreasing", t.p_decreasing}};
}

std::string csv_number(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

struct AssumptionFailure : Error {
    explicit AssumptionFailure(const std::string& message) : Error(ErrorCode::AssumptionViolated, message) {}
};

class Session {
public:
    Session(const ExperimentConfig& cfg, const RunOverrides& ov) : cfg_(cfg) {
        problem_ = cfg.table ? make_table_problem(*cfg.table) : make_builtin_problem(cfg.problem, cfg.problem_params);
        Domain raw = cfg.domain ? build_domain(*cfg.domain)
                     : cfg.table ? Domain::ellipsoid(0.5 * (cfg.table->lo + cfg.table->hi),
                                                     0.5 * (cfg.table->hi - cfg.table->lo))
                                 : default_domain(problem_.dim());
        if (raw.dim() != problem_.dim()) throw ConfigError("/domain/center", "dimension differs from the problem");
        normalization_ = normalize_psi(raw, problem_);
        domain_ = normalization_.domain;
        if (cfg.condition) condition_ = build_condition(*cfg.condition);
        closed_ = cfg.domain ? std::nullopt : builtin_closed_form(cfg.problem, cfg.problem_params);
        sp_.levels = Levels(cfg.params.delta, cfg.params.lambda);
        sp_.caps.dt0 = cfg.params.dt0;
        sp_.caps.horizon = cfg.params.horizon;
        sp_.seed = ov.seed.value_or(cfg.params.seed);
        sp_.threads = std::max(1, ov.threads);
        sp_.recipe = cfg.params.recipe == "none"       ? RecipeMode::None
                     : cfg.params.recipe == "interior" ? RecipeMode::InteriorOnly
                     : cfg.params.recipe == "boundary" ? RecipeMode::BoundaryOnly
                                                       : RecipeMode::Switched;
        k1_ = cfg.params.k1.value_or(default_k1(problem_));
    }

    json assumptions(bool need_normal) {
        json out;
        out["psi_scale"] = normalization_.scale;
        out["psi_generator_sup"] = normalization_.sup_generator_before;
        const NondegeneracyReport nd = check_nondegeneracy_normal(problem_, domain_);
        out["normal_nondegeneracy"] = json{{"delta0", nd.delta0},
                                           {"witness", vec_json(nd.witness)},
                                           {"control", problem_.label(nd.witness_control)},
                                           {"required", need_normal}};
        if (need_normal && !(nd.delta0 > 1e-12)) {
            throw AssumptionFailure("(a n, n) vanishes on the boundary at x=" + format_vec(nd.witness) +
                                    " control=" + problem_.label(nd.witness_control));
        }
        if (condition_) {
            validate_interior_condition(problem_, *condition_, domain_);
            const InteriorConditionReport ic = check_interior_condition(problem_, *condition_, domain_, sp_.levels);
            out["interior_condition"] = json{{"name", condition_->name},
                                             {"min_slack", ic.min_slack},
                                             {"witness_x", vec_json(ic.witness_x)},
                                             {"witness_y", vec_json(ic.witness_y)},
                                             {"control", problem_.label(ic.witness_control)}};
            if (ic.min_slack < -1e-10) {
                std::ostringstream os;
                os << "interior condition slack " << ic.min_slack << " at x=" << format_vec(ic.witness_x)
                   << " y=" << format_vec(ic.witness_y) << " control=" << problem_.label(ic.witness_control);
                throw AssumptionFailure(os.str());
            }
        }
        return out;
    }

    void validate_dimensions() const {
        const auto d = static_cast<Eigen::Index>(problem_.dim());
        for (std::size_t i = 0; i < cfg_.estimators.size(); ++i) {
            const EstimatorSpec& e = cfg_.estimators[i];
            const std::string ptr = "/estimators/" + std::to_string(i);
            auto check = [&](const Vec& v, const char* key, bool required) {
                if (v.size() == 0) {
                    if (required) throw ConfigError(ptr + "/" + key, "missing");
                    return;
                }
                if (v.size() != d) throw ConfigError(ptr + "/" + key, "dimension differs from the problem");
            };
            const bool needs_x0 = e.kind != "uniqueness" && e.kind != "normal_derivative" && e.kind != "oracle";
            const bool needs_xi = e.kind != "value" && e.kind != "exit_tail" && e.kind != "uniqueness" &&
                                  e.kind != "oracle" && e.kind != "normal_derivative";
            check(e.x0, "x0", needs_x0);
            check(e.xi, "xi", needs_xi);
            check(e.eta0, "eta0", false);
            check(e.outer, "outer", e.kind == "moment_ladder" || e.kind == "derivative_bounds");
            if (e.x0.size() == d && needs_x0 && !(domain_.psi(e.x0) > 0.0)) {
                throw ConfigError(ptr + "/x0", "start point is outside the domain");
            }
            if (e.kind == "supermartingale" && e.checkpoints.size() < 2) {
                throw ConfigError(ptr + "/checkpoints", "at least two checkpoints are required");
            }
            if ((e.kind == "moment_ladder" || e.kind == "derivative_bounds") && !(e.psi_hi > e.psi_lo && e.psi_lo > 0)) {
                throw ConfigError(ptr + "/psi_hi", "psi_hi > psi_lo > 0 is required");
            }
            if (e.kind == "first_quasi" || e.kind == "second_quasi") {
                if (e.provider == "closed_form" && !closed_) {
                    throw ConfigError(ptr + "/provider", "no closed form for this problem and domain");
                }
                if (e.provider == "boundary_data" && !(e.normal_bound > 0.0)) {
                    throw ConfigError(ptr + "/normal_bound", "boundary_data needs a positive normal_bound");
                }
            }
            if (!e.policy.empty() && e.policy != "sup" && e.policy != "oracle") {
                const auto& labels = problem_.labels();
                if (std::find(labels.begin(), labels.end(), e.policy) == labels.end()) {
                    throw ConfigError(ptr + "/policy", "unknown control label '" + e.policy + "'");
                }
            }
            if (e.policy == "sup" && e.kind != "value" && e.kind != "exit_gap") {
                throw ConfigError(ptr + "/policy", "sup is only available for value and exit_gap");
            }
            if (e.policy.empty() && problem_.num_controls() > 1 && e.kind != "value" && e.kind != "exit_gap" &&
                !builtin_optimal_control(cfg_.problem, cfg_.problem_params) && needs_policy(e.kind)) {
                throw ConfigError(ptr + "/policy", "a policy is required for problems with several controls");
            }
        }
    }

    json run_one(const EstimatorSpec& e, std::map<std::string, std::string>& tables) {
        json r;
        r["label"] = e.label;
        r["kind"] = e.kind;
        const std::size_t n = e.n_paths > 0 ? e.n_paths : cfg_.params.n_paths;
        const Vec eta0 = e.eta0.size() > 0 ? e.eta0 : Vec::Zero(problem_.dim());
        if (e.kind == "value") {
            if (e.policy == "sup" || (e.policy.empty() && problem_.num_controls() > 1)) {
                const auto policies = constant_policies();
                const SupEstimate s = estimate_value_sup(problem_, domain_, e.x0, policies, n, sp_);
                r["estimate"] = estimate_json(s.best());
                r["argmax_policy"] = problem_.label(s.argmax);
                json per = json::array();
                for (std::size_t a = 0; a < s.per_policy.size(); ++a) {
                    per.push_back(json{{"policy", problem_.label(a)}, {"estimate", estimate_json(s.per_policy[a])}});
                }
                r["per_policy"] = per;
            } else {
                const MarkovPolicy pol = policy_for(e);
                r["policy"] = pol.label();
                r["estimate"] = estimate_json(estimate_value(problem_, domain_, e.x0, pol, n, sp_));
            }
        } else if (e.kind == "first_fd" || e.kind == "second_fd") {
            const MarkovPolicy pol = policy_for(e);
            r["policy"] = pol.label();
            r["eps"] = e.eps;
            r["estimate"] = estimate_json(
                e.kind == "first_fd" ? estimate_first_derivative_fd(problem_, domain_, e.x0, e.xi, e.eps, pol, n, sp_)
                                     : estimate_second_derivative_fd(problem_, domain_, e.x0, e.xi, e.eps, pol, n, sp_));
        } else if (e.kind == "first_quasi" || e.kind == "second_quasi") {
            const MarkovPolicy pol = policy_for(e);
            const auto provider = provider_for(e);
            r["policy"] = pol.label();
            r["provider"] = provider->name();
            r["estimate"] = estimate_json(
                e.kind == "first_quasi"
                    ? estimate_first_derivative_quasi(problem_, domain_, condition_, e.x0, e.xi, pol, n, sp_,
                                                      provider.get())
                    : estimate_second_derivative_quasi(problem_, domain_, condition_, e.x0, e.xi, eta0, pol, n, sp_,
                                                       provider.get()));
        } else if (e.kind == "convergence") {
            const MarkovPolicy pol = policy_for(e);
            std::vector<std::uint64_t> seeds(e.n_seeds);
            for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = sp_.seed + k;
            const ConvergenceReport rep =
                convergence_probe(problem_, domain_, condition_, e.x0, e.xi, pol, cfg_.params.eps, seeds, sp_);
            json rows = json::array();
            std::ostringstream csv;
            csv << "eps,sup_gap,sup_first_error,first_std_error,sup_second_error,second_std_error,breakdown_fraction\n";
            for (const ConvergenceRow& row : rep.rows) {
                rows.push_back(json{{"eps", row.eps},
                                    {"sup_gap", row.sup_gap},
                                    {"sup_first_error", row.sup_first_error},
                                    {"first_std_error", row.first_std_error},
                                    {"sup_second_error", row.sup_second_error},
                                    {"second_std_error", row.second_std_error},
                                    {"breakdown_fraction", row.breakdown_fraction}});
                csv << csv_number(row.eps) << ',' << csv_number(row.sup_gap) << ','
                    << csv_number(row.sup_first_error) << ',' << csv_number(row.first_std_error) << ','
                    << csv_number(row.sup_second_error) << ',' << csv_number(row.second_std_error) << ','
                    << csv_number(row.breakdown_fraction) << '\n';
            }
            r["rows"] = rows;
            r["first_ratios"] = rep.first_ratios;
            r["second_ratios"] = rep.second_ratios;
            r["first_monotone"] = rep.first_monotone;
            r["second_monotone"] = rep.second_monotone;
            tables[e.label + ".csv"] = csv.str();
        } else if (e.kind == "exit_gap") {
            std::vector<MarkovPolicy> policies =
                (e.policy.empty() || e.policy == "sup") ? constant_policies() : std::vector{policy_for(e)};
            const auto rows = exit_time_gap(problem_, domain_, condition_, e.x0, e.xi, cfg_.params.eps, policies, n, sp_);
            json out = json::array();
            std::ostringstream csv;
            csv << "eps,gap,std_error,argmax_policy\n";
            for (const ExitGapRow& row : rows) {
                out.push_back(json{{"eps", row.eps},
                                   {"gap", row.gap},
                                   {"std_error", row.std_error},
                                   {"argmax_policy", policies[row.argmax_policy].label()}});
                csv << csv_number(row.eps) << ',' << csv_number(row.gap) << ',' << csv_number(row.std_error) << ','
                    << policies[row.argmax_policy].label() << '\n';
            }
            r["rows"] = out;
            tables[e.label + ".csv"] = csv.str();
        } else if (e.kind == "exit_tail") {
            const MarkovPolicy pol = policy_for(e);
            r["horizon"] = cfg_.params.horizon;
            r["estimate"] =
                estimate_json(exit_tail_probability(problem_, domain_, e.x0, pol, cfg_.params.horizon, n, sp_));
        } else if (e.kind == "oracle") {
            const auto sol = oracle(e.h);
            r["h"] = e.h;
            r["converged"] = sol->converged;
            r["cycled"] = sol->cycled;
            r["iterations"] = sol->iterations;
            r["max_residual"] = sol->max_residual();
            r["residual_history"] = sol->residual_history;
            r["wide_stencil_nodes"] = sol->wide_nodes.size();
            r["warning"] = sol->warning;
            if (e.x0.size() > 0) {
                const Vec xi = e.xi.size() > 0 ? e.xi : Vec::Unit(problem_.dim(), 0);
                const DirectionalJet j = oracle_derivatives(*sol, e.x0, xi);
                r["at_x0"] = json{{"value", j.value}, {"first", j.first}, {"second", j.second}, {"tolerance", e.h * e.h}};
                const std::size_t k = sol->nearest(e.x0);
                if (sol->policy[k] >= 0) r["at_x0"]["policy"] = problem_.label(static_cast<std::size_t>(sol->policy[k]));
            }
            std::ostringstream csv;
            write_csv(*sol, csv);
            tables[e.label + ".csv"] = csv.str();
        } else if (e.kind == "uniqueness") {
            constexpr double kTol = 1e-8;
            const UniquenessReport rep = uniqueness_probe(problem_, domain_, e.h, kTol, 3);
            r["h"] = e.h;
            r["tolerance"] = 10.0 * kTol;
            r["max_deviation"] = rep.max_deviation;
            r["pass"] = rep.pass;
        } else if (e.kind == "supermartingale") {
            BarrierRun run;
            run.kind = e.barrier == "interior" ? BarrierKind::Interior : BarrierKind::BoundaryLayer;
            run.levels = sp_.levels;
            run.k1 = k1_;
            run.checkpoints = e.checkpoints;
            run.n_paths = n;
            run.params = sp_;
            const BarrierSamples samples = collect_barrier_samples(problem_, domain_, condition_, e.x0, e.xi, run);
            const SupermartingaleVerdict plain = supermartingale_test(samples);
            const SupermartingaleVerdict root = supermartingale_test(samples.square_root());
            auto verdict = [](const SupermartingaleVerdict& v) {
                return json{{"pass", v.pass},           {"max_z", v.max_z},   {"critical_z", v.critical_z},
                            {"worst_pair", v.worst_pair}, {"means", v.means}, {"std_errors", v.std_errors}};
            };
            r["barrier"] = std::string(to_string(run.kind));
            r["k1"] = k1_;
            r["checkpoints"] = e.checkpoints;
            r["barrier_process"] = verdict(plain);
            r["sqrt_barrier_process"] = verdict(root);
            std::ostringstream csv;
            csv << "t,mean,std_error,sqrt_mean,sqrt_std_error\n";
            for (std::size_t k = 0; k < e.checkpoints.size(); ++k) {
                csv << csv_number(e.checkpoints[k]) << ',' << csv_number(plain.means[k]) << ','
                    << csv_number(plain.std_errors[k]) << ',' << csv_number(root.means[k]) << ','
                    << csv_number(root.std_errors[k]) << '\n';
            }
            tables[e.label + ".csv"] = csv.str();
        } else if (e.kind == "moment_ladder") {
            const ControlProblem prob = e.barrier == "interior" ? normalize_discount(problem_) : problem_;
            const auto starts = psi_ladder(domain_, e.x0, e.outer, e.psi_hi, e.psi_lo, e.points);
            MomentRun run;
            run.levels = sp_.levels;
            run.k1 = k1_;
            run.n_paths = n;
            run.params = sp_;
            const LadderReport rep = moment_ladder(prob, domain_, condition_, starts, e.xi, run);
            std::ostringstream csv;
            csv << "region,item,psi,value,std_error,barrier,ratio\n";
            for (const MomentRow& row : rep.rows) {
                csv << row.region << ',' << row.item << ',' << csv_number(row.psi_level) << ','
                    << csv_number(row.value) << ',' << csv_number(row.std_error) << ',' << csv_number(row.barrier)
                    << ',' << csv_number(row.ratio) << '\n';
            }
            // only the items of the region named by the barrier enter the verdict
            const std::string region = e.barrier == "interior" ? "interior" : "boundary";
            json trends = json::array();
            bool pass = true;
            std::size_t judged = 0;
            for (const TrendRow& t : rep.trends) {
                const bool counted = t.region == region;
                trends.push_back(json{{"region", t.region},
                                      {"item", t.item},
                                      {"trend", trend_json(t.trend)},
                                      {"max_ratio", t.max_ratio},
                                      {"pass", t.pass},
                                      {"counted", counted}});
                if (counted) {
                    pass = pass && t.pass;
                    ++judged;
                }
            }
            r["trends"] = trends;
            r["significance"] = 0.05;
            r["pass"] = pass && judged > 0;
            tables[e.label + ".csv"] = csv.str();
        } else if (e.kind == "derivative_bounds") {
            const auto points = psi_ladder(domain_, e.x0, e.outer, e.psi_hi, e.psi_lo, e.points);
            std::vector<Vec> dirs{e.xi};
            if (problem_.dim() == 2) dirs.push_back(Vec((Vec(2) << -e.xi[1], e.xi[0]).finished()));
            DerivativeSource source;
            std::shared_ptr<ValueProvider> provider;
            if (closed_ && e.provider != "oracle") {
                provider = std::make_shared<ClosedFormProvider>(*closed_);
            } else {
                provider = std::make_shared<OracleProvider>(oracle(e.h), problem_, domain_);
            }
            source = derivative_source(*provider);
            const DerivativeBoundReport rep = derivative_bound_check(problem_, domain_, points, dirs, source);
            r["source"] = provider->name();
            r["fitted_first"] = rep.fitted_first;
            r["fitted_lower"] = rep.fitted_lower;
            r["fitted_upper"] = rep.fitted_upper;
            r["first_trend"] = trend_json(rep.first_trend);
            r["lower_trend"] = trend_json(rep.lower_trend);
            r["upper_trend"] = trend_json(rep.upper_trend);
            r["significance"] = 0.05;
            r["pass"] = rep.pass;
            std::ostringstream csv;
            csv << "psi,first_ratio,lower_ratio,upper_ratio,mu,upper_applies\n";
            for (const DerivativeRatioRow& row : rep.rows) {
                csv << csv_number(row.psi) << ',' << csv_number(row.first_ratio) << ','
                    << csv_number(row.lower_ratio) << ',' << csv_number(row.upper_ratio) << ','
                    << csv_number(row.mu) << ',' << (row.upper_applies ? 1 : 0) << '\n';
            }
            tables[e.label + ".csv"] = csv.str();
        } else if (e.kind == "normal_derivative") {
            std::mt19937_64 rng(sp_.seed);
            const auto samples = sample_boundary(domain_, e.points, rng);
            std::shared_ptr<ValueProvider> provider;
            if (closed_ && e.provider != "oracle") {
                provider = std::make_shared<ClosedFormProvider>(*closed_);
            } else {
                provider = std::make_shared<OracleProvider>(oracle(e.h), problem_, domain_);
            }
            const NormalDerivativeReport rep = normal_derivative_check(
                problem_, domain_, samples, [&](const Vec& x) { return provider->evaluate(x, 1, true).grad; });
            r["source"] = provider->name();
            r["max_normal_derivative"] = rep.max_normal_derivative;
            r["g_norm"] = rep.g_norm;
            r["f_sup"] = rep.f_sup;
            r["fitted_k"] = rep.fitted_k;
            r["witness"] = vec_json(rep.witness);
            r["bounded"] = rep.bounded;
        } else if (e.kind == "mu") {
            r["mu"] = mu(problem_, e.x0, e.xi);
            r["mu_min"] = mu_min(problem_, e.x0);
            r["tolerance"] = 1e-9;
        }
        return r;
    }

    [[nodiscard]] const ControlProblem& problem() const { return problem_; }
    [[nodiscard]] const SimulationParams& params() const { return sp_; }

private:
    static bool needs_policy(const std::string& kind) {
        return kind == "first_fd" || kind == "second_fd" || kind == "first_quasi" || kind == "second_quasi" ||
               kind == "convergence" || kind == "exit_tail";
    }

    Domain build_domain(const DomainSpec& d) const {
        if (d.type == "ball") return Domain::ball(d.center, d.radius);
        if (d.type == "ellipsoid") return Domain::ellipsoid(d.center, d.semi_axes);
        return Domain::smoothed_box(d.center, d.semi_axes);
    }

    InteriorCondition build_condition(const ConditionSpec& c) const {
        const int d = problem_.dim();
        const int d1 = problem_.noise_dim();
        if (c.name == "zero") return InteriorCondition::zero(d, d1);
        Vec rho = c.rho.size() > 0 ? c.rho : Vec::Zero(d);
        if (rho.size() != d) throw ConfigError("/interior_condition/rho", "dimension differs from the problem");
        try {
            return InteriorCondition::constant(rho, c.m, c.q_basis, d1);
        } catch (const Error& e) {
            throw ConfigError("/interior_condition/q", e.what());
        }
    }

    std::vector<MarkovPolicy> constant_policies() const {
        std::vector<MarkovPolicy> out;
        for (std::size_t a = 0; a < problem_.num_controls(); ++a) {
            out.push_back(MarkovPolicy::constant(a, problem_.label(a)));
        }
        return out;
    }

    MarkovPolicy policy_for(const EstimatorSpec& e) {
        if (e.policy == "oracle") return grid_policy(oracle(e.h));
        std::string label = e.policy;
        if (label.empty()) {
            label = problem_.num_controls() == 1
                        ? problem_.label(0)
                        : builtin_optimal_control(cfg_.problem, cfg_.problem_params).value_or(problem_.label(0));
        }
        return MarkovPolicy::constant(problem_.control_index(label), label);
    }

    std::shared_ptr<ValueProvider> provider_for(const EstimatorSpec& e) {
        if (e.provider == "closed_form") return std::make_shared<ClosedFormProvider>(*closed_);
        if (e.provider == "oracle") return std::make_shared<OracleProvider>(oracle(e.h), problem_, domain_);
        return std::make_shared<BoundaryDataProvider>(problem_, domain_, e.normal_bound);
    }

    std::shared_ptr<const GridSolution> oracle(double h) {
        auto it = oracles_.find(h);
        if (it != oracles_.end()) return it->second;
        auto sol = std::make_shared<const GridSolution>(solve_bellman_fd(problem_, domain_, h));
        oracles_.emplace(h, sol);
        return sol;
    }

    const ExperimentConfig& cfg_;
    ControlProblem problem_;
    Domain domain_;
    NormalizationResult normalization_;
    std::optional<InteriorCondition> condition_;
    std::optional<ClosedForm> closed_;
    SimulationParams sp_;
    double k1_ = 1.0;
    std::map<double, std::shared_ptr<const GridSolution>> oracles_;
};

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::string config_hash(const ExperimentConfig& config, std::uint64_t seed) {
    return hex64(fnv1a64(config.canonical + "#seed=" + std::to_string(seed)));
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out << text;
}

int classify(const Error& e) {
    switch (e.code()) {
        case ErrorCode::SchemaViolation: return kExitSchema;
        case ErrorCode::AssumptionViolated:
        case ErrorCode::NormalizationImpossible:
        case ErrorCode::IllFormedDomain:
        case ErrorCode::NonSkewInput: return kExitAssumption;
        default: return kExitRuntime;
    }
}

RunResult execute(const ExperimentConfig& config, const RunOverrides& overrides, bool checks_only) {
    RunResult result;
    try {
        if (config.estimators.empty() && !checks_only) throw ConfigError("/estimators", "estimator list is empty");
        Session session = [&] {
            try {
                return Session(config, overrides);
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::InvalidArgument) throw ConfigError("/problem", e.what());
                throw;
            }
        }();
        session.validate_dimensions();
        bool need_normal = checks_only;
        for (const EstimatorSpec& e : config.estimators) need_normal |= kNeedsNormalNondegeneracy.count(e.kind) > 0;

        json payload;
        payload["schema_version"] = kSchemaVersion;
        payload["config_hash"] = config_hash(config, session.params().seed);
        payload["seed"] = session.params().seed;
        payload["problem"] = config.problem;
        payload["assumptions"] = session.assumptions(need_normal);
        std::map<std::string, std::string> tables;
        if (!checks_only) {
            json results = json::array();
            for (const EstimatorSpec& e : config.estimators) results.push_back(session.run_one(e, tables));
            payload["results"] = results;
        }
        result.results_json = payload.dump(2) + "\n";

        const auto out_dir = overrides.out ? overrides.out
                                           : (config.output.empty() ? std::nullopt
                                                                    : std::optional<std::filesystem::path>(config.output));
        if (out_dir) {
            const std::string main_name = checks_only ? "checks.json" : "results.json";
            write_file(*out_dir / main_name, result.results_json);
            result.files.push_back(main_name);
            for (const auto& [name, text] : tables) {
                write_file(*out_dir / "tables" / name, text);
                result.files.push_back("tables/" + name);
            }
            json manifest;
            manifest["schema_version"] = kSchemaVersion;
            manifest["config_hash"] = payload["config_hash"];
            manifest["seed"] = session.params().seed;
            manifest["versions"] = json{{"qdlab", QDLAB_VERSION},
                                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                      std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                      std::to_string(EIGEN_MINOR_VERSION)},
                                        {"boost", BOOST_LIB_VERSION},
                                        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
            manifest["files"] = result.files;
            write_file(*out_dir / "manifest.json", manifest.dump(2) + "\n");
            result.files.push_back("manifest.json");
        }
        result.message = checks_only ? "assumption checks passed" : "ok";
    } catch (const ConfigError& e) {
        result.exit_code = kExitSchema;
        result.message = e.what();
    } catch (const Error& e) {
        result.exit_code = classify(e);
        result.message = e.what();
    } catch (const std::exception& e) {
        result.exit_code = kExitRuntime;
        result.message = e.what();
    }
    return result;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

ExperimentConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("/", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("/", "expected an object");
    if (!j.contains("schema_version")) throw ConfigError("/schema_version", "missing");
    if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != kSchemaVersion) {
        throw ConfigError("/schema_version", "expected " + std::to_string(kSchemaVersion));
    }
    if (j.contains("builtin")) {
        require_keys(j, "", {"schema_version", "builtin", "output"});
        const std::string name = read_string(j["builtin"], "/builtin");
        if (!presets().count(name)) throw ConfigError("/builtin", "unknown experiment '" + name + "'");
        ExperimentConfig cfg = parse_config(presets().at(name).second);
        if (j.contains("output")) cfg.output = read_string(j["output"], "/output");
        return cfg;
    }
    require_keys(j, "", {"schema_version", "problem", "domain", "interior_condition", "params", "estimators", "output"});
    ExperimentConfig cfg;
    if (!j.contains("problem")) throw ConfigError("/problem", "missing");
    const json& p = j["problem"];
    require_keys(p, "/problem", {"name", "params", "table"});
    if (!p.contains("name")) throw ConfigError("/problem/name", "missing");
    cfg.problem = read_string(p["name"], "/problem/name");
    if (cfg.problem == "table") {
        if (!p.contains("table")) throw ConfigError("/problem/table", "missing");
        if (p.contains("params")) throw ConfigError("/problem/params", "a table problem takes no params");
        cfg.table = parse_table(p["table"], "/problem/table");
    } else if (p.contains("table")) {
        throw ConfigError("/problem/table", "only allowed with name \"table\"");
    }
    if (p.contains("params")) {
        require_keys(p["params"], "/problem/params", [&] {
            std::set<std::string> keys;
            for (const auto& info : builtin_problems()) {
                if (info.name == cfg.problem) keys.insert(info.parameters.begin(), info.parameters.end());
            }
            return keys;
        }());
        for (const auto& [key, value] : p["params"].items()) {
            cfg.problem_params[key] = read_number(value, "/problem/params/" + key);
        }
    }
    const auto problems = builtin_problems();
    if (!cfg.table &&
        std::none_of(problems.begin(), problems.end(), [&](const BuiltinInfo& b) { return b.name == cfg.problem; })) {
        throw ConfigError("/problem/name", "unknown problem '" + cfg.problem + "'");
    }
    if (j.contains("domain")) cfg.domain = parse_domain(j["domain"], "/domain");
    if (j.contains("interior_condition")) cfg.condition = parse_condition(j["interior_condition"], "/interior_condition");
    if (j.contains("params")) cfg.params = parse_params(j["params"], "/params");
    if (!j.contains("estimators")) throw ConfigError("/estimators", "missing");
    const json& ests = j["estimators"];
    if (!ests.is_array()) throw ConfigError("/estimators", "expected an array");
    if (ests.empty()) throw ConfigError("/estimators", "estimator list is empty");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < ests.size(); ++i) {
        const std::string ptr = "/estimators/" + std::to_string(i);
        EstimatorSpec e = parse_estimator(ests[i], ptr, i);
        if (!labels.insert(e.label).second) throw ConfigError(ptr + "/label", "duplicate label '" + e.label + "'");
        cfg.estimators.push_back(std::move(e));
    }
    if (j.contains("output")) cfg.output = read_string(j["output"], "/output");
    json canonical = j;
    canonical.erase("output");
    cfg.canonical = nlohmann::json(canonical).dump();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("/", "cannot read config file " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

std::vector<BuiltinInfo> builtin_experiments() {
    std::vector<BuiltinInfo> out;
    for (const auto& [name, entry] : presets()) out.push_back({name, entry.first, {}});
    return out;
}

std::string builtin_experiment_text(std::string_view name) {
    const auto it = presets().find(std::string(name));
    if (it == presets().end()) throw ConfigError("/builtin", "unknown experiment '" + std::string(name) + "'");
    return it->second.second;
}

RunResult run_experiment(const ExperimentConfig& config, const RunOverrides& overrides) {
    return execute(config, overrides, false);
}

RunResult check_experiment(const ExperimentConfig& config, const RunOverrides& overrides) {
    return execute(config, overrides, true);
}

void list_catalog(std::ostream& out) {
    out << "problems:\n";
    for (const BuiltinInfo& b : builtin_problems()) {
        out << "  " << b.name << "  " << b.summary;
        if (!b.parameters.empty()) {
            out << " [";
            for (std::size_t i = 0; i < b.parameters.size(); ++i) out << (i ? ", " : "") << b.parameters[i];
            out << "]";
        }
        out << "\n";
    }
    out << "  table  coefficients given at grid nodes, interpolated with order 2 [lo, hi, nodes, noise_dim, controls, g]\n";
    out << "domains:\n"
        << "  ball          center, radius (default: unit ball)\n"
        << "  ellipsoid     center, semi_axes\n"
        << "  smoothed_box  center, semi_axes as half-widths of a quartic superellipsoid\n";
    out << "experiments:\n";
    for (const BuiltinInfo& b : builtin_experiments()) out << "  " << b.name << "  " << b.summary << "\n";
    out << "estimator kinds:\n ";
    for (const std::string& k : kKinds) out << " " << k;
    out << "\n";
}

}  // namespace qdlab
