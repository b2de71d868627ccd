#include "qdlab/estimators.hpp"

#include "qdlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace qdlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct PathOutcome {
    double sample = kNaN;
    StopCause cause = StopCause::Running;
    bool xi_cap = false;
    bool aborted = false;
    double band = 0.0;
};

template <class Fn>
std::vector<PathOutcome> run_paths(std::size_t n, int threads, Fn&& fn) {
    std::vector<PathOutcome> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        try {
            out[i] = fn(i);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::PathAborted) throw;
            out[i].aborted = true;
        }
    });
    return out;
}

double min_discount(const ControlProblem& problem, const Domain& domain) {
    std::mt19937_64 rng(23);
    double c_min = std::numeric_limits<double>::infinity();
    CoefficientJet jet;
    for (const Vec& x : sample_interior(domain, 200, rng)) {
        for (std::size_t a = 0; a < problem.num_controls(); ++a) {
            problem.coefficients(a, x, 0, jet);
            c_min = std::min(c_min, jet.c);
        }
    }
    return std::max(0.0, c_min);
}

Estimate finalize(const std::vector<PathOutcome>& outcomes, const ControlProblem& problem, const Domain& domain,
                  double horizon) {
    std::vector<double> samples;
    samples.reserve(outcomes.size());
    std::size_t capped = 0, horizon_hits = 0, aborted = 0;
    double band = 0.0;
    for (const PathOutcome& o : outcomes) {
        if (o.aborted || !std::isfinite(o.sample)) {
            ++aborted;
            continue;
        }
        samples.push_back(o.sample);
        band += o.band;
        if (o.xi_cap || o.cause == StopCause::XiCap) ++capped;
        if (o.cause == StopCause::Horizon) ++horizon_hits;
    }
    Estimate e = summarize(samples);
    const double n = static_cast<double>(std::max<std::size_t>(outcomes.size(), 1));
    e.truncated_fraction = static_cast<double>(capped) / n;
    e.horizon_fraction = static_cast<double>(horizon_hits) / n;
    e.aborted_fraction = static_cast<double>(aborted) / n;
    if (!samples.empty()) e.boundary_band = band / static_cast<double>(samples.size());
    if (horizon_hits > 0) {
        e.bias_bound = problem.k0() * std::exp(-min_discount(problem, domain) * horizon);
        e.flags.push_back("horizon_truncated");
    }
    if (capped > 0) e.flags.push_back("xi_cap_truncated");
    if (aborted > 0) e.flags.push_back("paths_aborted");
    if (e.boundary_band > 0.0) e.flags.push_back("normal_derivative_band");
    return e;
}

EngineConfig base_config(const SimulationParams& params) {
    EngineConfig cfg;
    cfg.levels = params.levels;
    cfg.caps = params.caps;
    cfg.recipe = params.recipe;
    cfg.upsilon_floor = params.upsilon_floor;
    return cfg;
}

/// Discounted payoff of the base process; with a discount shift it can be reported for the unshifted problem.
double value_payoff(const ControlProblem& problem, const BundleEngine& engine, const Vec& x0, std::uint64_t seed,
                    std::size_t path, bool undo_shift, StopCause& cause) {
    const double shift = problem.discount_shift();
    if (!undo_shift || shift == 0.0) {
        const PathBundle pb = engine.simulate(x0, Vec(), Vec(), seed, path);
        cause = pb.cause;
        double v = pb.tip.running;
        if (pb.cause == StopCause::Exit) v += problem.g(pb.tip.x).value * std::exp(-pb.tip.phi);
        return v;
    }
    // Reweight each running increment by exp(shift t) at its left endpoint.
    double undone = 0.0;
    double prev_running = 0.0;
    double prev_t = 0.0;
    bool first = true;
    StateObserver obs = [&](const BundleState& s) {
        if (!first) undone += (s.running - prev_running) * std::exp(shift * prev_t);
        first = false;
        prev_running = s.running;
        prev_t = s.t;
    };
    const PathBundle pb = engine.simulate(x0, Vec(), Vec(), seed, path, &obs);
    cause = pb.cause;
    double v = undone;
    if (pb.cause == StopCause::Exit) v += problem.g(pb.tip.x).value * std::exp(-pb.tip.phi + shift * pb.tip.t);
    return v;
}

void require_inside(const Domain& domain, const Vec& x, const char* what) {
    if (!(domain.psi(x) > 0.0)) {
        throw Error(ErrorCode::InvalidPerturbation, std::string(what) + " " + format_vec(x) + " is not inside D");
    }
}

const ValueProvider& require_provider(const ValueProvider* provider) {
    if (!provider) throw Error(ErrorCode::MissingBoundaryGradient, "no value provider for stopping points");
    return *provider;
}

double augmented_value(double v, double phi, double log_p, double payoff) {
    return v * std::exp(log_p - phi) + payoff;
}

}  // namespace

BoundaryDataProvider::BoundaryDataProvider(ControlProblem problem, Domain domain, double normal_bound,
                                           double collar)
    : problem_(std::move(problem)), domain_(std::move(domain)), bound_(normal_bound), collar_(collar) {}

ScalarJet BoundaryDataProvider::evaluate(const Vec& x, int order, bool on_boundary) const {
    if (!on_boundary && domain_.psi(x) > collar_) {
        throw Error(ErrorCode::MissingBoundaryGradient, "boundary-only provider queried at interior point " +
                                                            format_vec(x));
    }
    if (order >= 2) {
        throw Error(ErrorCode::MissingBoundaryGradient, "second derivatives need normal data at " + format_vec(x));
    }
    ScalarJet g = problem_.g(x, 1);
    const Vec n = domain_.outward_normal(x);
    g.grad = g.grad - g.grad.dot(n) * n;
    return g;
}

Estimate summarize(std::span<const double> samples) {
    Estimate e;
    e.n_paths = samples.size();
    if (samples.empty()) return e;
    double sum = 0.0;
    for (double s : samples) sum += s;
    e.mean = sum / static_cast<double>(samples.size());
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double s : samples) ss += (s - e.mean) * (s - e.mean);
        e.std_error = std::sqrt(ss / static_cast<double>(samples.size() - 1) / static_cast<double>(samples.size()));
    }
    return e;
}

Estimate estimate_value(const ControlProblem& problem, const Domain& domain, const Vec& x0, const MarkovPolicy& policy,
                        std::size_t n_paths, const SimulationParams& params) {
    require_inside(domain, x0, "start point");
    EngineConfig cfg = base_config(params);
    cfg.recipe = RecipeMode::None;
    const BundleEngine engine(problem, domain, std::nullopt, policy, cfg);
    auto outcomes = run_paths(n_paths, params.threads, [&](std::size_t i) {
        PathOutcome o;
        o.sample = value_payoff(problem, engine, x0, params.seed, i, params.undo_discount_shift, o.cause);
        return o;
    });
    return finalize(outcomes, problem, domain, params.caps.horizon);
}

SupEstimate estimate_value_sup(const ControlProblem& problem, const Domain& domain, const Vec& x0,
                               std::span<const MarkovPolicy> policies, std::size_t n_paths,
                               const SimulationParams& params) {
    if (policies.empty()) throw Error(ErrorCode::InvalidArgument, "policy set is empty");
    SupEstimate out;
    for (const MarkovPolicy& p : policies) {
        out.per_policy.push_back(estimate_value(problem, domain, x0, p, n_paths, params));
    }
    for (std::size_t k = 1; k < out.per_policy.size(); ++k) {
        if (out.per_policy[k].mean > out.per_policy[out.argmax].mean) out.argmax = k;
    }
    return out;
}

Estimate estimate_first_derivative_fd(const ControlProblem& problem, const Domain& domain, const Vec& x0,
                                      const Vec& xi, double eps, const MarkovPolicy& policy, std::size_t n_paths,
                                      const SimulationParams& params) {
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidPerturbation, "eps must be positive");
    const Vec xp = x0 + eps * xi;
    const Vec xm = x0 - eps * xi;
    require_inside(domain, xp, "perturbed start");
    require_inside(domain, xm, "perturbed start");
    EngineConfig cfg = base_config(params);
    cfg.recipe = RecipeMode::None;
    const BundleEngine engine(problem, domain, std::nullopt, policy, cfg);
    auto outcomes = run_paths(n_paths, params.threads, [&](std::size_t i) {
        PathOutcome o;
        StopCause cp, cm;
        const double up = value_payoff(problem, engine, xp, params.seed, i, params.undo_discount_shift, cp);
        const double um = value_payoff(problem, engine, xm, params.seed, i, params.undo_discount_shift, cm);
        o.sample = (up - um) / (2.0 * eps);
        o.cause = cp == StopCause::Horizon || cm == StopCause::Horizon ? StopCause::Horizon : StopCause::Exit;
        return o;
    });
    return finalize(outcomes, problem, domain, params.caps.horizon);
}

Estimate estimate_second_derivative_fd(const ControlProblem& problem, const Domain& domain, const Vec& x0,
                                       const Vec& xi, double eps, const MarkovPolicy& policy, std::size_t n_paths,
                                       const SimulationParams& params) {
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidPerturbation, "eps must be positive");
    const Vec xp = x0 + eps * xi;
    const Vec xm = x0 - eps * xi;
    require_inside(domain, x0, "start point");
    require_inside(domain, xp, "perturbed start");
    require_inside(domain, xm, "perturbed start");
    EngineConfig cfg = base_config(params);
    cfg.recipe = RecipeMode::None;
    const BundleEngine engine(problem, domain, std::nullopt, policy, cfg);
    auto outcomes = run_paths(n_paths, params.threads, [&](std::size_t i) {
        PathOutcome o;
        StopCause c0, cp, cm;
        const double u0 = value_payoff(problem, engine, x0, params.seed, i, params.undo_discount_shift, c0);
        const double up = value_payoff(problem, engine, xp, params.seed, i, params.undo_discount_shift, cp);
        const double um = value_payoff(problem, engine, xm, params.seed, i, params.undo_discount_shift, cm);
        o.sample = (up - 2.0 * u0 + um) / (eps * eps);
        o.cause = StopCause::Exit;
        return o;
    });
    return finalize(outcomes, problem, domain, params.caps.horizon);
}

Estimate estimate_first_derivative_quasi(const ControlProblem& problem, const Domain& domain,
                                         const std::optional<InteriorCondition>& condition, const Vec& x0,
                                         const Vec& xi, const MarkovPolicy& policy, std::size_t n_paths,
                                         const SimulationParams& params, const ValueProvider* provider) {
    const ValueProvider& values = require_provider(provider);
    require_inside(domain, x0, "start point");
    EngineConfig cfg = base_config(params);
    cfg.track.xi = true;
    cfg.track.augmented = true;
    const BundleEngine engine(problem, domain, condition, policy, cfg);
    auto outcomes = run_paths(n_paths, params.threads, [&](std::size_t i) {
        const PathBundle pb = engine.simulate(x0, xi, Vec(), params.seed, i);
        const bool on_boundary = pb.cause == StopCause::Exit;
        const ScalarJet v = values.evaluate(pb.tip.x, 1, on_boundary);
        PathOutcome o;
        o.sample = first_representation(pb.tip, v);
        o.cause = pb.cause;
        o.xi_cap = pb.hit_xi_cap;
        if (on_boundary) {
            const double u = values.normal_uncertainty(pb.tip.x);
            if (u > 0.0) o.band = u * std::exp(-pb.tip.phi) * std::abs(domain.outward_normal(pb.tip.x).dot(pb.tip.xi));
        }
        return o;
    });
    return finalize(outcomes, problem, domain, params.caps.horizon);
}

Estimate estimate_second_derivative_quasi(const ControlProblem& problem, const Domain& domain,
                                          const std::optional<InteriorCondition>& condition, const Vec& x0,
                                          const Vec& xi, const Vec& eta0, const MarkovPolicy& policy,
                                          std::size_t n_paths, const SimulationParams& params,
                                          const ValueProvider* provider) {
    const ValueProvider& values = require_provider(provider);
    require_inside(domain, x0, "start point");
    EngineConfig cfg = base_config(params);
    cfg.track.xi = true;
    cfg.track.eta = true;
    cfg.track.augmented = true;
    const BundleEngine engine(problem, domain, condition, policy, cfg);
    auto outcomes = run_paths(n_paths, params.threads, [&](std::size_t i) {
        const PathBundle pb = engine.simulate(x0, xi, eta0, params.seed, i);
        const ScalarJet v = values.evaluate(pb.tip.x, 2, pb.cause == StopCause::Exit);
        PathOutcome o;
        o.sample = second_representation(pb.tip, v);
        o.cause = pb.cause;
        o.xi_cap = pb.hit_xi_cap;
        return o;
    });
    return finalize(outcomes, problem, domain, params.caps.horizon);
}

Estimate estimate_second_difference_perturbed(const ControlProblem& problem, const Domain& domain,
                                              const std::optional<InteriorCondition>& condition, const Vec& x0,
                                              const Vec& xi, const Vec& eta0, double eps, const MarkovPolicy& policy,
                                              std::size_t n_paths, const SimulationParams& params,
                                              const ValueProvider* provider) {
    const ValueProvider& values = require_provider(provider);
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidPerturbation, "eps must be positive");
    require_inside(domain, x0 + eps * xi + 0.5 * eps * eps * eta0, "perturbed start");
    require_inside(domain, x0 - eps * xi + 0.5 * eps * eps * eta0, "perturbed start");
    EngineConfig cfg = base_config(params);
    cfg.track.z = true;
    cfg.eps = eps;
    const BundleEngine engine(problem, domain, condition, policy, cfg);
    auto outcomes = run_paths(n_paths, params.threads, [&](std::size_t i) {
        const PathBundle pb = engine.simulate(x0, xi, eta0, params.seed, i);
        const BundleState& s = pb.tip;
        const bool exit = pb.cause == StopCause::Exit;
        auto at = [&](const Vec& p, Process which) {
            return values.evaluate(p, 0, exit && pb.exited == which).value;
        };
        const double vx = augmented_value(at(s.x, Process::X), s.phi, 0.0, s.running);
        const double vp = augmented_value(at(s.z_plus, Process::ZPlus), s.zp_phi, s.zp_log_p, s.zp_payoff);
        const double vm = augmented_value(at(s.z_minus, Process::ZMinus), s.zm_phi, s.zm_log_p, s.zm_payoff);
        PathOutcome o;
        o.sample = (vp - 2.0 * vx + vm) / (eps * eps);
        o.cause = pb.cause;
        return o;
    });
    return finalize(outcomes, problem, domain, params.caps.horizon);
}

Estimate estimate_first_difference_perturbed(const ControlProblem& problem, const Domain& domain,
                                             const std::optional<InteriorCondition>& condition, const Vec& x0,
                                             const Vec& xi, double eps, const MarkovPolicy& policy,
                                             std::size_t n_paths, const SimulationParams& params,
                                             const ValueProvider* provider) {
    const ValueProvider& values = require_provider(provider);
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidPerturbation, "eps must be positive");
    require_inside(domain, x0 + eps * xi, "perturbed start");
    EngineConfig cfg = base_config(params);
    cfg.track.y = true;
    cfg.eps = eps;
    const BundleEngine engine(problem, domain, condition, policy, cfg);
    auto outcomes = run_paths(n_paths, params.threads, [&](std::size_t i) {
        const PathBundle pb = engine.simulate(x0, xi, Vec(), params.seed, i);
        const BundleState& s = pb.tip;
        const bool exit = pb.cause == StopCause::Exit;
        const double vx = augmented_value(values.evaluate(s.x, 0, exit && pb.exited == Process::X).value, s.phi, 0.0,
                                          s.running);
        const double vy = augmented_value(values.evaluate(s.y, 0, exit && pb.exited == Process::Y).value, s.y_phi,
                                          s.y_log_p, s.y_payoff);
        PathOutcome o;
        o.sample = (vy - vx) / eps;
        o.cause = pb.cause;
        return o;
    });
    return finalize(outcomes, problem, domain, params.caps.horizon);
}

ConvergenceReport convergence_probe(const ControlProblem& problem, const Domain& domain,
                                    const std::optional<InteriorCondition>& condition, const Vec& x0, const Vec& xi,
                                    const MarkovPolicy& policy, std::span<const double> eps_list,
                                    std::span<const std::uint64_t> seeds, const SimulationParams& params) {
    ConvergenceReport rep;
    for (double eps : eps_list) {
        if (eps < 0.0) throw Error(ErrorCode::InvalidPerturbation, "eps must be non-negative");
        EngineConfig cfg = base_config(params);
        cfg.track.y = true;
        cfg.track.z = true;
        cfg.eps = eps;
        const BundleEngine engine(problem, domain, condition, policy, cfg);
        struct Sups {
            double gap = 0, first = 0, second = 0;
            bool breakdown = false;
        };
        std::vector<Sups> sups(seeds.size());
        parallel_for(seeds.size(), params.threads, [&](std::size_t k) {
            Sups s;
            StateObserver obs = [&](const BundleState& b) {
                s.gap = std::max(s.gap, (b.y - b.x).norm());
                if (eps > 0.0) {
                    s.first = std::max(s.first, ((b.y - b.x) / eps - b.xi).norm());
                    s.second =
                        std::max(s.second, ((b.z_plus - 2.0 * b.x + b.z_minus) / (eps * eps) - b.eta).norm());
                }
            };
            const PathBundle pb = engine.simulate(x0, xi, Vec::Zero(x0.size()), seeds[k], 0, &obs);
            s.breakdown = pb.cause == StopCause::PerturbationBreakdown;
            sups[k] = s;
        });
        ConvergenceRow row;
        row.eps = eps;
        std::vector<double> first, second;
        std::size_t breakdowns = 0;
        for (const Sups& s : sups) {
            row.sup_gap += s.gap / static_cast<double>(sups.size());
            first.push_back(s.first);
            second.push_back(s.second);
            breakdowns += s.breakdown ? 1 : 0;
        }
        const Estimate ef = summarize(first);
        const Estimate es = summarize(second);
        row.sup_first_error = ef.mean;
        row.first_std_error = ef.std_error;
        row.sup_second_error = es.mean;
        row.second_std_error = es.std_error;
        row.breakdown_fraction = static_cast<double>(breakdowns) / static_cast<double>(std::max<std::size_t>(1, sups.size()));
        rep.rows.push_back(row);
    }
    rep.first_monotone = rep.second_monotone = rep.rows.size() > 1;
    for (std::size_t k = 0; k + 1 < rep.rows.size(); ++k) {
        const auto& a = rep.rows[k];
        const auto& b = rep.rows[k + 1];
        rep.first_ratios.push_back(b.sup_first_error > 0.0 ? a.sup_first_error / b.sup_first_error : kNaN);
        rep.second_ratios.push_back(b.sup_second_error > 0.0 ? a.sup_second_error / b.sup_second_error : kNaN);
        if (!(b.sup_first_error < a.sup_first_error)) rep.first_monotone = false;
        if (!(b.sup_second_error < a.sup_second_error)) rep.second_monotone = false;
    }
    return rep;
}

std::vector<ExitGapRow> exit_time_gap(const ControlProblem& problem, const Domain& domain,
                                      const std::optional<InteriorCondition>& condition, const Vec& x0,
                                      const Vec& xi, std::span<const double> eps_list,
                                      std::span<const MarkovPolicy> policies, std::size_t n_paths,
                                      const SimulationParams& params) {
    if (policies.empty()) throw Error(ErrorCode::InvalidArgument, "policy set is empty");
    std::vector<ExitGapRow> rows;
    for (double eps : eps_list) {
        ExitGapRow row;
        row.eps = eps;
        row.gap = -1.0;
        if (eps > 0.0) require_inside(domain, x0 + eps * xi, "perturbed start");
        for (std::size_t k = 0; k < policies.size(); ++k) {
            EngineConfig cfg = base_config(params);
            cfg.track.y = true;
            cfg.eps = eps;
            cfg.stop_on_perturbed_exit = false;
            const BundleEngine engine(problem, domain, condition, policies[k], cfg);
            std::vector<double> gaps(n_paths, 0.0);
            parallel_for(n_paths, params.threads, [&](std::size_t i) {
                const PathBundle pb = engine.simulate(x0, xi, Vec(), params.seed, i);
                const double tau = pb.tip.t;
                const double tau_bar = std::isnan(pb.perturbed_stop_time) ? tau : pb.perturbed_stop_time;
                gaps[i] = tau - std::min(tau, tau_bar);
            });
            const Estimate e = summarize(gaps);
            if (e.mean > row.gap) {
                row.gap = e.mean;
                row.std_error = e.std_error;
                row.argmax_policy = k;
            }
        }
        rows.push_back(row);
    }
    return rows;
}

Estimate exit_tail_probability(const ControlProblem& problem, const Domain& domain, const Vec& x0,
                               const MarkovPolicy& policy, double horizon, std::size_t n_paths,
                               const SimulationParams& params) {
    EngineConfig cfg = base_config(params);
    cfg.recipe = RecipeMode::None;
    cfg.caps.horizon = horizon;
    const BundleEngine engine(problem, domain, std::nullopt, policy, cfg);
    std::vector<double> hits(n_paths, 0.0);
    parallel_for(n_paths, params.threads, [&](std::size_t i) {
        hits[i] = engine.simulate(x0, Vec(), Vec(), params.seed, i).cause == StopCause::Horizon ? 1.0 : 0.0;
    });
    return summarize(hits);
}

}  // namespace qdlab
