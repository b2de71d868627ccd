#pragma once

#include "qdlab/domain.hpp"
#include "qdlab/engine.hpp"
#include "qdlab/policy.hpp"
#include "qdlab/problem.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qdlab {

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    double truncated_fraction = 0.0;  ///< paths stopped by the xi cap
    double horizon_fraction = 0.0;    ///< paths stopped by the time horizon
    double aborted_fraction = 0.0;    ///< paths discarded after a non-finite state
    double bias_bound = 0.0;          ///< bound on the horizon truncation bias
    double boundary_band = 0.0;       ///< half-width of the band from unknown normal derivatives
    std::vector<std::string> flags;
};

/// Shared simulation settings for all estimators.
struct SimulationParams {
    Levels levels;
    StepCaps caps;
    RecipeMode recipe = RecipeMode::Switched;
    double upsilon_floor = 1e-9;
    std::uint64_t seed = 1;
    int threads = 1;
    /// Reports the value of the problem before normalize_discount was applied.
    bool undo_discount_shift = false;
};

/// Value and directional derivatives of v along xi at x.
struct DirectionalJet {
    double value = 0.0;
    double first = 0.0;
    double second = 0.0;
};

/// Supplies v and its derivatives at stopping points.
class ValueProvider {
public:
    virtual ~ValueProvider() = default;
    /// Derivatives up to `order` at x. `on_boundary` marks exit points of D.
    [[nodiscard]] virtual ScalarJet evaluate(const Vec& x, int order, bool on_boundary) const = 0;
    /// Bound on |v_(n)| where the normal derivative is not known; zero when it is.
    [[nodiscard]] virtual double normal_uncertainty(const Vec&) const { return 0.0; }
    [[nodiscard]] virtual std::string name() const = 0;
};

class ClosedFormProvider final : public ValueProvider {
public:
    explicit ClosedFormProvider(ClosedForm form) : form_(std::move(form)) {}
    ScalarJet evaluate(const Vec& x, int, bool) const override { return form_(x); }
    std::string name() const override { return "closed_form"; }

private:
    ClosedForm form_;
};

/// Uses only boundary data: v = g and the tangential part of grad g on the boundary.
/// The unknown normal derivative is reported as a band of half-width K (|g|_2 + sup |f|).
/// Points with psi <= collar (the stopping collar of the boundary recipe) are treated as boundary points.
class BoundaryDataProvider final : public ValueProvider {
public:
    BoundaryDataProvider(ControlProblem problem, Domain domain, double normal_bound, double collar = 1e-3);
    ScalarJet evaluate(const Vec& x, int order, bool on_boundary) const override;
    double normal_uncertainty(const Vec&) const override { return bound_; }
    std::string name() const override { return "boundary_data"; }

private:
    ControlProblem problem_;
    Domain domain_;
    double bound_;
    double collar_;
};

[[nodiscard]] Estimate summarize(std::span<const double> samples);

[[nodiscard]] Estimate estimate_value(const ControlProblem& problem, const Domain& domain, const Vec& x0,
                                      const MarkovPolicy& policy, std::size_t n_paths, const SimulationParams& params);

struct SupEstimate {
    std::vector<Estimate> per_policy;
    std::size_t argmax = 0;
    [[nodiscard]] const Estimate& best() const { return per_policy.at(argmax); }
};

/// Max over policies of the value estimate; every policy sees the same random numbers.
[[nodiscard]] SupEstimate estimate_value_sup(const ControlProblem& problem, const Domain& domain, const Vec& x0,
                                             std::span<const MarkovPolicy> policies, std::size_t n_paths,
                                             const SimulationParams& params);

/// Central difference (v(x0 + eps xi) - v(x0 - eps xi)) / (2 eps) on paired paths.
[[nodiscard]] Estimate estimate_first_derivative_fd(const ControlProblem& problem, const Domain& domain,
                                                    const Vec& x0, const Vec& xi, double eps,
                                                    const MarkovPolicy& policy, std::size_t n_paths,
                                                    const SimulationParams& params);

/// Second central difference on paired paths.
[[nodiscard]] Estimate estimate_second_derivative_fd(const ControlProblem& problem, const Domain& domain,
                                                     const Vec& x0, const Vec& xi, double eps,
                                                     const MarkovPolicy& policy, std::size_t n_paths,
                                                     const SimulationParams& params);

[[nodiscard]] Estimate estimate_first_derivative_quasi(const ControlProblem& problem, const Domain& domain,
                                                       const std::optional<InteriorCondition>& condition,
                                                       const Vec& x0, const Vec& xi, const MarkovPolicy& policy,
                                                       std::size_t n_paths, const SimulationParams& params,
                                                       const ValueProvider* provider);

[[nodiscard]] Estimate estimate_second_derivative_quasi(const ControlProblem& problem, const Domain& domain,
                                                        const std::optional<InteriorCondition>& condition,
                                                        const Vec& x0, const Vec& xi, const Vec& eta0,
                                                        const MarkovPolicy& policy, std::size_t n_paths,
                                                        const SimulationParams& params,
                                                        const ValueProvider* provider);

/// (V(z(eps)) - 2 V(x) + V(z(-eps))) / eps^2 at the common stopping time, with V the augmented value.
[[nodiscard]] Estimate estimate_second_difference_perturbed(const ControlProblem& problem, const Domain& domain,
                                                            const std::optional<InteriorCondition>& condition,
                                                            const Vec& x0, const Vec& xi, const Vec& eta0,
                                                            double eps, const MarkovPolicy& policy,
                                                            std::size_t n_paths, const SimulationParams& params,
                                                            const ValueProvider* provider);

/// (V(y(eps)) - V(x)) / eps at the common stopping time.
[[nodiscard]] Estimate estimate_first_difference_perturbed(const ControlProblem& problem, const Domain& domain,
                                                           const std::optional<InteriorCondition>& condition,
                                                           const Vec& x0, const Vec& xi, double eps,
                                                           const MarkovPolicy& policy, std::size_t n_paths,
                                                           const SimulationParams& params,
                                                           const ValueProvider* provider);

struct ConvergenceRow {
    double eps = 0.0;
    double sup_gap = 0.0;           ///< mean over seeds of sup_t |y - x|
    double sup_first_error = 0.0;   ///< mean of sup_t |(y - x) / eps - xi|
    double sup_second_error = 0.0;  ///< mean of sup_t |(z(eps) - 2 x + z(-eps)) / eps^2 - eta|
    double first_std_error = 0.0;
    double second_std_error = 0.0;
    double breakdown_fraction = 0.0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    std::vector<double> first_ratios;   ///< error(eps_k) / error(eps_{k+1})
    std::vector<double> second_ratios;
    bool first_monotone = false;
    bool second_monotone = false;
};

[[nodiscard]] ConvergenceReport convergence_probe(const ControlProblem& problem, const Domain& domain,
                                                  const std::optional<InteriorCondition>& condition, const Vec& x0,
                                                  const Vec& xi, const MarkovPolicy& policy,
                                                  std::span<const double> eps_list,
                                                  std::span<const std::uint64_t> seeds,
                                                  const SimulationParams& params);

struct ExitGapRow {
    double eps = 0.0;
    double gap = 0.0;
    double std_error = 0.0;
    std::size_t argmax_policy = 0;
};

/// max over policies of E(tau - min(tau, tau_bar(eps))) with tau_bar the stopping time of y(eps).
[[nodiscard]] std::vector<ExitGapRow> exit_time_gap(const ControlProblem& problem, const Domain& domain,
                                                    const std::optional<InteriorCondition>& condition,
                                                    const Vec& x0, const Vec& xi, std::span<const double> eps_list,
                                                    std::span<const MarkovPolicy> policies, std::size_t n_paths,
                                                    const SimulationParams& params);

/// Fraction of paths with tau > T, for the K0 / T tail check.
[[nodiscard]] Estimate exit_tail_probability(const ControlProblem& problem, const Domain& domain, const Vec& x0,
                                             const MarkovPolicy& policy, double horizon, std::size_t n_paths,
                                             const SimulationParams& params);

}  // namespace qdlab
