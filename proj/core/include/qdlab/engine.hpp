#pragma once

#include "qdlab/domain.hpp"
#include "qdlab/policy.hpp"
#include "qdlab/problem.hpp"
#include "qdlab/recipe.hpp"
#include "qdlab/types.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace qdlab {

/// Which components of the bundle are integrated besides the base process x.
struct Tracking {
    bool xi = false;         ///< first quasiderivative
    bool eta = false;        ///< second quasiderivative (needs xi)
    bool augmented = false;  ///< discount, Girsanov and payoff coordinates of xi and eta
    bool y = false;          ///< first-order perturbed process y(eps)
    bool z = false;          ///< second-order perturbed processes z(+eps), z(-eps)
};

struct StepCaps {
    double dt0 = 1e-3;
    double dt_boundary_factor = 0.1;
    /// Inside the boundary recipe dt is also capped by this factor times psi^2 / Upsilon.
    double dt_layer_factor = 0.05;
    double dt_min = 1e-14;
    double horizon = 100.0;
    double xi_cap = 1e3;
    bool bridge_correction = false;
};

struct EngineConfig {
    Tracking track;
    RecipeMode recipe = RecipeMode::Switched;
    Levels levels;
    double eps = 0.0;
    double upsilon_floor = 1e-9;
    StepCaps caps;
    /// The bundle stops when psi(x) leaves (stop_low, stop_high).
    /// Raised to delta whenever the boundary recipe can act on a tracked xi.
    double stop_low = 0.0;
    double stop_high = std::numeric_limits<double>::infinity();
    /// When false, perturbed processes freeze at their own exit and x keeps running.
    bool stop_on_perturbed_exit = true;
    bool record_trace = false;
};

/// Tip of a path bundle.
struct BundleState {
    double t = 0.0;
    Vec x;
    Vec xi;
    Vec eta;
    double phi = 0.0;      ///< integral of c along x
    double running = 0.0;  ///< integral of f exp(-phi) along x

    // Augmented coordinates d+1, d+2 (Girsanov exponent), d+3 of xi and eta.
    double xi_discount = 0.0;
    double xi_weight = 0.0;
    double xi_payoff = 0.0;
    double eta_discount = 0.0;
    double eta_weight = 0.0;
    double eta_payoff = 0.0;
    double pi_sq_integral = 0.0;
    double pi_hat_integral = 0.0;

    // Perturbed processes with their time-changed discount, Girsanov log-weight and payoff.
    Vec y;
    double y_phi = 0.0, y_log_p = 0.0, y_payoff = 0.0;
    Vec z_plus;
    double zp_phi = 0.0, zp_log_p = 0.0, zp_payoff = 0.0;
    Vec z_minus;
    double zm_phi = 0.0, zm_log_p = 0.0, zm_payoff = 0.0;
    bool y_alive = false;
    bool zp_alive = false;
    bool zm_alive = false;

    RecipeKind recipe = RecipeKind::None;
    std::size_t control = 0;
    int switches = 0;
};

enum class StopCause { Running, Exit, XiCap, Horizon, PerturbationBreakdown };
enum class Process { X, Y, ZPlus, ZMinus };

[[nodiscard]] std::string_view to_string(StopCause cause) noexcept;

struct TracePoint {
    double t;
    Vec x;
    Vec xi;
    Vec eta;
    double phi;
    double p_eps;
    RegionTag region;
};

struct PathBundle {
    BundleState start;
    BundleState tip;
    StopCause cause = StopCause::Running;
    Process exited = Process::X;
    bool hit_xi_cap = false;
    std::size_t steps = 0;
    std::size_t rejections = 0;
    /// Time at which the first perturbed process stopped (exit or breakdown), NaN if never.
    double perturbed_stop_time = std::numeric_limits<double>::quiet_NaN();
    std::vector<TracePoint> trace;
    std::vector<BundleState> checkpoints;
};

enum class StepStatus { Accepted, Rejected };

using StateObserver = std::function<void(const BundleState&)>;

/// Euler-Maruyama integrator for x together with its quasiderivatives and perturbed copies.
/// All processes share one Brownian increment per step.
class BundleEngine {
public:
    BundleEngine(ControlProblem problem, Domain domain, std::optional<InteriorCondition> condition,
                 MarkovPolicy policy, EngineConfig config);

    [[nodiscard]] const EngineConfig& config() const noexcept { return config_; }
    [[nodiscard]] const ControlProblem& problem() const noexcept { return problem_; }
    [[nodiscard]] const Domain& domain() const noexcept { return domain_; }

    [[nodiscard]] BundleState initial_state(const Vec& x0, const Vec& xi0, const Vec& eta0) const;

    /// Recipe for the tip under the configured mode, with hysteresis relative to tip.recipe.
    [[nodiscard]] QuasiRecipe recipe_at(const BundleState& tip, const CoefficientJet& jet) const;

    /// One step with a prescribed increment. Rejected when a time-change radicand is not positive.
    [[nodiscard]] StepStatus step(const BundleState& tip, double dt, const Vec& dw, BundleState& next) const;

    [[nodiscard]] PathBundle simulate(const Vec& x0, const Vec& xi0, const Vec& eta0, std::uint64_t seed,
                                      std::uint64_t path_index, const StateObserver* observer = nullptr,
                                      std::span<const double> checkpoints = {}) const;

private:
    [[nodiscard]] int jet_order() const noexcept;
    StepStatus advance(const BundleState& s, double dt, const Vec& dw, const QuasiRecipe& rc,
                       const CoefficientJet& jx, BundleState& n) const;

    ControlProblem problem_;
    Domain domain_;
    InteriorCondition condition_;
    MarkovPolicy policy_;
    EngineConfig config_;
};

/// Free-function forms of the engine operations.
[[nodiscard]] StepStatus step_bundle(const BundleEngine& engine, const BundleState& tip, double dt, const Vec& dw,
                                     BundleState& next);
[[nodiscard]] PathBundle simulate_bundle(const BundleEngine& engine, const Vec& x0, const Vec& xi0, const Vec& eta0,
                                         std::uint64_t seed, std::uint64_t path_index);

/// Linear interpolation of every component between two tips.
[[nodiscard]] BundleState blend(const BundleState& a, const BundleState& b, double theta);

/// exp(-phi) [v_(xi) + (xi^{d+1} + xi^{d+2}) v] + xi^{d+3} at the tip.
[[nodiscard]] double first_representation(const BundleState& s, const ScalarJet& v);
/// exp(-phi) [v_(xi)(xi) + v_(eta) + 2 tilde_xi v_(xi) + tilde_eta v] + eta^{d+3} at the tip.
[[nodiscard]] double second_representation(const BundleState& s, const ScalarJet& v);

}  // namespace qdlab
