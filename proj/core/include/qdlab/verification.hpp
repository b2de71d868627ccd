#pragma once

#include "qdlab/domain.hpp"
#include "qdlab/estimators.hpp"
#include "qdlab/problem.hpp"
#include "qdlab/stats.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qdlab {

/// Boundary-layer barrier (B1) and interior barrier (B2).
enum class BarrierKind { BoundaryLayer, Interior };

[[nodiscard]] std::string_view to_string(BarrierKind kind) noexcept;

/// B1 = [lambda + sqrt(psi)(1 + sqrt(psi))] |xi|^2 + k1 w^{3/2} psi_(xi)^2 / psi on 0 < psi <= lambda,
/// B2 = lambda^{3/4} |xi|^2 on psi >= lambda^2. Other points raise RegionMismatch.
[[nodiscard]] double barrier_value(BarrierKind kind, const PsiJet& psi, const Vec& xi, double lambda, double k1);
[[nodiscard]] double barrier_eval(BarrierKind kind, const Domain& domain, const Vec& x, const Vec& xi, double lambda,
                                  double k1);

/// Default k1 = 10 K0^3.
[[nodiscard]] double default_k1(const ControlProblem& problem);

/// Barrier values at checkpoint times t_i stopped at the exit of the barrier's region; one row per path.
struct BarrierSamples {
    std::vector<double> times;
    std::vector<std::vector<double>> values;
    std::vector<double> weights;
    std::vector<bool> stopped;

    [[nodiscard]] BarrierSamples square_root() const;
    /// Every `factor`-th path.
    [[nodiscard]] BarrierSamples subsample(std::size_t factor) const;
};

struct BarrierRun {
    BarrierKind kind = BarrierKind::BoundaryLayer;
    Levels levels;
    double k1 = 1.0;
    std::span<const double> checkpoints;
    std::size_t n_paths = 10000;
    SimulationParams params;
};

/// B1 under the boundary recipe on {delta < psi < lambda}, or exp(-phi) B2 under the interior recipe on {psi > lambda^2}.
[[nodiscard]] BarrierSamples collect_barrier_samples(const ControlProblem& problem, const Domain& domain,
                                                     const std::optional<InteriorCondition>& condition, const Vec& x0,
                                                     const Vec& xi0, const BarrierRun& run);

struct SupermartingaleVerdict {
    bool pass = false;
    double max_z = 0.0;        ///< largest standardized increase between consecutive checkpoints
    double critical_z = 0.0;   ///< one-sided 2 sigma level after Bonferroni over the pairs
    std::size_t worst_pair = 0;
    std::vector<double> means;
    std::vector<double> std_errors;
};

/// Tests mean(B(t_{i+1})) <= mean(B(t_i)) + z * sqrt(se_i^2 + se_{i+1}^2) for every consecutive pair.
/// Fewer than 1000 paths raise Underpowered.
[[nodiscard]] SupermartingaleVerdict supermartingale_test(const BarrierSamples& samples,
                                                          std::size_t min_paths = 1000);

struct MomentRow {
    std::string region;  ///< "boundary" or "interior"
    std::string item;
    double psi_level = 0.0;
    double value = 0.0;
    double std_error = 0.0;
    double barrier = 0.0;
    double ratio = 0.0;
};

struct MomentRun {
    Levels levels;
    double k1 = 1.0;
    std::size_t n_paths = 2000;
    SimulationParams params;
};

/// Monte Carlo moments of xi and eta (eta starting at 0) divided by the barrier at (x0, xi).
/// Boundary rows need delta < psi(x0) < lambda; interior rows need psi(x0) > lambda^2.
/// Interior rows assume c >= 1, so callers normally pass normalize_discount(problem).
[[nodiscard]] std::vector<MomentRow> moment_bound_check(const ControlProblem& problem, const Domain& domain,
                                                        const std::optional<InteriorCondition>& condition,
                                                        const Vec& x0, const Vec& xi, const MomentRun& run);

struct TrendRow {
    std::string region;
    std::string item;
    TrendTest trend;
    double max_ratio = 0.0;
    bool pass = false;  ///< no increasing trend at the 5% level and finite ratios
};

struct LadderReport {
    std::vector<MomentRow> rows;
    std::vector<TrendRow> trends;
    bool pass = false;
};

/// Start points on the segment from `inner` toward `outer` with psi log-spaced from psi_hi down to psi_lo.
[[nodiscard]] std::vector<Vec> psi_ladder(const Domain& domain, const Vec& inner, const Vec& outer, double psi_hi,
                                          double psi_lo, std::size_t count);

/// Runs moment_bound_check along the start points and tests each item for growth toward the boundary.
[[nodiscard]] LadderReport moment_ladder(const ControlProblem& problem, const Domain& domain,
                                         const std::optional<InteriorCondition>& condition,
                                         std::span<const Vec> starts, const Vec& xi, const MomentRun& run);

using DerivativeSource = std::function<DirectionalJet(const Vec& x, const Vec& xi)>;

[[nodiscard]] DerivativeSource derivative_source(const ValueProvider& provider);

struct DerivativeRatioRow {
    Vec x;
    Vec xi;
    double psi = 0.0;
    double first_ratio = 0.0;   ///< |v_(xi)| / (|xi| + |psi_(xi)| / sqrt(psi))
    double lower_ratio = 0.0;   ///< (-v_(xi)(xi))_+ / (|xi|^2 + psi_(xi)^2 / psi)
    double upper_ratio = 0.0;   ///< (v_(xi)(xi))_+ psi mu(x, xi/|xi|) / |xi|^2
    double mu = 0.0;
    bool upper_applies = false; ///< mu(x, xi) > mu_threshold
};

struct DerivativeBoundReport {
    std::vector<DerivativeRatioRow> rows;
    double fitted_first = 0.0;
    double fitted_lower = 0.0;
    double fitted_upper = 0.0;
    TrendTest first_trend;
    TrendTest lower_trend;
    TrendTest upper_trend;
    bool pass = false;  ///< finite fitted constants and no growth toward the boundary at 5%
};

[[nodiscard]] DerivativeBoundReport derivative_bound_check(const ControlProblem& problem, const Domain& domain,
                                                           std::span<const Vec> points, std::span<const Vec> directions,
                                                           const DerivativeSource& source,
                                                           double mu_threshold = 1e-6);

struct NormalDerivativeReport {
    double max_normal_derivative = 0.0;
    double g_norm = 0.0;  ///< sampled sup|g| + sup|grad g| + sup|hess g| over D
    double f_sup = 0.0;   ///< sampled sup over D and controls of |f|
    double fitted_k = 0.0;
    Vec witness;
    bool bounded = false;
};

/// Inner normal derivative at boundary samples from `gradient`, against K (|g|_2 + sup |f|).
[[nodiscard]] NormalDerivativeReport normal_derivative_check(const ControlProblem& problem, const Domain& domain,
                                                             std::span<const Vec> boundary_samples,
                                                             const std::function<Vec(const Vec&)>& gradient,
                                                             std::size_t n_norm_samples = 2000);

}  // namespace qdlab
