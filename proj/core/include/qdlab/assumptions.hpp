#pragma once

#include "qdlab/domain.hpp"
#include "qdlab/problem.hpp"
#include "qdlab/types.hpp"

#include <span>
#include <vector>

namespace qdlab {

/// inf over zeta with (xi, zeta) = 1 of max over the given matrices of (A zeta, zeta).
[[nodiscard]] double mu_directional(std::span<const Mat> diffusions, const Vec& xi);
/// inf over unit zeta of max over the given matrices of (A zeta, zeta).
[[nodiscard]] double mu_minimal(std::span<const Mat> diffusions);

/// Directional degeneracy measure of the problem's diffusion matrices at x.
[[nodiscard]] double mu(const ControlProblem& problem, const Vec& x, const Vec& xi);
[[nodiscard]] double mu_min(const ControlProblem& problem, const Vec& x);

struct NondegeneracyReport {
    double delta0 = 0.0;
    Vec witness;
    std::size_t witness_control = 0;
    std::size_t n_points = 0;
};

/// Minimum over boundary samples and controls of (a n, n) with n the unit normal.
[[nodiscard]] NondegeneracyReport check_nondegeneracy_normal(const ControlProblem& problem, const Domain& domain,
                                                             std::size_t n_samples = 1000, std::uint64_t seed = 3);

struct InteriorConditionReport {
    double min_slack = 0.0;
    Vec witness_x;
    Vec witness_y;
    std::size_t witness_control = 0;
    std::size_t n_points = 0;
    [[nodiscard]] bool holds() const noexcept { return min_slack >= 0.0; }
};

/// Slack c + M (a y, y) - |sigma_(y) + (rho, y) sigma + sigma Q(y)|^2 - 2 (y, b_(y) + 2 (rho, y) b) for unit y.
[[nodiscard]] double interior_slack(const CoefficientJet& jet, const Vec& rho, const Mat& q, double m, const Vec& y);

/// Minimum slack over samples of {psi > lambda} and unit directions.
[[nodiscard]] InteriorConditionReport check_interior_condition(const ControlProblem& problem,
                                                               const InteriorCondition& condition,
                                                               const Domain& domain, const Levels& levels,
                                                               std::size_t n_samples = 2000, std::uint64_t seed = 5);

/// Verifies skewness and linearity of Q and finiteness of rho and M on samples; throws on violation.
void validate_interior_condition(const ControlProblem& problem, const InteriorCondition& condition,
                                 const Domain& domain, std::size_t n_samples = 200, std::uint64_t seed = 9);

}  // namespace qdlab
