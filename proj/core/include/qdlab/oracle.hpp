#pragma once

#include "qdlab/domain.hpp"
#include "qdlab/estimators.hpp"
#include "qdlab/policy.hpp"
#include "qdlab/problem.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace qdlab {

/// Uniform lattice over the bounding box, masked to D, with nodal Bellman data.
struct GridSolution {
    int dim = 1;
    Vec lo;
    double h = 0.0;
    std::array<int, 2> counts{1, 1};
    std::vector<char> inside;
    std::vector<double> v;
    std::vector<int> policy;  ///< control index, -1 off D
    std::vector<double> residual;
    std::vector<std::string> labels;
    std::vector<std::size_t> wide_nodes;  ///< nodes where the monotone split failed and wide directions were used
    std::vector<double> residual_history;
    int iterations = 0;
    bool converged = false;
    bool cycled = false;
    std::string warning;

    [[nodiscard]] std::size_t size() const noexcept { return v.size(); }
    [[nodiscard]] std::size_t index(int i, int j = 0) const noexcept {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(counts[0]) * static_cast<std::size_t>(j);
    }
    [[nodiscard]] Vec node(std::size_t k) const;
    [[nodiscard]] std::size_t nearest(const Vec& x) const;
    [[nodiscard]] double max_residual() const;

    /// Grid filled from a function, for interpolation checks.
    static GridSolution sample(const Domain& domain, double h, const std::function<double(const Vec&)>& fn);
};

enum class InitialGuess { Zero, BoundaryExtension, Random };

struct OracleOptions {
    double tol = 1e-8;
    int max_iterations = 200;
    double linear_tol = 1e-13;
    double tie_tol = 1e-12;
    InitialGuess init = InitialGuess::BoundaryExtension;
    std::uint64_t seed = 17;
};

/// Howard policy iteration on a monotone finite-difference scheme, d <= 2.
[[nodiscard]] GridSolution solve_bellman_fd(const ControlProblem& problem, const Domain& domain, double h,
                                            const OracleOptions& options = {});

/// max over the nodes nearest to x_set of |sup_a [L^a v - c v + f]| for the discrete operator.
[[nodiscard]] double bellman_residual(const ControlProblem& problem, const Domain& domain,
                                      const GridSolution& solution, std::span<const Vec> x_set);

/// (v, v_(xi), v_(xi)(xi)) from quadratic interpolation and centered differences with step h.
/// Any stencil node off D raises OutOfStencil.
[[nodiscard]] DirectionalJet oracle_derivatives(const GridSolution& solution, const Vec& x, const Vec& xi);
[[nodiscard]] double oracle_value(const GridSolution& solution, const Vec& x);

struct UniquenessRun {
    InitialGuess init;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

struct UniquenessReport {
    double max_deviation = 0.0;
    std::vector<UniquenessRun> runs;
    bool pass = false;  ///< every run converged and max_deviation <= 10 tol
};

[[nodiscard]] UniquenessReport uniqueness_probe(const ControlProblem& problem, const Domain& domain, double h,
                                                double tol, int n_inits);

/// Grid interpolation as a value provider. Points too close to the boundary are moved inward along the normal.
class OracleProvider final : public ValueProvider {
public:
    OracleProvider(std::shared_ptr<const GridSolution> solution, ControlProblem problem, Domain domain);
    ScalarJet evaluate(const Vec& x, int order, bool on_boundary) const override;
    std::string name() const override { return "pde_oracle"; }

private:
    std::shared_ptr<const GridSolution> solution_;
    ControlProblem problem_;
    Domain domain_;
};

/// Nearest-node argmax policy of a grid solution.
[[nodiscard]] MarkovPolicy grid_policy(std::shared_ptr<const GridSolution> solution);

/// CSV with columns x0[,x1],inside,v,policy,residual.
void write_csv(const GridSolution& solution, std::ostream& out);

}  // namespace qdlab
