#pragma once

#include "qdlab/domain.hpp"
#include "qdlab/problem.hpp"
#include "qdlab/types.hpp"

namespace qdlab {

enum class RecipeKind { None, Boundary, Interior };
enum class RecipeMode { None, Switched, BoundaryOnly, InteriorOnly };

[[nodiscard]] std::string_view to_string(RecipeKind kind) noexcept;
[[nodiscard]] std::string_view to_string(RecipeMode mode) noexcept;
[[nodiscard]] RecipeMode parse_recipe_mode(std::string_view text);

/// Auxiliary processes driving the first and second quasiderivatives at one instant.
/// r, pi, P act on the first-order equation; r_hat, pi_hat, P_hat on the second.
struct QuasiRecipe {
    RecipeKind kind = RecipeKind::None;
    double r = 0.0;
    double r_hat = 0.0;
    Vec pi;
    Vec pi_hat;
    Mat p;
    Mat p_hat;
    double upsilon = 0.0;

    static QuasiRecipe zero(int d1);
};

/// lambda^2 + psi (1 - psi / (4 lambda)), the weight in the boundary drift change.
[[nodiscard]] double layer_weight(double psi, double lambda) noexcept;

/// Boundary-layer construction; eta-level fields vanish. Throws UpsilonTooSmall below the floor.
[[nodiscard]] QuasiRecipe boundary_recipe(const CoefficientJet& jet, const PsiJet& psi, const Vec& xi, double lambda,
                                          double upsilon_floor);
[[nodiscard]] QuasiRecipe boundary_recipe(const ControlProblem& problem, const Domain& domain, std::size_t control,
                                          const Vec& x, const Vec& xi, double lambda, double upsilon_floor);

/// Interior construction from the fields rho, Q, M.
[[nodiscard]] QuasiRecipe interior_recipe(const CoefficientJet& jet, const InteriorCondition& condition,
                                          std::size_t control, const Vec& x, const Vec& xi, const Vec& eta);
[[nodiscard]] QuasiRecipe interior_recipe(const ControlProblem& problem, const InteriorCondition& condition,
                                          std::size_t control, const Vec& x, const Vec& xi, const Vec& eta);

/// Recipe kind with hysteresis: boundary below the low switch level, interior above the high one,
/// otherwise the previous kind. `previous == None` starts from the midpoint rule.
[[nodiscard]] RecipeKind select_recipe(RecipeMode mode, double psi, const Levels& levels, RecipeKind previous) noexcept;

}  // namespace qdlab
