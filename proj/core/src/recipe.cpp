#include "qdlab/recipe.hpp"

#include <cmath>
#include <sstream>

namespace qdlab {

std::string_view to_string(RecipeKind kind) noexcept {
    switch (kind) {
        case RecipeKind::None: return "none";
        case RecipeKind::Boundary: return "boundary";
        case RecipeKind::Interior: return "interior";
    }
    return "unknown";
}

std::string_view to_string(RecipeMode mode) noexcept {
    switch (mode) {
        case RecipeMode::None: return "none";
        case RecipeMode::Switched: return "switched";
        case RecipeMode::BoundaryOnly: return "boundary";
        case RecipeMode::InteriorOnly: return "interior";
    }
    return "unknown";
}

RecipeMode parse_recipe_mode(std::string_view text) {
    if (text == "none") return RecipeMode::None;
    if (text == "switched") return RecipeMode::Switched;
    if (text == "boundary") return RecipeMode::BoundaryOnly;
    if (text == "interior") return RecipeMode::InteriorOnly;
    throw Error(ErrorCode::InvalidArgument, "unknown recipe mode '" + std::string(text) + "'");
}

QuasiRecipe QuasiRecipe::zero(int d1) {
    QuasiRecipe q;
    q.pi = Vec::Zero(d1);
    q.pi_hat = Vec::Zero(d1);
    q.p = Mat::Zero(d1, d1);
    q.p_hat = Mat::Zero(d1, d1);
    return q;
}

double layer_weight(double psi, double lambda) noexcept {
    return lambda * lambda + psi * (1.0 - psi / (4.0 * lambda));
}

QuasiRecipe boundary_recipe(const CoefficientJet& jet, const PsiJet& psi, const Vec& xi, double lambda,
                            double upsilon_floor) {
    const Eigen::Index d1 = jet.sigma.cols();
    QuasiRecipe q = QuasiRecipe::zero(static_cast<int>(d1));
    q.kind = RecipeKind::Boundary;
    if (!(psi.value > 0.0)) {
        std::ostringstream os;
        os << "boundary construction needs psi > 0, got " << psi.value;
        throw Error(ErrorCode::RegionMismatch, os.str());
    }
    // psi along each noise column and its derivative along xi.
    const Vec along = jet.sigma.transpose() * psi.grad;
    const Mat sigma_xi = jet.sigma_dir(xi);
    const Vec along_xi = jet.sigma.transpose() * (psi.hess * xi) + sigma_xi.transpose() * psi.grad;
    const double upsilon = along.squaredNorm();
    q.upsilon = upsilon;
    if (!(upsilon >= upsilon_floor) || upsilon <= 0.0) {
        std::ostringstream os;
        os << "Upsilon = " << upsilon << " below floor " << upsilon_floor;
        throw Error(ErrorCode::UpsilonTooSmall, os.str());
    }
    const double rho = -along.dot(along_xi) / upsilon;
    const double psi_xi = psi.grad.dot(xi);
    const double ratio = psi_xi / psi.value;
    q.r = rho + ratio;
    q.r_hat = ratio * ratio;
    const double weight = layer_weight(psi.value, lambda);
    q.pi = (2.0 * psi_xi / (weight * psi.value)) * along;
    q.p = (along_xi * along.transpose() - along * along_xi.transpose()) / upsilon;
    return q;
}

QuasiRecipe boundary_recipe(const ControlProblem& problem, const Domain& domain, std::size_t control, const Vec& x,
                            const Vec& xi, double lambda, double upsilon_floor) {
    const CoefficientJet jet = problem.coefficients(control, x, 1);
    return boundary_recipe(jet, domain.psi_jet(x), xi, lambda, upsilon_floor);
}

QuasiRecipe interior_recipe(const CoefficientJet& jet, const InteriorCondition& condition, std::size_t control,
                            const Vec& x, const Vec& xi, const Vec& eta) {
    const Eigen::Index d1 = jet.sigma.cols();
    QuasiRecipe q = QuasiRecipe::zero(static_cast<int>(d1));
    q.kind = RecipeKind::Interior;
    const Vec rho = condition.rho(control, x);
    const double m = condition.m(control, x);
    q.r = rho.dot(xi);
    q.pi = (0.5 * m) * (jet.sigma.transpose() * xi);
    q.p = condition.q(control, x, xi);
    if (eta.size() == xi.size()) {
        q.r_hat = rho.dot(eta);
        q.pi_hat = (0.5 * m) * (jet.sigma.transpose() * eta);
        q.p_hat = condition.q(control, x, eta);
    }
    return q;
}

QuasiRecipe interior_recipe(const ControlProblem& problem, const InteriorCondition& condition, std::size_t control,
                            const Vec& x, const Vec& xi, const Vec& eta) {
    const CoefficientJet jet = problem.coefficients(control, x, 0);
    return interior_recipe(jet, condition, control, x, xi, eta);
}

RecipeKind select_recipe(RecipeMode mode, double psi, const Levels& levels, RecipeKind previous) noexcept {
    switch (mode) {
        case RecipeMode::None: return RecipeKind::None;
        case RecipeMode::BoundaryOnly: return RecipeKind::Boundary;
        case RecipeMode::InteriorOnly: return RecipeKind::Interior;
        case RecipeMode::Switched: break;
    }
    if (psi < levels.switch_low()) return RecipeKind::Boundary;
    if (psi > levels.switch_high()) return RecipeKind::Interior;
    if (previous == RecipeKind::None) {
        return psi < 0.5 * (levels.switch_low() + levels.switch_high()) ? RecipeKind::Boundary : RecipeKind::Interior;
    }
    return previous;
}

}  // namespace qdlab
