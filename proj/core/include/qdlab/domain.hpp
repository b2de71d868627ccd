#pragma once

#include "qdlab/types.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace qdlab {

class ControlProblem;

/// Value, gradient and Hessian of the defining function at one point.
struct PsiJet {
    double value = 0.0;
    Vec grad;
    Mat hess;
};

/// Third derivatives: entry [i](j, k) is the partial derivative in directions i, j, k.
using PsiThird = std::array<Mat, kMaxDim>;

struct Box {
    Vec lo;
    Vec hi;
    [[nodiscard]] bool contains(const Vec& x) const;
};

class DomainShape {
public:
    virtual ~DomainShape() = default;
    [[nodiscard]] virtual int dim() const = 0;
    [[nodiscard]] virtual double value(const Vec& x) const = 0;
    [[nodiscard]] virtual PsiJet jet(const Vec& x) const = 0;
    [[nodiscard]] virtual std::optional<PsiThird> third(const Vec& x) const = 0;
    [[nodiscard]] virtual Box bounding_box() const = 0;
    [[nodiscard]] virtual std::string describe() const = 0;
};

enum class RegionTag { Outside, Collar, BoundaryLayer, Overlap, Interior };

[[nodiscard]] std::string_view to_string(RegionTag tag) noexcept;

/// Bounded domain D = {psi > 0} described by a smooth defining function psi.
///
/// Built-in shapes pick a constant factor so that |grad psi| >= 1 on the boundary.
/// A further global factor is applied by normalize_psi.
class Domain {
public:
    Domain() = default;
    explicit Domain(std::shared_ptr<const DomainShape> shape, double scale = 1.0);

    static Domain ball(const Vec& center, double radius);
    static Domain ellipsoid(const Vec& center, const Vec& semi_axes);
    /// Quartic superellipsoid 1 - sum ((x_i - c_i) / w_i)^4, a smoothed box.
    static Domain smoothed_box(const Vec& center, const Vec& half_widths);

    struct CustomMaps {
        int dim = 0;
        Box box;
        std::function<double(const Vec&)> psi;
        std::function<Vec(const Vec&)> grad;
        std::function<Mat(const Vec&)> hess;
        std::function<PsiThird(const Vec&)> third;  // optional
        std::string name = "custom";
    };
    static Domain custom(CustomMaps maps);

    [[nodiscard]] int dim() const;
    /// Checked evaluation: x must lie in the bounding box, values must be finite.
    [[nodiscard]] PsiJet psi_eval(const Vec& x) const;
    /// Unchecked evaluation used on hot paths and outside the box.
    [[nodiscard]] PsiJet psi_jet(const Vec& x) const;
    [[nodiscard]] double psi(const Vec& x) const;
    [[nodiscard]] std::optional<PsiThird> psi_third(const Vec& x) const;
    [[nodiscard]] Box bounding_box() const;
    [[nodiscard]] bool contains(const Vec& x) const { return psi(x) > 0.0; }
    [[nodiscard]] double scale() const noexcept { return scale_; }
    [[nodiscard]] Domain scaled(double factor) const;
    [[nodiscard]] std::string describe() const;
    [[nodiscard]] bool valid() const noexcept { return static_cast<bool>(shape_); }

    /// Outward unit normal -grad psi / |grad psi|.
    [[nodiscard]] Vec outward_normal(const Vec& x) const;

private:
    std::shared_ptr<const DomainShape> shape_;
    double scale_ = 1.0;
};

[[nodiscard]] RegionTag classify_psi(double psi, const Levels& levels) noexcept;
[[nodiscard]] RegionTag region_classify(const Domain& domain, const Vec& x, const Levels& levels);
/// Throws InvalidLevels unless 0 < delta < lambda^2 < lambda < 1.
[[nodiscard]] RegionTag region_classify(const Domain& domain, const Vec& x, double delta, double lambda);

struct NormalizationResult {
    Domain domain;
    double scale = 1.0;
    double sup_generator_before = 0.0;
    Vec witness;
    std::size_t witness_control = 0;
};

/// Rescales psi by one global factor >= 1 so that sup over controls of L psi <= -1 on sampled points.
[[nodiscard]] NormalizationResult normalize_psi(const Domain& domain, const ControlProblem& problem,
                                                std::size_t n_samples = 10000, std::uint64_t seed = 7);

/// Uniform rejection samples from D.
[[nodiscard]] std::vector<Vec> sample_interior(const Domain& domain, std::size_t n, std::mt19937_64& rng);
/// Boundary samples: rejection samples projected onto {psi = 0} by Newton steps along the gradient.
[[nodiscard]] std::vector<Vec> sample_boundary(const Domain& domain, std::size_t n, std::mt19937_64& rng);
/// Newton projection of x onto the zero level set along grad psi.
[[nodiscard]] Vec project_to_boundary(const Domain& domain, const Vec& x, double tol = 1e-12);
/// Point on the open segment from inside to outside where psi equals level, by bisection.
[[nodiscard]] double bisect_level(const std::function<double(double)>& psi_along, double level, double tol);

}  // namespace qdlab
