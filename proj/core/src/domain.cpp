#include "qdlab/domain.hpp"

#include "qdlab/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qdlab {

namespace {

class BallShape final : public DomainShape {
public:
    BallShape(Vec center, double radius)
        : center_(std::move(center)), radius_(radius), factor_(std::max(1.0, 1.0 / (2.0 * radius))) {}

    int dim() const override { return static_cast<int>(center_.size()); }
    double value(const Vec& x) const override {
        return factor_ * (radius_ * radius_ - (x - center_).squaredNorm());
    }
    PsiJet jet(const Vec& x) const override {
        const int d = dim();
        PsiJet j;
        j.value = value(x);
        j.grad = -2.0 * factor_ * (x - center_);
        j.hess = -2.0 * factor_ * Mat::Identity(d, d);
        return j;
    }
    std::optional<PsiThird> third(const Vec&) const override {
        PsiThird t;
        for (int i = 0; i < dim(); ++i) t[i] = Mat::Zero(dim(), dim());
        return t;
    }
    Box bounding_box() const override {
        return {center_.array() - radius_, center_.array() + radius_};
    }
    std::string describe() const override {
        std::ostringstream os;
        os << "ball(center=" << format_vec(center_) << ", radius=" << radius_ << ")";
        return os.str();
    }

private:
    Vec center_;
    double radius_;
    double factor_;
};

class EllipsoidShape final : public DomainShape {
public:
    EllipsoidShape(Vec center, Vec axes)
        : center_(std::move(center)), axes_(std::move(axes)), factor_(std::max(1.0, axes_.maxCoeff() / 2.0)) {}

    int dim() const override { return static_cast<int>(center_.size()); }
    double value(const Vec& x) const override {
        return factor_ * (1.0 - ((x - center_).array() / axes_.array()).square().sum());
    }
    PsiJet jet(const Vec& x) const override {
        const int d = dim();
        PsiJet j;
        j.value = value(x);
        j.grad = Vec(d);
        j.hess = Mat::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            const double u = (x[i] - center_[i]) / axes_[i];
            j.grad[i] = -2.0 * factor_ * u / axes_[i];
            j.hess(i, i) = -2.0 * factor_ / (axes_[i] * axes_[i]);
        }
        return j;
    }
    std::optional<PsiThird> third(const Vec&) const override {
        PsiThird t;
        for (int i = 0; i < dim(); ++i) t[i] = Mat::Zero(dim(), dim());
        return t;
    }
    Box bounding_box() const override { return {center_ - axes_, center_ + axes_}; }
    std::string describe() const override {
        std::ostringstream os;
        os << "ellipsoid(center=" << format_vec(center_) << ", semi_axes=" << format_vec(axes_) << ")";
        return os.str();
    }

private:
    Vec center_;
    Vec axes_;
    double factor_;
};

class SuperellipsoidShape final : public DomainShape {
public:
    SuperellipsoidShape(Vec center, Vec widths)
        : center_(std::move(center)), widths_(std::move(widths)) {
        const double d = static_cast<double>(center_.size());
        factor_ = std::max(1.0, widths_.maxCoeff() * std::pow(d, 0.25) / 4.0);
    }

    int dim() const override { return static_cast<int>(center_.size()); }
    double value(const Vec& x) const override {
        double s = 0.0;
        for (int i = 0; i < dim(); ++i) {
            const double u = (x[i] - center_[i]) / widths_[i];
            s += u * u * u * u;
        }
        return factor_ * (1.0 - s);
    }
    PsiJet jet(const Vec& x) const override {
        const int d = dim();
        PsiJet j;
        j.value = value(x);
        j.grad = Vec(d);
        j.hess = Mat::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            const double w = widths_[i];
            const double u = (x[i] - center_[i]) / w;
            j.grad[i] = -4.0 * factor_ * u * u * u / w;
            j.hess(i, i) = -12.0 * factor_ * u * u / (w * w);
        }
        return j;
    }
    std::optional<PsiThird> third(const Vec& x) const override {
        const int d = dim();
        PsiThird t;
        for (int i = 0; i < d; ++i) {
            t[i] = Mat::Zero(d, d);
            const double w = widths_[i];
            const double u = (x[i] - center_[i]) / w;
            t[i](i, i) = -24.0 * factor_ * u / (w * w * w);
        }
        return t;
    }
    Box bounding_box() const override { return {center_ - widths_, center_ + widths_}; }
    std::string describe() const override {
        std::ostringstream os;
        os << "smoothed_box(center=" << format_vec(center_) << ", half_widths=" << format_vec(widths_) << ")";
        return os.str();
    }

private:
    Vec center_;
    Vec widths_;
    double factor_ = 1.0;
};

class CustomShape final : public DomainShape {
public:
    explicit CustomShape(Domain::CustomMaps maps) : maps_(std::move(maps)) {}

    int dim() const override { return maps_.dim; }
    double value(const Vec& x) const override { return maps_.psi(x); }
    PsiJet jet(const Vec& x) const override { return {maps_.psi(x), maps_.grad(x), maps_.hess(x)}; }
    std::optional<PsiThird> third(const Vec& x) const override {
        if (!maps_.third) return std::nullopt;
        return maps_.third(x);
    }
    Box bounding_box() const override { return maps_.box; }
    std::string describe() const override { return maps_.name; }

private:
    Domain::CustomMaps maps_;
};

void require_dim(const Vec& v, const char* what) {
    if (v.size() < 1 || v.size() > kMaxDim) {
        throw Error(ErrorCode::IllFormedDomain, std::string(what) + " must have dimension in [1, 4]");
    }
}

}  // namespace

bool Box::contains(const Vec& x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    }
    return true;
}

std::string_view to_string(RegionTag tag) noexcept {
    switch (tag) {
        case RegionTag::Outside: return "Outside";
        case RegionTag::Collar: return "Collar";
        case RegionTag::BoundaryLayer: return "BoundaryLayer";
        case RegionTag::Overlap: return "Overlap";
        case RegionTag::Interior: return "Interior";
    }
    return "Unknown";
}

Domain::Domain(std::shared_ptr<const DomainShape> shape, double scale) : shape_(std::move(shape)), scale_(scale) {
    if (!shape_) throw Error(ErrorCode::IllFormedDomain, "null domain shape");
    if (!(scale_ > 0.0) || !std::isfinite(scale_)) throw Error(ErrorCode::IllFormedDomain, "scale must be positive");
}

Domain Domain::ball(const Vec& center, double radius) {
    require_dim(center, "center");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw Error(ErrorCode::IllFormedDomain, "radius must be positive");
    return Domain(std::make_shared<BallShape>(center, radius));
}

Domain Domain::ellipsoid(const Vec& center, const Vec& semi_axes) {
    require_dim(center, "center");
    if (semi_axes.size() != center.size() || !(semi_axes.minCoeff() > 0.0)) {
        throw Error(ErrorCode::IllFormedDomain, "semi_axes must be positive and match the center dimension");
    }
    return Domain(std::make_shared<EllipsoidShape>(center, semi_axes));
}

Domain Domain::smoothed_box(const Vec& center, const Vec& half_widths) {
    require_dim(center, "center");
    if (half_widths.size() != center.size() || !(half_widths.minCoeff() > 0.0)) {
        throw Error(ErrorCode::IllFormedDomain, "half_widths must be positive and match the center dimension");
    }
    return Domain(std::make_shared<SuperellipsoidShape>(center, half_widths));
}

Domain Domain::custom(CustomMaps maps) {
    if (maps.dim < 1 || maps.dim > kMaxDim || !maps.psi || !maps.grad || !maps.hess) {
        throw Error(ErrorCode::IllFormedDomain, "custom domain needs dim in [1, 4] and psi, gradient and Hessian maps");
    }
    if (maps.box.lo.size() != maps.dim || maps.box.hi.size() != maps.dim) {
        throw Error(ErrorCode::IllFormedDomain, "custom domain bounding box has wrong dimension");
    }
    return Domain(std::make_shared<CustomShape>(std::move(maps)));
}

int Domain::dim() const { return shape_->dim(); }

PsiJet Domain::psi_jet(const Vec& x) const {
    PsiJet j = shape_->jet(x);
    if (scale_ != 1.0) {
        j.value *= scale_;
        j.grad *= scale_;
        j.hess *= scale_;
    }
    return j;
}

PsiJet Domain::psi_eval(const Vec& x) const {
    if (x.size() != dim()) throw Error(ErrorCode::IllFormedDomain, "point dimension mismatch");
    if (!shape_->bounding_box().contains(x)) {
        throw Error(ErrorCode::IllFormedDomain, "point " + format_vec(x) + " outside bounding box");
    }
    PsiJet j = psi_jet(x);
    if (!std::isfinite(j.value) || !j.grad.allFinite() || !j.hess.allFinite()) {
        throw Error(ErrorCode::IllFormedDomain, "non-finite psi derivatives at " + format_vec(x));
    }
    return j;
}

double Domain::psi(const Vec& x) const { return scale_ * shape_->value(x); }

std::optional<PsiThird> Domain::psi_third(const Vec& x) const {
    auto t = shape_->third(x);
    if (t && scale_ != 1.0) {
        for (int i = 0; i < dim(); ++i) (*t)[i] *= scale_;
    }
    return t;
}

Box Domain::bounding_box() const { return shape_->bounding_box(); }

Domain Domain::scaled(double factor) const { return Domain(shape_, scale_ * factor); }

std::string Domain::describe() const {
    std::ostringstream os;
    os << shape_->describe();
    if (scale_ != 1.0) os << " scaled by " << scale_;
    return os.str();
}

Vec Domain::outward_normal(const Vec& x) const {
    const PsiJet j = psi_jet(x);
    const double n = j.grad.norm();
    if (!(n > 0.0)) throw Error(ErrorCode::IllFormedDomain, "vanishing gradient at " + format_vec(x));
    return -j.grad / n;
}

RegionTag classify_psi(double psi, const Levels& levels) noexcept {
    if (psi <= 0.0) return RegionTag::Outside;
    if (psi <= levels.delta()) return RegionTag::Collar;
    if (psi <= levels.lambda_sq()) return RegionTag::BoundaryLayer;
    if (psi < levels.lambda()) return RegionTag::Overlap;
    return RegionTag::Interior;
}

RegionTag region_classify(const Domain& domain, const Vec& x, const Levels& levels) {
    return classify_psi(domain.psi(x), levels);
}

RegionTag region_classify(const Domain& domain, const Vec& x, double delta, double lambda) {
    return region_classify(domain, x, Levels(delta, lambda));
}

NormalizationResult normalize_psi(const Domain& domain, const ControlProblem& problem, std::size_t n_samples,
                                  std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto points = sample_interior(domain, n_samples, rng);
    double sup = -std::numeric_limits<double>::infinity();
    Vec witness;
    std::size_t witness_control = 0;
    CoefficientJet jet;
    for (const Vec& x : points) {
        const PsiJet pj = domain.psi_jet(x);
        for (std::size_t alpha = 0; alpha < problem.num_controls(); ++alpha) {
            problem.coefficients(alpha, x, 0, jet);
            const Mat a = 0.5 * jet.sigma * jet.sigma.transpose();
            const double gen = (a.cwiseProduct(pj.hess)).sum() + jet.b.dot(pj.grad);
            if (gen > sup) {
                sup = gen;
                witness = x;
                witness_control = alpha;
            }
        }
    }
    if (!(sup < 0.0)) {
        std::ostringstream os;
        os << "generator of psi is " << sup << " >= 0 at x=" << format_vec(witness)
           << " control=" << problem.label(witness_control);
        throw Error(ErrorCode::NormalizationImpossible, os.str());
    }
    const double factor = std::max(1.0, -1.0 / sup);
    return {domain.scaled(factor), factor, sup, witness, witness_control};
}

std::vector<Vec> sample_interior(const Domain& domain, std::size_t n, std::mt19937_64& rng) {
    const Box box = domain.bounding_box();
    const int d = domain.dim();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vec> out;
    out.reserve(n);
    std::size_t attempts = 0;
    const std::size_t max_attempts = 1000 * n + 1000;
    while (out.size() < n) {
        if (++attempts > max_attempts) {
            throw Error(ErrorCode::IllFormedDomain, "rejection sampling found no interior points");
        }
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
        if (domain.psi(x) > 0.0) out.push_back(x);
    }
    return out;
}

Vec project_to_boundary(const Domain& domain, const Vec& x0, double tol) {
    Vec x = x0;
    for (int it = 0; it < 100; ++it) {
        const PsiJet j = domain.psi_jet(x);
        if (std::abs(j.value) <= tol) return x;
        const double g2 = j.grad.squaredNorm();
        if (!(g2 > 0.0)) break;
        x -= (j.value / g2) * j.grad;
    }
    if (std::abs(domain.psi(x)) > 1e-10) {
        throw Error(ErrorCode::IllFormedDomain, "Newton projection failed from " + format_vec(x0));
    }
    return x;
}

std::vector<Vec> sample_boundary(const Domain& domain, std::size_t n, std::mt19937_64& rng) {
    auto interior = sample_interior(domain, n, rng);
    std::vector<Vec> out;
    out.reserve(n);
    const Box box = domain.bounding_box();
    const double span = (box.hi - box.lo).norm();
    for (Vec& x : interior) {
        // Walk outward along the gradient ray until psi changes sign, then refine.
        const PsiJet j = domain.psi_jet(x);
        Vec dir = -j.grad;
        if (dir.norm() < 1e-12) dir = Vec::Unit(domain.dim(), 0);
        dir.normalize();
        const Vec far = x + 2.0 * span * dir;
        const double theta = bisect_level([&](double s) { return domain.psi(x + s * (far - x)); }, 0.0, 1e-13);
        out.push_back(project_to_boundary(domain, x + theta * (far - x)));
    }
    return out;
}

double bisect_level(const std::function<double(double)>& psi_along, double level, double tol) {
    double lo = 0.0;
    double hi = 1.0;
    const double f_lo = psi_along(lo) - level;
    double mid = 1.0;
    if (std::abs(psi_along(hi) - level) <= tol) return hi;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double f_mid = psi_along(mid) - level;
        if (std::abs(f_mid) <= tol) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-17) break;
    }
    return mid;
}

}  // namespace qdlab
