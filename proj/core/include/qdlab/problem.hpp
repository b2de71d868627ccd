#pragma once

#include "qdlab/domain.hpp"
#include "qdlab/types.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace qdlab {

/// Coefficients of one control at one point together with spatial derivatives up to `order`.
///
/// Derivative arrays are indexed by coordinate: dsigma[i] is the partial of sigma in x_i and
/// d2sigma[i][j] the mixed second partial. Only entries below dim are meaningful.
struct CoefficientJet {
    int order = 0;
    Mat sigma;
    Vec b;
    double c = 0.0;
    double f = 0.0;

    std::array<Mat, kMaxDim> dsigma;
    std::array<Vec, kMaxDim> db;
    Vec dc;
    Vec df;

    std::array<std::array<Mat, kMaxDim>, kMaxDim> d2sigma;
    std::array<std::array<Vec, kMaxDim>, kMaxDim> d2b;
    Mat d2c;
    Mat d2f;

    /// Prepares zeroed storage for a d x d1 problem at the given derivative order.
    void reset(int d, int d1, int order);

    [[nodiscard]] Mat sigma_dir(const Vec& v) const;
    [[nodiscard]] Mat sigma_dir2(const Vec& u, const Vec& v) const;
    [[nodiscard]] Vec b_dir(const Vec& v) const;
    [[nodiscard]] Vec b_dir2(const Vec& u, const Vec& v) const;
    [[nodiscard]] double c_dir(const Vec& v) const { return dc.dot(v); }
    [[nodiscard]] double c_dir2(const Vec& u, const Vec& v) const { return u.dot(d2c * v); }
    [[nodiscard]] double f_dir(const Vec& v) const { return df.dot(v); }
    [[nodiscard]] double f_dir2(const Vec& u, const Vec& v) const { return u.dot(d2f * v); }
    [[nodiscard]] Mat diffusion() const { return 0.5 * sigma * sigma.transpose(); }
};

/// Scalar function with gradient and Hessian at one point.
struct ScalarJet {
    double value = 0.0;
    Vec grad;
    Mat hess;
};

using ClosedForm = std::function<ScalarJet(const Vec&)>;

/// Source of coefficients sigma, b, c, f and boundary data g for a finite control set.
class CoefficientModel {
public:
    virtual ~CoefficientModel() = default;
    [[nodiscard]] virtual int dim() const = 0;
    [[nodiscard]] virtual int noise_dim() const = 0;
    [[nodiscard]] virtual std::size_t num_controls() const = 0;
    virtual void eval(std::size_t control, const Vec& x, int order, CoefficientJet& out) const = 0;
    [[nodiscard]] virtual ScalarJet boundary(const Vec& x, int order) const = 0;
};

/// Model assembled from callables, convenient for closed-form problems.
class LambdaModel final : public CoefficientModel {
public:
    using EvalFn = std::function<void(std::size_t, const Vec&, int, CoefficientJet&)>;
    using BoundaryFn = std::function<ScalarJet(const Vec&, int)>;

    LambdaModel(int d, int d1, std::size_t n_controls, EvalFn eval, BoundaryFn boundary)
        : d_(d), d1_(d1), n_(n_controls), eval_(std::move(eval)), boundary_(std::move(boundary)) {}

    int dim() const override { return d_; }
    int noise_dim() const override { return d1_; }
    std::size_t num_controls() const override { return n_; }
    void eval(std::size_t control, const Vec& x, int order, CoefficientJet& out) const override {
        out.reset(d_, d1_, order);
        eval_(control, x, order, out);
    }
    ScalarJet boundary(const Vec& x, int order) const override { return boundary_(x, order); }

private:
    int d_;
    int d1_;
    std::size_t n_;
    EvalFn eval_;
    BoundaryFn boundary_;
};

/// Controlled diffusion problem: finite control labels, coefficients, boundary payoff and constant K0.
class ControlProblem {
public:
    ControlProblem() = default;
    ControlProblem(std::string name, std::shared_ptr<const CoefficientModel> model, std::vector<std::string> labels,
                   double k0);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] int dim() const { return model_->dim(); }
    [[nodiscard]] int noise_dim() const { return model_->noise_dim(); }
    [[nodiscard]] std::size_t num_controls() const noexcept { return labels_.size(); }
    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] const std::string& label(std::size_t control) const { return labels_.at(control); }
    [[nodiscard]] std::size_t control_index(const std::string& label) const;
    [[nodiscard]] double k0() const noexcept { return k0_; }
    /// Constant added to the discount rate by normalize_discount.
    [[nodiscard]] double discount_shift() const noexcept { return shift_; }
    [[nodiscard]] const std::shared_ptr<const CoefficientModel>& model() const noexcept { return model_; }
    [[nodiscard]] bool valid() const noexcept { return static_cast<bool>(model_); }

    void coefficients(std::size_t control, const Vec& x, int order, CoefficientJet& out) const;
    [[nodiscard]] CoefficientJet coefficients(std::size_t control, const Vec& x, int order) const;
    [[nodiscard]] ScalarJet g(const Vec& x, int order = 0) const { return model_->boundary(x, order); }
    [[nodiscard]] Mat diffusion(std::size_t control, const Vec& x) const;

    [[nodiscard]] ControlProblem with_shift(double shift) const;
    [[nodiscard]] ControlProblem with_k0(double k0) const;
    /// Same problem with controls reordered: new control i is old control order[i].
    [[nodiscard]] ControlProblem relabeled(const std::vector<std::size_t>& order) const;

private:
    std::string name_;
    std::shared_ptr<const CoefficientModel> model_;
    std::vector<std::string> labels_;
    double k0_ = 1.0;
    double shift_ = 0.0;
};

/// Replaces c by c + 1 so that c >= 1. The shift is recorded; invert_discount removes it.
[[nodiscard]] ControlProblem normalize_discount(const ControlProblem& problem);
[[nodiscard]] ControlProblem invert_discount(const ControlProblem& problem);

/// Rigid rotation: coefficients of the image process R x under the same driving noise.
[[nodiscard]] ControlProblem rotated(const ControlProblem& problem, const Mat& rotation);

/// Auxiliary fields rho, Q, M entering the interior construction.
struct InteriorCondition {
    std::function<Vec(std::size_t, const Vec&)> rho;
    /// Skew d1 x d1 matrix, linear in its last argument.
    std::function<Mat(std::size_t, const Vec&, const Vec&)> q;
    std::function<double(std::size_t, const Vec&)> m;
    std::string name = "zero";

    static InteriorCondition zero(int d, int d1);
    /// Constant fields; q_basis[i] is the skew matrix multiplying y_i.
    static InteriorCondition constant(const Vec& rho, double m, std::vector<Mat> q_basis, int d1);
};

/// Sampled proxy for K0: max over controls and entries of the C^2 norms plus the psi norm up to order 3.
[[nodiscard]] double sampled_k0(const ControlProblem& problem, const Domain& domain, std::size_t n_samples = 2000,
                                std::uint64_t seed = 11);

}  // namespace qdlab
