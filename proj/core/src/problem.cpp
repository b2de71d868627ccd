#include "qdlab/problem.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace qdlab {

void CoefficientJet::reset(int d, int d1, int ord) {
    order = ord;
    sigma.setZero(d, d1);
    b.setZero(d);
    c = 0.0;
    f = 0.0;
    if (ord >= 1) {
        for (int i = 0; i < d; ++i) {
            dsigma[i].setZero(d, d1);
            db[i].setZero(d);
        }
        dc.setZero(d);
        df.setZero(d);
    }
    if (ord >= 2) {
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                d2sigma[i][j].setZero(d, d1);
                d2b[i][j].setZero(d);
            }
        }
        d2c.setZero(d, d);
        d2f.setZero(d, d);
    }
}

Mat CoefficientJet::sigma_dir(const Vec& v) const {
    Mat out = Mat::Zero(sigma.rows(), sigma.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) out += v[i] * dsigma[i];
    return out;
}

Mat CoefficientJet::sigma_dir2(const Vec& u, const Vec& v) const {
    Mat out = Mat::Zero(sigma.rows(), sigma.cols());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        for (Eigen::Index j = 0; j < v.size(); ++j) out += (u[i] * v[j]) * d2sigma[i][j];
    }
    return out;
}

Vec CoefficientJet::b_dir(const Vec& v) const {
    Vec out = Vec::Zero(b.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out += v[i] * db[i];
    return out;
}

Vec CoefficientJet::b_dir2(const Vec& u, const Vec& v) const {
    Vec out = Vec::Zero(b.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        for (Eigen::Index j = 0; j < v.size(); ++j) out += (u[i] * v[j]) * d2b[i][j];
    }
    return out;
}

ControlProblem::ControlProblem(std::string name, std::shared_ptr<const CoefficientModel> model,
                               std::vector<std::string> labels, double k0)
    : name_(std::move(name)), model_(std::move(model)), labels_(std::move(labels)), k0_(k0) {
    if (!model_) throw Error(ErrorCode::InvalidArgument, "null coefficient model");
    if (labels_.empty() || labels_.size() != model_->num_controls()) {
        throw Error(ErrorCode::InvalidArgument, "control labels must be non-empty and match the model");
    }
    if (model_->dim() < 1 || model_->dim() > kMaxDim || model_->noise_dim() < 1 || model_->noise_dim() > kMaxDim) {
        throw Error(ErrorCode::InvalidArgument, "dimensions must lie in [1, 4]");
    }
    if (!(k0_ >= 1.0)) throw Error(ErrorCode::InvalidArgument, "K0 must be at least 1");
}

std::size_t ControlProblem::control_index(const std::string& label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw Error(ErrorCode::InvalidArgument, "unknown control label '" + label + "'");
    return static_cast<std::size_t>(it - labels_.begin());
}

void ControlProblem::coefficients(std::size_t control, const Vec& x, int order, CoefficientJet& out) const {
    model_->eval(control, x, order, out);
    out.c += shift_;
}

CoefficientJet ControlProblem::coefficients(std::size_t control, const Vec& x, int order) const {
    CoefficientJet jet;
    coefficients(control, x, order, jet);
    return jet;
}

Mat ControlProblem::diffusion(std::size_t control, const Vec& x) const {
    CoefficientJet jet;
    coefficients(control, x, 0, jet);
    return jet.diffusion();
}

ControlProblem ControlProblem::with_shift(double shift) const {
    ControlProblem p = *this;
    p.shift_ = shift;
    return p;
}

ControlProblem ControlProblem::with_k0(double k0) const {
    ControlProblem p = *this;
    if (!(k0 >= 1.0)) throw Error(ErrorCode::InvalidArgument, "K0 must be at least 1");
    p.k0_ = k0;
    return p;
}

namespace {

class RelabeledModel final : public CoefficientModel {
public:
    RelabeledModel(std::shared_ptr<const CoefficientModel> base, std::vector<std::size_t> order)
        : base_(std::move(base)), order_(std::move(order)) {}
    int dim() const override { return base_->dim(); }
    int noise_dim() const override { return base_->noise_dim(); }
    std::size_t num_controls() const override { return order_.size(); }
    void eval(std::size_t control, const Vec& x, int order, CoefficientJet& out) const override {
        base_->eval(order_.at(control), x, order, out);
    }
    ScalarJet boundary(const Vec& x, int order) const override { return base_->boundary(x, order); }

private:
    std::shared_ptr<const CoefficientModel> base_;
    std::vector<std::size_t> order_;
};

class RotatedModel final : public CoefficientModel {
public:
    RotatedModel(std::shared_ptr<const CoefficientModel> base, Mat rotation)
        : base_(std::move(base)), r_(std::move(rotation)) {}
    int dim() const override { return base_->dim(); }
    int noise_dim() const override { return base_->noise_dim(); }
    std::size_t num_controls() const override { return base_->num_controls(); }

    void eval(std::size_t control, const Vec& xr, int order, CoefficientJet& out) const override {
        const int d = dim();
        const Vec x = r_.transpose() * xr;
        CoefficientJet base;
        base_->eval(control, x, order, base);
        out.reset(d, noise_dim(), order);
        out.sigma = r_ * base.sigma;
        out.b = r_ * base.b;
        out.c = base.c;
        out.f = base.f;
        if (order >= 1) {
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    out.dsigma[i] += r_(i, j) * (r_ * base.dsigma[j]);
                    out.db[i] += r_(i, j) * (r_ * base.db[j]);
                }
            }
            out.dc = r_ * base.dc;
            out.df = r_ * base.df;
        }
        if (order >= 2) {
            for (int i = 0; i < d; ++i) {
                for (int k = 0; k < d; ++k) {
                    for (int j = 0; j < d; ++j) {
                        for (int l = 0; l < d; ++l) {
                            const double w = r_(i, j) * r_(k, l);
                            out.d2sigma[i][k] += w * (r_ * base.d2sigma[j][l]);
                            out.d2b[i][k] += w * (r_ * base.d2b[j][l]);
                        }
                    }
                }
            }
            out.d2c = r_ * base.d2c * r_.transpose();
            out.d2f = r_ * base.d2f * r_.transpose();
        }
    }

    ScalarJet boundary(const Vec& xr, int order) const override {
        ScalarJet g = base_->boundary(r_.transpose() * xr, order);
        if (order >= 1) g.grad = r_ * g.grad;
        if (order >= 2) g.hess = r_ * g.hess * r_.transpose();
        return g;
    }

private:
    std::shared_ptr<const CoefficientModel> base_;
    Mat r_;
};

}  // namespace

ControlProblem ControlProblem::relabeled(const std::vector<std::size_t>& order) const {
    if (order.size() != labels_.size()) throw Error(ErrorCode::InvalidArgument, "relabeling must be a permutation");
    std::vector<std::string> labels;
    for (std::size_t i : order) labels.push_back(labels_.at(i));
    ControlProblem p(name_, std::make_shared<RelabeledModel>(model_, order), labels, k0_);
    p.shift_ = shift_;
    return p;
}

ControlProblem normalize_discount(const ControlProblem& problem) {
    return problem.with_shift(problem.discount_shift() + 1.0);
}

ControlProblem invert_discount(const ControlProblem& problem) {
    return problem.with_shift(problem.discount_shift() - 1.0);
}

ControlProblem rotated(const ControlProblem& problem, const Mat& rotation) {
    const int d = problem.dim();
    if (rotation.rows() != d || rotation.cols() != d ||
        !(rotation * rotation.transpose()).isApprox(Mat::Identity(d, d), 1e-12)) {
        throw Error(ErrorCode::InvalidArgument, "rotation must be an orthogonal d x d matrix");
    }
    ControlProblem p(problem.name() + "-rotated", std::make_shared<RotatedModel>(problem.model(), rotation),
                     problem.labels(), problem.k0());
    return p.with_shift(problem.discount_shift());
}

InteriorCondition InteriorCondition::zero(int d, int d1) {
    InteriorCondition ic;
    ic.rho = [d](std::size_t, const Vec&) { return Vec::Zero(d); };
    ic.q = [d1](std::size_t, const Vec&, const Vec&) { return Mat::Zero(d1, d1); };
    ic.m = [](std::size_t, const Vec&) { return 0.0; };
    ic.name = "zero";
    return ic;
}

InteriorCondition InteriorCondition::constant(const Vec& rho, double m, std::vector<Mat> q_basis, int d1) {
    for (const Mat& q : q_basis) {
        if (q.rows() != d1 || q.cols() != d1 || (q + q.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
            throw Error(ErrorCode::NonSkewInput, "Q basis matrices must be skew d1 x d1");
        }
    }
    if (!q_basis.empty() && static_cast<Eigen::Index>(q_basis.size()) != rho.size()) {
        throw Error(ErrorCode::InvalidArgument, "Q basis needs one matrix per state coordinate");
    }
    InteriorCondition ic;
    ic.rho = [rho](std::size_t, const Vec&) { return rho; };
    ic.m = [m](std::size_t, const Vec&) { return m; };
    ic.q = [basis = std::move(q_basis), d1](std::size_t, const Vec&, const Vec& y) {
        Mat out = Mat::Zero(d1, d1);
        for (std::size_t i = 0; i < basis.size(); ++i) out += y[static_cast<Eigen::Index>(i)] * basis[i];
        return out;
    };
    ic.name = "constant";
    return ic;
}

double sampled_k0(const ControlProblem& problem, const Domain& domain, std::size_t n_samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto points = sample_interior(domain, n_samples, rng);
    const int d = problem.dim();
    const int d1 = problem.noise_dim();
    // Per-entry sup norms of the value, first and second derivatives.
    Mat sig0 = Mat::Zero(d, d1), sig1 = Mat::Zero(d, d1), sig2 = Mat::Zero(d, d1);
    Vec b0 = Vec::Zero(d), b1 = Vec::Zero(d), b2 = Vec::Zero(d);
    double c0 = 0, c1 = 0, c2 = 0, p0 = 0, p1 = 0, p2 = 0, p3 = 0;
    CoefficientJet jet;
    for (const Vec& x : points) {
        for (std::size_t a = 0; a < problem.num_controls(); ++a) {
            problem.coefficients(a, x, 2, jet);
            sig0 = sig0.cwiseMax(jet.sigma.cwiseAbs());
            b0 = b0.cwiseMax(jet.b.cwiseAbs());
            c0 = std::max(c0, std::abs(jet.c));
            for (int i = 0; i < d; ++i) {
                sig1 = sig1.cwiseMax(jet.dsigma[i].cwiseAbs());
                b1 = b1.cwiseMax(jet.db[i].cwiseAbs());
                for (int j = 0; j < d; ++j) {
                    sig2 = sig2.cwiseMax(jet.d2sigma[i][j].cwiseAbs());
                    b2 = b2.cwiseMax(jet.d2b[i][j].cwiseAbs());
                }
            }
            c1 = std::max(c1, jet.dc.cwiseAbs().maxCoeff());
            c2 = std::max(c2, jet.d2c.cwiseAbs().maxCoeff());
        }
        const PsiJet pj = domain.psi_jet(x);
        p0 = std::max(p0, std::abs(pj.value));
        p1 = std::max(p1, pj.grad.cwiseAbs().maxCoeff());
        p2 = std::max(p2, pj.hess.cwiseAbs().maxCoeff());
        if (auto t = domain.psi_third(x)) {
            for (int i = 0; i < d; ++i) p3 = std::max(p3, (*t)[i].cwiseAbs().maxCoeff());
        }
    }
    const double sigma_norm = (sig0 + sig1 + sig2).maxCoeff();
    const double b_norm = (b0 + b1 + b2).maxCoeff();
    return std::max(1.0, sigma_norm + b_norm + (c0 + c1 + c2) + (p0 + p1 + p2 + p3));
}

}  // namespace qdlab
