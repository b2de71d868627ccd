#include "qdlab/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace qdlab {

namespace {

using DynMat = Eigen::MatrixXd;
using DynVec = Eigen::VectorXd;

/// Orthonormal basis of the complement of xi, as columns.
DynMat complement_basis(const Vec& xi) {
    const Eigen::Index d = xi.size();
    const DynVec u = xi.cast<double>() / xi.norm();
    // Householder reflection mapping e_0 to u; its remaining columns span u's complement.
    DynVec v = DynVec::Unit(d, 0) - u;
    DynMat h = DynMat::Identity(d, d);
    if (v.norm() > 1e-14) {
        v.normalize();
        h -= 2.0 * v * v.transpose();
    }
    return h.rightCols(d - 1);
}

/// Minimum of (B z, z) over the affine set z = z0 + U w for positive semidefinite B.
double affine_quadratic_min(const DynMat& b, const DynVec& z0, const DynMat& u) {
    const DynMat h = u.transpose() * b * u;
    const DynVec g = u.transpose() * b * z0;
    const double base = z0.dot(b * z0);
    if (h.size() == 0) return base;
    Eigen::SelfAdjointEigenSolver<DynMat> es(h);
    const double cutoff = 1e-13 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    double reduction = 0.0;
    for (Eigen::Index k = 0; k < h.rows(); ++k) {
        const double lam = es.eigenvalues()[k];
        if (lam > cutoff) {
            const double proj = es.eigenvectors().col(k).dot(g);
            reduction += proj * proj / lam;
        }
    }
    return std::max(0.0, base - reduction);
}

/// Smoothed max t log sum exp(q / t) of convex quadratics in w, minimized by damped Newton over a
/// decreasing temperature schedule. Returns the unsmoothed max at the final iterate.
double minimize_max_quadratics(const std::vector<DynMat>& hs, const std::vector<DynVec>& gs,
                               const std::vector<double>& cs) {
    const Eigen::Index m = hs.front().rows();
    const std::size_t n = hs.size();
    auto q_value = [&](std::size_t a, const DynVec& w) { return w.dot(hs[a] * w) + 2.0 * gs[a].dot(w) + cs[a]; };
    auto true_max = [&](const DynVec& w) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n; ++a) best = std::max(best, q_value(a, w));
        return best;
    };
    auto smoothed = [&](const DynVec& w, double t) {
        double mx = true_max(w);
        double s = 0.0;
        for (std::size_t a = 0; a < n; ++a) s += std::exp((q_value(a, w) - mx) / t);
        return mx + t * std::log(s);
    };

    DynVec w = DynVec::Zero(m);
    const double scale = std::max(true_max(w), 1e-300);
    double best_value = true_max(w);
    DynVec best_w = w;
    for (double t = 0.1 * scale; t > 1e-14 * scale; t *= 0.2) {
        for (int it = 0; it < 100; ++it) {
            std::vector<double> q(n);
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < n; ++a) mx = std::max(mx, q[a] = q_value(a, w));
            std::vector<double> p(n);
            double z = 0.0;
            for (std::size_t a = 0; a < n; ++a) z += p[a] = std::exp((q[a] - mx) / t);
            DynVec grad = DynVec::Zero(m);
            DynMat hess = DynMat::Zero(m, m);
            DynVec gbar = DynVec::Zero(m);
            std::vector<DynVec> ga(n);
            for (std::size_t a = 0; a < n; ++a) {
                p[a] /= z;
                ga[a] = 2.0 * (hs[a] * w + gs[a]);
                gbar += p[a] * ga[a];
                hess += p[a] * 2.0 * hs[a];
            }
            for (std::size_t a = 0; a < n; ++a) hess += (p[a] / t) * (ga[a] - gbar) * (ga[a] - gbar).transpose();
            grad = gbar;
            if (grad.norm() <= 1e-15 * scale) break;
            const double f0 = smoothed(w, t);
            double damping = 1e-12 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
            bool moved = false;
            for (int ls = 0; ls < 60 && !moved; ++ls) {
                const DynVec step = (hess + damping * DynMat::Identity(m, m)).ldlt().solve(-grad);
                const DynVec trial = w + step;
                if (smoothed(trial, t) < f0) {
                    w = trial;
                    moved = true;
                } else {
                    damping = std::max(damping * 10.0, 1e-16);
                }
            }
            if (!moved) break;
        }
        const double v = true_max(w);
        if (v < best_value) {
            best_value = v;
            best_w = w;
        }
    }
    return best_value;
}

std::vector<Mat> problem_diffusions(const ControlProblem& problem, const Vec& x) {
    std::vector<Mat> out;
    out.reserve(problem.num_controls());
    for (std::size_t a = 0; a < problem.num_controls(); ++a) out.push_back(problem.diffusion(a, x));
    return out;
}

double sphere_max(std::span<const Mat> as, const Vec& z) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Mat& a : as) best = std::max(best, z.dot(a * z));
    return best;
}

}  // namespace

double mu_directional(std::span<const Mat> diffusions, const Vec& xi) {
    if (diffusions.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one diffusion matrix");
    const double norm = xi.norm();
    if (!(norm > 0.0) || !xi.allFinite()) throw Error(ErrorCode::InvalidArgument, "direction must be non-zero");
    const Eigen::Index d = xi.size();
    if (d == 1) {
        double best = -std::numeric_limits<double>::infinity();
        for (const Mat& a : diffusions) best = std::max(best, a(0, 0) / (xi[0] * xi[0]));
        return best;
    }
    const DynVec z0 = xi.cast<double>() / (norm * norm);
    const DynMat u = complement_basis(xi);
    if (diffusions.size() == 1) return affine_quadratic_min(diffusions.front(), z0, u);
    std::vector<DynMat> hs;
    std::vector<DynVec> gs;
    std::vector<double> cs;
    for (const Mat& a : diffusions) {
        const DynMat ad = a;
        hs.push_back(u.transpose() * ad * u);
        gs.push_back(u.transpose() * ad * z0);
        cs.push_back(z0.dot(ad * z0));
    }
    return minimize_max_quadratics(hs, gs, cs);
}

double mu_minimal(std::span<const Mat> diffusions) {
    if (diffusions.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one diffusion matrix");
    const Eigen::Index d = diffusions.front().rows();
    if (diffusions.size() == 1) {
        Eigen::SelfAdjointEigenSolver<DynMat> es(DynMat(diffusions.front()));
        return std::max(0.0, es.eigenvalues().minCoeff());
    }
    if (d == 1) return sphere_max(diffusions, Vec::Ones(1));
    if (d == 2) {
        auto at = [&](double th) {
            Vec z(2);
            z << std::cos(th), std::sin(th);
            return sphere_max(diffusions, z);
        };
        constexpr int kGrid = 4096;
        const double step = std::numbers::pi / kGrid;
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < kGrid; ++k) {
            const double v = at(k * step);
            if (v < best) best = v;
        }
        // Golden-section refinement around every grid cell that is a local minimum.
        for (int k = 0; k < kGrid; ++k) {
            const double v = at(k * step);
            if (v > at((k - 1) * step) || v > at((k + 1) * step)) continue;
            double lo = (k - 1) * step;
            double hi = (k + 1) * step;
            const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
            for (int it = 0; it < 100; ++it) {
                const double a = hi - gr * (hi - lo);
                const double b = lo + gr * (hi - lo);
                if (at(a) < at(b)) hi = b; else lo = a;
            }
            best = std::min(best, at(0.5 * (lo + hi)));
        }
        return std::max(0.0, best);
    }
    // Higher dimensions: random multistart with projected descent on the sphere.
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    double best = std::numeric_limits<double>::infinity();
    for (int start = 0; start < 400; ++start) {
        Vec z(d);
        for (Eigen::Index i = 0; i < d; ++i) z[i] = normal(rng);
        z.normalize();
        double step = 0.1;
        double current = sphere_max(diffusions, z);
        for (int it = 0; it < 2000 && step > 1e-14; ++it) {
            std::size_t arg = 0;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < diffusions.size(); ++a) {
                const double v = z.dot(diffusions[a] * z);
                if (v > mx) { mx = v; arg = a; }
            }
            Vec g = 2.0 * (diffusions[arg] * z);
            g -= g.dot(z) * z;
            Vec trial = z - step * g;
            trial.normalize();
            const double tv = sphere_max(diffusions, trial);
            if (tv < current) { z = trial; current = tv; step *= 1.2; } else { step *= 0.5; }
        }
        best = std::min(best, current);
    }
    return std::max(0.0, best);
}

double mu(const ControlProblem& problem, const Vec& x, const Vec& xi) {
    const auto as = problem_diffusions(problem, x);
    return mu_directional(as, xi);
}

double mu_min(const ControlProblem& problem, const Vec& x) {
    const auto as = problem_diffusions(problem, x);
    return mu_minimal(as);
}

NondegeneracyReport check_nondegeneracy_normal(const ControlProblem& problem, const Domain& domain,
                                               std::size_t n_samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vec> points = sample_boundary(domain, n_samples, rng);
    const Box box = domain.bounding_box();
    const Vec center = 0.5 * (box.lo + box.hi);
    const double span = (box.hi - box.lo).norm();
    auto ray_hit = [&](const Vec& dir) {
        const Vec far = center + 2.0 * span * dir;
        const double th = bisect_level([&](double s) { return domain.psi(center + s * (far - center)); }, 0.0, 1e-13);
        return project_to_boundary(domain, center + th * (far - center));
    };
    // Deterministic sweep of boundary directions so axis-aligned extremes are always present.
    if (domain.contains(center)) {
        if (domain.dim() == 1) {
            points.push_back(ray_hit(Vec::Constant(1, 1.0)));
            points.push_back(ray_hit(Vec::Constant(1, -1.0)));
        } else if (domain.dim() == 2) {
            for (int k = 0; k < 360; ++k) {
                Vec dir(2);
                const double th = 2.0 * std::numbers::pi * k / 360.0;
                dir << std::cos(th), std::sin(th);
                points.push_back(ray_hit(dir));
            }
        } else {
            for (int i = 0; i < domain.dim(); ++i) {
                points.push_back(ray_hit(Vec::Unit(domain.dim(), i)));
                points.push_back(ray_hit(-Vec::Unit(domain.dim(), i)));
            }
        }
    }
    NondegeneracyReport rep;
    rep.delta0 = std::numeric_limits<double>::infinity();
    rep.n_points = points.size();
    for (const Vec& x : points) {
        const Vec n = domain.outward_normal(x);
        for (std::size_t a = 0; a < problem.num_controls(); ++a) {
            const double v = n.dot(problem.diffusion(a, x) * n);
            if (v < rep.delta0) {
                rep.delta0 = v;
                rep.witness = x;
                rep.witness_control = a;
            }
        }
    }
    rep.delta0 = std::max(0.0, rep.delta0);
    return rep;
}

double interior_slack(const CoefficientJet& jet, const Vec& rho, const Mat& q, double m, const Vec& y) {
    const double ry = rho.dot(y);
    const Mat mixed = jet.sigma_dir(y) + ry * jet.sigma + jet.sigma * q;
    const Vec drift = jet.b_dir(y) + 2.0 * ry * jet.b;
    return jet.c + m * y.dot(jet.diffusion() * y) - mixed.squaredNorm() - 2.0 * y.dot(drift);
}

InteriorConditionReport check_interior_condition(const ControlProblem& problem, const InteriorCondition& condition,
                                                 const Domain& domain, const Levels& levels, std::size_t n_samples,
                                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int d = problem.dim();
    std::vector<Vec> pts;
    for (const Vec& x : sample_interior(domain, 4 * n_samples, rng)) {
        if (domain.psi(x) > levels.lambda()) pts.push_back(x);
        if (pts.size() >= n_samples) break;
    }
    std::normal_distribution<double> normal;
    InteriorConditionReport rep;
    rep.min_slack = std::numeric_limits<double>::infinity();
    rep.n_points = pts.size();
    CoefficientJet jet;
    for (const Vec& x : pts) {
        std::vector<Vec> dirs;
        for (int i = 0; i < d; ++i) dirs.push_back(Vec::Unit(d, i));
        for (int k = 0; k < 4; ++k) {
            Vec y(d);
            for (int i = 0; i < d; ++i) y[i] = normal(rng);
            dirs.push_back(y.normalized());
        }
        for (std::size_t a = 0; a < problem.num_controls(); ++a) {
            problem.coefficients(a, x, 1, jet);
            const Vec rho = condition.rho(a, x);
            const double m = condition.m(a, x);
            for (const Vec& y : dirs) {
                const double s = interior_slack(jet, rho, condition.q(a, x, y), m, y);
                if (s < rep.min_slack) {
                    rep.min_slack = s;
                    rep.witness_x = x;
                    rep.witness_y = y;
                    rep.witness_control = a;
                }
            }
        }
    }
    return rep;
}

void validate_interior_condition(const ControlProblem& problem, const InteriorCondition& condition,
                                 const Domain& domain, std::size_t n_samples, std::uint64_t seed) {
    if (!condition.rho || !condition.q || !condition.m) {
        throw Error(ErrorCode::InvalidArgument, "interior condition needs rho, Q and M");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const int d = problem.dim();
    for (const Vec& x : sample_interior(domain, n_samples, rng)) {
        Vec y1(d), y2(d);
        for (int i = 0; i < d; ++i) {
            y1[i] = normal(rng);
            y2[i] = normal(rng);
        }
        for (std::size_t a = 0; a < problem.num_controls(); ++a) {
            const Mat q1 = condition.q(a, x, y1);
            const Mat q2 = condition.q(a, x, y2);
            const Mat q12 = condition.q(a, x, Vec(2.0 * y1 - 3.0 * y2));
            const double scale = 1.0 + q1.cwiseAbs().maxCoeff() + q2.cwiseAbs().maxCoeff();
            if ((q1 + q1.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
                throw Error(ErrorCode::NonSkewInput, "Q is not skew at " + format_vec(x));
            }
            if ((q12 - 2.0 * q1 + 3.0 * q2).cwiseAbs().maxCoeff() > 1e-9 * scale) {
                throw Error(ErrorCode::InvalidArgument, "Q is not linear in its direction at " + format_vec(x));
            }
            if (!condition.rho(a, x).allFinite() || !std::isfinite(condition.m(a, x))) {
                throw Error(ErrorCode::InvalidArgument, "non-finite rho or M at " + format_vec(x));
            }
        }
    }
}

}  // namespace qdlab
