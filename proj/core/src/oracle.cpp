#include "qdlab/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace qdlab {

namespace {

constexpr double kInsideEps = 1e-12;

struct Entry {
    std::int64_t node;  ///< -1 for a boundary crossing with value g
    double weight;
    double g;
};

struct Stencil {
    std::vector<Entry> entries;
    double c = 0.0;
    double f = 0.0;
};

struct Offset {
    int di;
    int dj;
};

const std::array<Offset, 8> kWideDirections{
    {{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}, {2, -1}, {1, 2}, {1, -2}}};

bool on_grid(const GridSolution& s, int i, int j) {
    return i >= 0 && i < s.counts[0] && j >= 0 && j < s.counts[1];
}

std::array<int, 2> split(const GridSolution& s, std::size_t k) {
    return {static_cast<int>(k % static_cast<std::size_t>(s.counts[0])),
            static_cast<int>(k / static_cast<std::size_t>(s.counts[0]))};
}

/// Neighbor of node p at offset (di, dj): the node itself if inside D, otherwise the crossing with the boundary.
struct Neighbor {
    double theta;
    std::int64_t node;
    double g;
};

Neighbor neighbor(const ControlProblem& problem, const Domain& domain, const GridSolution& s, std::size_t p, int di,
                  int dj) {
    const auto [i, j] = split(s, p);
    const int qi = i + di;
    const int qj = j + dj;
    if (on_grid(s, qi, qj) && s.inside[s.index(qi, qj)]) {
        return {1.0, static_cast<std::int64_t>(s.index(qi, qj)), 0.0};
    }
    const Vec xp = s.node(p);
    Vec step = Vec::Zero(s.dim);
    step[0] = di * s.h;
    if (s.dim == 2) step[1] = dj * s.h;
    if (domain.psi(xp + step) > kInsideEps) {
        throw Error(ErrorCode::InvalidArgument, "bounding box does not contain the domain near " + format_vec(xp));
    }
    const double theta = bisect_level([&](double t) { return domain.psi(xp + t * step) - kInsideEps; }, 0.0, 1e-15);
    const double th = std::max(theta, 1e-9);
    return {th, -1, problem.g(xp + th * step).value};
}

void add_second_difference(const ControlProblem& problem, const Domain& domain, const GridSolution& s, std::size_t p,
                           Offset e, double weight, Stencil& st) {
    if (!(weight > 0.0)) return;
    const Neighbor plus = neighbor(problem, domain, s, p, e.di, e.dj);
    const Neighbor minus = neighbor(problem, domain, s, p, -e.di, -e.dj);
    const double h2 = s.h * s.h;
    const double sum = plus.theta + minus.theta;
    st.entries.push_back({plus.node, 2.0 * weight / (h2 * plus.theta * sum), plus.g});
    st.entries.push_back({minus.node, 2.0 * weight / (h2 * minus.theta * sum), minus.g});
}

void add_upwind(const ControlProblem& problem, const Domain& domain, const GridSolution& s, std::size_t p, int axis,
                double b, Stencil& st) {
    if (b == 0.0) return;
    const int sign = b > 0.0 ? 1 : -1;
    const Neighbor nb = neighbor(problem, domain, s, p, axis == 0 ? sign : 0, axis == 1 ? sign : 0);
    st.entries.push_back({nb.node, std::abs(b) / (s.h * nb.theta), nb.g});
}

Stencil build_stencil(const ControlProblem& problem, const Domain& domain, const GridSolution& s, std::size_t p,
                      std::size_t control, bool& wide) {
    const Vec x = s.node(p);
    CoefficientJet jet;
    problem.coefficients(control, x, 0, jet);
    const Mat a = jet.diffusion();
    Stencil st;
    st.c = jet.c;
    st.f = jet.f;
    if (s.dim == 1) {
        add_second_difference(problem, domain, s, p, {1, 0}, a(0, 0), st);
    } else {
        const double a12 = 0.5 * (a(0, 1) + a(1, 0));
        const double scale = std::max({std::abs(a(0, 0)), std::abs(a(1, 1)), 1.0});
        if (std::abs(a12) <= std::min(a(0, 0), a(1, 1)) + 1e-14 * scale) {
            const double m = std::abs(a12);
            add_second_difference(problem, domain, s, p, {1, 0}, a(0, 0) - m, st);
            add_second_difference(problem, domain, s, p, {0, 1}, a(1, 1) - m, st);
            add_second_difference(problem, domain, s, p, {1, a12 >= 0.0 ? 1 : -1}, m, st);
        } else {
            wide = true;
            const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()));
            for (int k = 0; k < 2; ++k) {
                const double lam = es.eigenvalues()[k];
                if (!(lam > 0.0)) continue;
                const Vec q = es.eigenvectors().col(k);
                Offset best = kWideDirections[0];
                double best_cos = -1.0;
                for (const Offset& o : kWideDirections) {
                    const double norm = std::hypot(o.di, o.dj);
                    const double cosine = std::abs(q[0] * o.di + q[1] * o.dj) / norm;
                    if (cosine > best_cos + 1e-12) {
                        best_cos = cosine;
                        best = o;
                    }
                }
                add_second_difference(problem, domain, s, p, best, lam / (best.di * best.di + best.dj * best.dj), st);
            }
        }
    }
    for (int k = 0; k < s.dim; ++k) add_upwind(problem, domain, s, p, k, jet.b[k], st);
    return st;
}

double apply(const Stencil& st, const std::vector<double>& v, std::size_t p) {
    double out = st.f - st.c * v[p];
    for (const Entry& e : st.entries) {
        const double other = e.node >= 0 ? v[static_cast<std::size_t>(e.node)] : e.g;
        out += e.weight * (other - v[p]);
    }
    return out;
}

GridSolution empty_grid(const Domain& domain, double h) {
    if (domain.dim() > 2) throw Error(ErrorCode::InvalidArgument, "the grid oracle supports d <= 2");
    if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid spacing must be positive");
    const Box box = domain.bounding_box();
    GridSolution s;
    s.dim = domain.dim();
    s.lo = box.lo;
    s.h = h;
    for (int k = 0; k < s.dim; ++k) {
        const double span = box.hi[k] - box.lo[k];
        s.counts[k] = static_cast<int>(std::ceil(span / h - 1e-9)) + 1;
        if (s.counts[k] < 7) throw Error(ErrorCode::InvalidArgument, "grid spacing leaves fewer than 5 interior nodes");
    }
    const std::size_t n = static_cast<std::size_t>(s.counts[0]) * static_cast<std::size_t>(s.counts[1]);
    s.inside.assign(n, 0);
    s.v.assign(n, 0.0);
    s.policy.assign(n, -1);
    s.residual.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) s.inside[k] = domain.psi(s.node(k)) > kInsideEps;
    return s;
}

Eigen::VectorXd solve_linear(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& rhs,
                             const Eigen::VectorXd& guess, int dim, double tol) {
    if (dim == 2) {
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> it;
        it.setTolerance(tol);
        it.setMaxIterations(2000);
        it.compute(a);
        if (it.info() == Eigen::Success) {
            Eigen::VectorXd x = it.solveWithGuess(rhs, guess);
            if (it.info() == Eigen::Success && (a * x - rhs).norm() <= 10.0 * tol * std::max(1.0, rhs.norm())) return x;
        }
    }
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "singular finite-difference system");
    return lu.solve(rhs);
}

}  // namespace

Vec GridSolution::node(std::size_t k) const {
    Vec x(dim);
    const auto ij = split(*this, k);
    for (int d = 0; d < dim; ++d) x[d] = lo[d] + ij[d] * h;
    return x;
}

std::size_t GridSolution::nearest(const Vec& x) const {
    std::array<int, 2> ij{0, 0};
    for (int d = 0; d < dim; ++d) {
        ij[d] = std::clamp(static_cast<int>(std::lround((x[d] - lo[d]) / h)), 0, counts[d] - 1);
    }
    return index(ij[0], ij[1]);
}

double GridSolution::max_residual() const {
    double m = 0.0;
    for (std::size_t k = 0; k < residual.size(); ++k) {
        if (inside[k]) m = std::max(m, residual[k]);
    }
    return m;
}

GridSolution GridSolution::sample(const Domain& domain, double h, const std::function<double(const Vec&)>& fn) {
    GridSolution s = empty_grid(domain, h);
    for (std::size_t k = 0; k < s.size(); ++k) s.v[k] = fn(s.node(k));
    s.converged = true;
    return s;
}

GridSolution solve_bellman_fd(const ControlProblem& problem, const Domain& domain, double h,
                              const OracleOptions& options) {
    if (problem.dim() != domain.dim()) throw Error(ErrorCode::InvalidArgument, "problem and domain dimensions differ");
    GridSolution s = empty_grid(domain, h);
    s.labels = problem.labels();
    const std::size_t n = s.size();
    const std::size_t na = problem.num_controls();

    std::vector<std::int64_t> unknown(n, -1);
    std::vector<std::size_t> nodes;
    for (std::size_t k = 0; k < n; ++k) {
        if (s.inside[k]) {
            unknown[k] = static_cast<std::int64_t>(nodes.size());
            nodes.push_back(k);
        }
    }
    if (nodes.empty()) throw Error(ErrorCode::InvalidArgument, "no grid nodes inside the domain");

    std::vector<Stencil> stencils(nodes.size() * na);
    for (std::size_t r = 0; r < nodes.size(); ++r) {
        bool wide = false;
        for (std::size_t a = 0; a < na; ++a) stencils[r * na + a] = build_stencil(problem, domain, s, nodes[r], a, wide);
        if (wide) s.wide_nodes.push_back(nodes[r]);
    }

    double g_max = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double g = problem.g(s.node(k)).value;
        if (!s.inside[k]) s.v[k] = g;
        g_max = std::max(g_max, std::abs(g));
    }
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t k : nodes) {
        switch (options.init) {
            case InitialGuess::Zero: s.v[k] = 0.0; break;
            case InitialGuess::BoundaryExtension: s.v[k] = problem.g(s.node(k)).value; break;
            case InitialGuess::Random: s.v[k] = (1.0 + g_max) * unit(rng); break;
        }
    }

    std::vector<int> pol(nodes.size(), -1);
    std::vector<double> res(nodes.size(), 0.0);
    auto improve = [&](const std::vector<int>& current, std::vector<int>& next) {
        double worst = 0.0;
        for (std::size_t r = 0; r < nodes.size(); ++r) {
            int best = current[r];
            double best_val = best >= 0 ? apply(stencils[r * na + static_cast<std::size_t>(best)], s.v, nodes[r])
                                        : -std::numeric_limits<double>::infinity();
            double sup = best_val;
            for (std::size_t a = 0; a < na; ++a) {
                const double val = apply(stencils[r * na + a], s.v, nodes[r]);
                sup = std::max(sup, val);
                if (val > best_val + options.tie_tol) {
                    best_val = val;
                    best = static_cast<int>(a);
                }
            }
            next[r] = best;
            res[r] = std::abs(sup);
            worst = std::max(worst, res[r]);
        }
        return worst;
    };

    std::vector<int> next(nodes.size());
    (void)improve(pol, next);
    pol = next;

    std::set<std::vector<int>> seen;
    std::vector<double> best_v;
    std::vector<int> best_pol;
    double best_res = std::numeric_limits<double>::infinity();
    Eigen::VectorXd guess = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t r = 0; r < nodes.size(); ++r) guess[static_cast<Eigen::Index>(r)] = s.v[nodes[r]];

    for (int it = 1; it <= options.max_iterations; ++it) {
        std::vector<Eigen::Triplet<double>> trip;
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(nodes.size()));
        for (std::size_t r = 0; r < nodes.size(); ++r) {
            const Stencil& st = stencils[r * na + static_cast<std::size_t>(pol[r])];
            double diag = st.c;
            double b = st.f;
            for (const Entry& e : st.entries) {
                diag += e.weight;
                if (e.node >= 0) {
                    trip.emplace_back(static_cast<int>(r), static_cast<int>(unknown[static_cast<std::size_t>(e.node)]),
                                      -e.weight);
                } else {
                    b += e.weight * e.g;
                }
            }
            trip.emplace_back(static_cast<int>(r), static_cast<int>(r), diag);
            rhs[static_cast<Eigen::Index>(r)] = b;
        }
        Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(nodes.size()));
        a.setFromTriplets(trip.begin(), trip.end());
        const Eigen::VectorXd u = solve_linear(a, rhs, guess, s.dim, options.linear_tol);
        guess = u;
        for (std::size_t r = 0; r < nodes.size(); ++r) s.v[nodes[r]] = u[static_cast<Eigen::Index>(r)];

        const double worst = improve(pol, next);
        s.residual_history.push_back(worst);
        s.iterations = it;
        if (worst < best_res) {
            best_res = worst;
            best_v = s.v;
            best_pol = pol;
        }
        if (next == pol) {
            s.converged = worst <= options.tol;
            if (!s.converged) {
                std::ostringstream os;
                os << "policy stable but residual " << worst << " exceeds tolerance " << options.tol;
                s.warning = os.str();
            }
            break;
        }
        seen.insert(pol);
        if (seen.count(next)) {
            s.cycled = true;
            s.warning = "policy cycle detected; keeping the iterate with the smallest residual";
            s.v = best_v;
            pol = best_pol;
            (void)improve(pol, next);
            break;
        }
        pol = next;
        if (it == options.max_iterations) s.warning = "policy iteration hit the iteration cap";
    }
    for (std::size_t r = 0; r < nodes.size(); ++r) {
        s.policy[nodes[r]] = pol[r];
        s.residual[nodes[r]] = res[r];
    }
    return s;
}

double bellman_residual(const ControlProblem& problem, const Domain& domain, const GridSolution& solution,
                        std::span<const Vec> x_set) {
    double worst = 0.0;
    for (const Vec& x : x_set) {
        const std::size_t p = solution.nearest(x);
        if (!solution.inside[p]) throw Error(ErrorCode::InvalidArgument, "residual point " + format_vec(x) + " is off D");
        double sup = -std::numeric_limits<double>::infinity();
        bool wide = false;
        for (std::size_t a = 0; a < problem.num_controls(); ++a) {
            sup = std::max(sup, apply(build_stencil(problem, domain, solution, p, a, wide), solution.v, p));
        }
        worst = std::max(worst, std::abs(sup));
    }
    return worst;
}

double oracle_value(const GridSolution& s, const Vec& x) {
    std::array<int, 2> base{0, 0};
    std::array<std::array<double, 3>, 2> w{};
    w[1] = {0.0, 1.0, 0.0};
    for (int d = 0; d < s.dim; ++d) {
        base[d] = std::clamp(static_cast<int>(std::lround((x[d] - s.lo[d]) / s.h)), 1, s.counts[d] - 2);
        const double t = (x[d] - (s.lo[d] + base[d] * s.h)) / s.h;
        w[d] = {0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)};
    }
    const int span_j = s.dim == 2 ? 1 : 0;
    double out = 0.0;
    for (int b = -span_j; b <= span_j; ++b) {
        for (int a = -1; a <= 1; ++a) {
            const std::size_t k = s.index(base[0] + a, base[1] + b);
            if (!s.inside[k]) {
                throw Error(ErrorCode::OutOfStencil, "interpolation stencil at " + format_vec(x) + " leaves D");
            }
            out += w[0][static_cast<std::size_t>(a + 1)] * w[1][static_cast<std::size_t>(b + 1)] * s.v[k];
        }
    }
    return out;
}

DirectionalJet oracle_derivatives(const GridSolution& s, const Vec& x, const Vec& xi) {
    if (x.size() != s.dim || xi.size() != s.dim) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
    DirectionalJet out;
    out.value = oracle_value(s, x);
    const double norm = xi.norm();
    if (norm == 0.0) return out;
    const Vec u = xi / norm;
    const double fp = oracle_value(s, x + s.h * u);
    const double fm = oracle_value(s, x - s.h * u);
    out.first = (fp - fm) / (2.0 * s.h) * norm;
    out.second = (fp - 2.0 * out.value + fm) / (s.h * s.h) * norm * norm;
    return out;
}

UniquenessReport uniqueness_probe(const ControlProblem& problem, const Domain& domain, double h, double tol,
                                  int n_inits) {
    if (n_inits < 2) throw Error(ErrorCode::InvalidArgument, "uniqueness probe needs at least two initial guesses");
    UniquenessReport out;
    std::vector<GridSolution> sols;
    const std::array<InitialGuess, 3> kinds{InitialGuess::Zero, InitialGuess::BoundaryExtension, InitialGuess::Random};
    for (int k = 0; k < n_inits; ++k) {
        OracleOptions opt;
        opt.tol = tol;
        opt.init = kinds[static_cast<std::size_t>(k) % kinds.size()];
        opt.seed = 17 + static_cast<std::uint64_t>(k);
        sols.push_back(solve_bellman_fd(problem, domain, h, opt));
        out.runs.push_back({opt.init, sols.back().converged, sols.back().iterations, sols.back().max_residual()});
    }
    for (std::size_t a = 0; a < sols.size(); ++a) {
        for (std::size_t b = a + 1; b < sols.size(); ++b) {
            for (std::size_t k = 0; k < sols[a].size(); ++k) {
                out.max_deviation = std::max(out.max_deviation, std::abs(sols[a].v[k] - sols[b].v[k]));
            }
        }
    }
    out.pass = out.max_deviation <= 10.0 * tol &&
               std::all_of(out.runs.begin(), out.runs.end(), [](const UniquenessRun& r) { return r.converged; });
    return out;
}

OracleProvider::OracleProvider(std::shared_ptr<const GridSolution> solution, ControlProblem problem, Domain domain)
    : solution_(std::move(solution)), problem_(std::move(problem)), domain_(std::move(domain)) {
    if (!solution_) throw Error(ErrorCode::InvalidArgument, "oracle provider needs a grid solution");
}

ScalarJet OracleProvider::evaluate(const Vec& x, int order, bool on_boundary) const {
    const GridSolution& s = *solution_;
    const int d = s.dim;
    auto jet_at = [&](const Vec& p) {
        ScalarJet j;
        j.value = oracle_value(s, p);
        j.grad = Vec::Zero(d);
        j.hess = Mat::Zero(d, d);
        if (order >= 1) {
            for (int i = 0; i < d; ++i) {
                const DirectionalJet dj = oracle_derivatives(s, p, Vec::Unit(d, i));
                j.grad[i] = dj.first;
                j.hess(i, i) = dj.second;
            }
        }
        if (order >= 2 && d == 2) {
            const double mixed = oracle_derivatives(s, p, Vec::Ones(2)).second;
            j.hess(0, 1) = j.hess(1, 0) = 0.5 * (mixed - j.hess(0, 0) - j.hess(1, 1));
        }
        return j;
    };
    Vec p = x;
    std::optional<Vec> inward;
    for (int attempt = 0;; ++attempt) {
        try {
            ScalarJet j = jet_at(p);
            const Vec shift = x - p;
            if (shift.norm() > 0.0) {
                j.value += j.grad.dot(shift) + 0.5 * shift.dot(j.hess * shift);
                j.grad += j.hess * shift;
            }
            if (on_boundary) j.value = problem_.g(x).value;
            return j;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::OutOfStencil || attempt >= 64) throw;
        }
        if (!inward) inward = -domain_.outward_normal(x);
        p = x + (attempt + 1) * 0.5 * s.h * *inward;
    }
}

MarkovPolicy grid_policy(std::shared_ptr<const GridSolution> solution) {
    if (!solution) throw Error(ErrorCode::InvalidArgument, "grid policy needs a solution");
    return MarkovPolicy::feedback(
        [solution](const Vec& x) -> std::size_t {
            const GridSolution& s = *solution;
            const std::size_t k = s.nearest(x);
            if (s.policy[k] >= 0) return static_cast<std::size_t>(s.policy[k]);
            const auto [i, j] = split(s, k);
            const int span_j = s.dim == 2 ? 1 : 0;
            for (int b = -span_j; b <= span_j; ++b) {
                for (int a = -1; a <= 1; ++a) {
                    if (on_grid(s, i + a, j + b) && s.policy[s.index(i + a, j + b)] >= 0) {
                        return static_cast<std::size_t>(s.policy[s.index(i + a, j + b)]);
                    }
                }
            }
            return 0;
        },
        "grid_argmax");
}

void write_csv(const GridSolution& s, std::ostream& out) {
    out << (s.dim == 1 ? "x0" : "x0,x1") << ",inside,v,policy,residual\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < s.size(); ++k) {
        const Vec x = s.node(k);
        for (int d = 0; d < s.dim; ++d) out << x[d] << ',';
        out << (s.inside[k] ? 1 : 0) << ',' << s.v[k] << ',';
        if (s.policy[k] >= 0 && static_cast<std::size_t>(s.policy[k]) < s.labels.size()) {
            out << s.labels[static_cast<std::size_t>(s.policy[k])];
        }
        out << ',' << s.residual[k] << '\n';
    }
}

}  // namespace qdlab
