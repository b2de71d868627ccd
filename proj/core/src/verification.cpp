#include "qdlab/verification.hpp"

#include "qdlab/assumptions.hpp"
#include "qdlab/engine.hpp"
#include "qdlab/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace qdlab {

namespace {

constexpr double kRegionSlack = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_ratio(double value, double denom) {
    if (denom > 0.0) return value / denom;
    return value == 0.0 ? 0.0 : kInf;
}

EngineConfig config_from(const SimulationParams& params, const Levels& levels) {
    EngineConfig cfg;
    cfg.levels = levels;
    cfg.caps = params.caps;
    cfg.upsilon_floor = params.upsilon_floor;
    cfg.track.xi = true;
    return cfg;
}

void require_region(BarrierKind kind, double psi, const Levels& levels, const Vec& x) {
    const bool ok = kind == BarrierKind::BoundaryLayer ? (psi > levels.delta() && psi < levels.lambda())
                                                       : psi > levels.lambda_sq();
    if (!ok) {
        std::ostringstream os;
        os << "start " << format_vec(x) << " with psi = " << psi << " is outside the " << to_string(kind) << " region";
        throw Error(ErrorCode::RegionMismatch, os.str());
    }
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
    const Estimate e = summarize(xs);
    return {e.mean, e.std_error};
}

}  // namespace

std::string_view to_string(BarrierKind kind) noexcept {
    return kind == BarrierKind::BoundaryLayer ? "boundary_layer" : "interior";
}

double barrier_value(BarrierKind kind, const PsiJet& psi, const Vec& xi, double lambda, double k1) {
    const double p = psi.value;
    if (kind == BarrierKind::BoundaryLayer) {
        if (!(p > 0.0) || p > lambda + kRegionSlack) {
            std::ostringstream os;
            os << "B1 needs 0 < psi <= " << lambda << ", got psi = " << p;
            throw Error(ErrorCode::RegionMismatch, os.str());
        }
        const double root = std::sqrt(p);
        const double psi_xi = psi.grad.dot(xi);
        const double w = layer_weight(p, lambda);
        return (lambda + root * (1.0 + root)) * xi.squaredNorm() + k1 * std::pow(w, 1.5) * psi_xi * psi_xi / p;
    }
    if (p < lambda * lambda - kRegionSlack) {
        std::ostringstream os;
        os << "B2 needs psi >= " << lambda * lambda << ", got psi = " << p;
        throw Error(ErrorCode::RegionMismatch, os.str());
    }
    return std::pow(lambda, 0.75) * xi.squaredNorm();
}

double barrier_eval(BarrierKind kind, const Domain& domain, const Vec& x, const Vec& xi, double lambda, double k1) {
    return barrier_value(kind, domain.psi_jet(x), xi, lambda, k1);
}

double default_k1(const ControlProblem& problem) {
    const double k0 = problem.k0();
    return 10.0 * k0 * k0 * k0;
}

BarrierSamples BarrierSamples::square_root() const {
    BarrierSamples out = *this;
    for (auto& row : out.values) {
        for (double& v : row) v = std::sqrt(std::max(v, 0.0));
    }
    return out;
}

BarrierSamples BarrierSamples::subsample(std::size_t factor) const {
    if (factor == 0) throw Error(ErrorCode::InvalidArgument, "subsample factor must be positive");
    BarrierSamples out;
    out.times = times;
    for (std::size_t i = 0; i < values.size(); i += factor) {
        out.values.push_back(values[i]);
        out.weights.push_back(weights[i]);
        out.stopped.push_back(stopped[i]);
    }
    return out;
}

BarrierSamples collect_barrier_samples(const ControlProblem& problem, const Domain& domain,
                                       const std::optional<InteriorCondition>& condition, const Vec& x0,
                                       const Vec& xi0, const BarrierRun& run) {
    if (run.checkpoints.empty()) throw Error(ErrorCode::InvalidArgument, "no checkpoints");
    if (!std::is_sorted(run.checkpoints.begin(), run.checkpoints.end())) {
        throw Error(ErrorCode::InvalidArgument, "checkpoints must be increasing");
    }
    require_region(run.kind, domain.psi(x0), run.levels, x0);
    EngineConfig cfg = config_from(run.params, run.levels);
    cfg.caps.horizon = std::min(cfg.caps.horizon, run.checkpoints.back());
    if (run.kind == BarrierKind::BoundaryLayer) {
        cfg.recipe = RecipeMode::BoundaryOnly;
        cfg.stop_high = run.levels.lambda();
    } else {
        cfg.recipe = RecipeMode::InteriorOnly;
        cfg.stop_low = run.levels.lambda_sq();
    }
    const BundleEngine engine(problem, domain, condition, MarkovPolicy::constant(0), cfg);
    BarrierSamples out;
    out.times.assign(run.checkpoints.begin(), run.checkpoints.end());
    std::vector<std::vector<double>> rows(run.n_paths);
    std::vector<char> stopped(run.n_paths, 0);
    const double lambda = run.levels.lambda();
    parallel_for(run.n_paths, run.params.threads, [&](std::size_t i) {
        try {
            const PathBundle pb = engine.simulate(x0, xi0, Vec(), run.params.seed, i, nullptr, run.checkpoints);
            std::vector<double> row;
            row.reserve(pb.checkpoints.size());
            for (const BundleState& s : pb.checkpoints) {
                double b = barrier_value(run.kind, domain.psi_jet(s.x), s.xi, lambda, run.k1);
                if (run.kind == BarrierKind::Interior) b *= std::exp(-s.phi);
                row.push_back(b);
            }
            stopped[i] = pb.cause != StopCause::Horizon;
            rows[i] = std::move(row);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::PathAborted) throw;
        }
    });
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != out.times.size()) continue;
        out.values.push_back(std::move(rows[i]));
        out.weights.push_back(1.0);
        out.stopped.push_back(stopped[i] != 0);
    }
    return out;
}

SupermartingaleVerdict supermartingale_test(const BarrierSamples& samples, std::size_t min_paths) {
    const std::size_t n = samples.values.size();
    if (n < min_paths) {
        std::ostringstream os;
        os << "supermartingale test needs at least " << min_paths << " paths, got " << n;
        throw Error(ErrorCode::Underpowered, os.str());
    }
    SupermartingaleVerdict out;
    const std::size_t m = samples.times.size();
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> column(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = i < samples.weights.size() ? samples.weights[i] : 1.0;
            column[i] = w * samples.values[i].at(k);
        }
        const MeanSe ms = mean_se(column);
        out.means.push_back(ms.mean);
        out.std_errors.push_back(ms.se);
    }
    const std::size_t pairs = m > 0 ? m - 1 : 0;
    out.pass = true;
    if (pairs == 0) return out;
    // 0.02275 is the one-sided tail beyond 2 sigma.
    out.critical_z = normal_quantile(1.0 - 0.02275 / static_cast<double>(pairs));
    out.max_z = -kInf;
    for (std::size_t k = 0; k < pairs; ++k) {
        const double diff = out.means[k + 1] - out.means[k];
        const double pooled = std::hypot(out.std_errors[k], out.std_errors[k + 1]);
        double z = 0.0;
        if (pooled > 0.0) {
            z = diff / pooled;
        } else if (diff > 1e-14 * std::max(1.0, std::abs(out.means[k]))) {
            z = kInf;
        } else if (diff < 0.0) {
            z = -kInf;
        }
        if (z > out.max_z) {
            out.max_z = z;
            out.worst_pair = k;
        }
    }
    out.pass = !(out.max_z > out.critical_z);
    return out;
}

std::vector<MomentRow> moment_bound_check(const ControlProblem& problem, const Domain& domain,
                                          const std::optional<InteriorCondition>& condition, const Vec& x0,
                                          const Vec& xi, const MomentRun& run) {
    const Levels& levels = run.levels;
    const PsiJet start = domain.psi_jet(x0);
    const double psi0 = start.value;
    std::vector<MomentRow> rows;
    const std::size_t n = run.n_paths;
    const Vec eta0 = Vec::Zero(x0.size());

    if (psi0 > levels.delta() && psi0 < levels.lambda()) {
        EngineConfig cfg = config_from(run.params, levels);
        cfg.track.eta = true;
        cfg.recipe = RecipeMode::BoundaryOnly;
        cfg.stop_high = levels.lambda();
        const BundleEngine engine(problem, domain, condition, MarkovPolicy::constant(0), cfg);
        std::vector<double> a(n), b(n), c(n), e(n);
        parallel_for(n, run.params.threads, [&](std::size_t i) {
            double int_xi = 0.0, sup_xi = 0.0, sup_eta = 0.0, int_eta = 0.0;
            bool have_prev = false;
            double prev_t = 0.0, prev_xi = 0.0, prev_normal = 0.0, prev_eta = 0.0;
            StateObserver obs = [&](const BundleState& s) {
                const PsiJet pj = domain.psi_jet(s.x);
                const double psi_xi = pj.grad.dot(s.xi);
                const double xi_sq = s.xi.squaredNorm();
                const double normal = pj.value > 0.0 ? psi_xi * psi_xi / (pj.value * pj.value) : 0.0;
                const double eta_sq = s.eta.squaredNorm();
                if (have_prev) {
                    const double dt = s.t - prev_t;
                    int_xi += (prev_xi + prev_normal) * dt;
                    int_eta += prev_eta * dt;
                }
                have_prev = true;
                prev_t = s.t;
                prev_xi = xi_sq;
                prev_normal = normal;
                prev_eta = eta_sq;
                sup_xi = std::max(sup_xi, xi_sq);
                sup_eta = std::max(sup_eta, std::sqrt(eta_sq));
            };
            (void)engine.simulate(x0, xi, eta0, run.params.seed, i, &obs);
            a[i] = int_xi;
            b[i] = sup_xi;
            c[i] = sup_eta;
            e[i] = std::sqrt(int_eta);
        });
        const double barrier = barrier_value(BarrierKind::BoundaryLayer, start, xi, levels.lambda(), run.k1);
        auto add = [&](const char* item, const std::vector<double>& xs) {
            const MeanSe ms = mean_se(xs);
            rows.push_back({"boundary", item, psi0, ms.mean, ms.se, barrier, safe_ratio(ms.mean, barrier)});
        };
        add("int_xi_sq_plus_normal_sq", a);
        add("sup_xi_sq", b);
        add("sup_eta", c);
        add("sqrt_int_eta_sq", e);
    }

    if (psi0 > levels.lambda_sq()) {
        EngineConfig cfg = config_from(run.params, levels);
        cfg.track.eta = true;
        cfg.recipe = RecipeMode::InteriorOnly;
        cfg.stop_low = levels.lambda_sq();
        const BundleEngine engine(problem, domain, condition, MarkovPolicy::constant(0), cfg);
        constexpr std::size_t kItems = 8;
        std::vector<std::array<double, kItems>> acc(n);
        parallel_for(n, run.params.threads, [&](std::size_t i) {
            std::array<double, kItems> v{};
            bool have_prev = false;
            double prev_t = 0.0;
            double prev_disc_xi = 0.0, prev_disc_eta = 0.0, prev_grow_xi = 0.0, prev_grow_eta = 0.0;
            StateObserver obs = [&](const BundleState& s) {
                const double disc = std::exp(-s.phi);
                const double grow = std::exp(-s.phi + 0.5 * s.t);
                const double xi_sq = s.xi.squaredNorm();
                const double eta_norm = s.eta.norm();
                if (have_prev) {
                    const double dt = s.t - prev_t;
                    v[0] += prev_disc_xi * dt;
                    v[3] += prev_disc_eta * dt;
                    v[4] += prev_grow_xi * dt;
                    v[6] += prev_grow_eta * dt;
                }
                have_prev = true;
                prev_t = s.t;
                prev_disc_xi = disc * xi_sq;
                prev_disc_eta = disc * disc * eta_norm * eta_norm;
                prev_grow_xi = grow * xi_sq;
                prev_grow_eta = grow * grow * eta_norm * eta_norm;
                v[1] = std::max(v[1], disc * xi_sq);
                v[2] = std::max(v[2], disc * eta_norm);
                v[5] = std::max(v[5], grow * xi_sq);
                v[7] = std::max(v[7], grow * eta_norm);
            };
            (void)engine.simulate(x0, xi, eta0, run.params.seed, i, &obs);
            v[3] = std::sqrt(v[3]);
            v[6] = std::sqrt(v[6]);
            acc[i] = v;
        });
        const double barrier = barrier_value(BarrierKind::Interior, start, xi, levels.lambda(), run.k1);
        static constexpr const char* kNames[kItems] = {
            "int_disc_xi_sq",  "sup_disc_xi_sq", "sup_disc_eta",        "sqrt_int_disc_eta_sq",
            "int_grow_xi_sq",  "sup_grow_xi_sq", "sqrt_int_grow_eta_sq", "sup_grow_eta"};
        for (std::size_t k = 0; k < kItems; ++k) {
            std::vector<double> xs(n);
            for (std::size_t i = 0; i < n; ++i) xs[i] = acc[i][k];
            const MeanSe ms = mean_se(xs);
            rows.push_back({"interior", kNames[k], psi0, ms.mean, ms.se, barrier, safe_ratio(ms.mean, barrier)});
        }
    }
    return rows;
}

std::vector<Vec> psi_ladder(const Domain& domain, const Vec& inner, const Vec& outer, double psi_hi, double psi_lo,
                            std::size_t count) {
    if (count < 2 || !(psi_hi > psi_lo) || !(psi_lo > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "ladder needs count >= 2 and psi_hi > psi_lo > 0");
    }
    if (!(domain.psi(inner) > psi_hi) || !(domain.psi(outer) < psi_lo)) {
        throw Error(ErrorCode::InvalidArgument, "segment does not span the requested psi range");
    }
    std::vector<Vec> out;
    const Vec dir = outer - inner;
    for (std::size_t k = 0; k < count; ++k) {
        const double level =
            psi_hi * std::pow(psi_lo / psi_hi, static_cast<double>(k) / static_cast<double>(count - 1));
        const double theta = bisect_level([&](double s) { return domain.psi(inner + s * dir); }, level, 1e-13);
        out.push_back(inner + theta * dir);
    }
    return out;
}

LadderReport moment_ladder(const ControlProblem& problem, const Domain& domain,
                           const std::optional<InteriorCondition>& condition, std::span<const Vec> starts,
                           const Vec& xi, const MomentRun& run) {
    LadderReport out;
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, std::vector<MomentRow>> groups;
    for (const Vec& x0 : starts) {
        for (MomentRow& row : moment_bound_check(problem, domain, condition, x0, xi, run)) {
            const auto key = std::make_pair(row.region, row.item);
            if (!groups.count(key)) order.push_back(key);
            groups[key].push_back(row);
            out.rows.push_back(std::move(row));
        }
    }
    out.pass = !order.empty();
    for (const auto& key : order) {
        std::vector<MomentRow> rows = groups[key];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const MomentRow& a, const MomentRow& b) { return a.psi_level > b.psi_level; });
        std::vector<double> series;
        TrendRow tr;
        tr.region = key.first;
        tr.item = key.second;
        bool finite = true;
        for (const MomentRow& r : rows) {
            series.push_back(r.ratio);
            finite = finite && std::isfinite(r.ratio);
            tr.max_ratio = std::max(tr.max_ratio, r.ratio);
        }
        tr.trend = mann_kendall(series);
        tr.pass = finite && tr.trend.p_increasing > 0.05;
        out.pass = out.pass && tr.pass;
        out.trends.push_back(tr);
    }
    return out;
}

DerivativeSource derivative_source(const ValueProvider& provider) {
    return [&provider](const Vec& x, const Vec& xi) {
        const ScalarJet j = provider.evaluate(x, 2, false);
        DirectionalJet out;
        out.value = j.value;
        out.first = j.grad.size() == xi.size() ? j.grad.dot(xi) : std::numeric_limits<double>::quiet_NaN();
        out.second = j.hess.rows() == xi.size() ? xi.dot(j.hess * xi) : std::numeric_limits<double>::quiet_NaN();
        return out;
    };
}

DerivativeBoundReport derivative_bound_check(const ControlProblem& problem, const Domain& domain,
                                             std::span<const Vec> points, std::span<const Vec> directions,
                                             const DerivativeSource& source, double mu_threshold) {
    DerivativeBoundReport out;
    for (const Vec& x : points) {
        const PsiJet pj = domain.psi_jet(x);
        if (!(pj.value > 0.0)) throw Error(ErrorCode::InvalidArgument, "point " + format_vec(x) + " is not inside D");
        for (const Vec& xi : directions) {
            const double norm = xi.norm();
            if (!(norm > 0.0)) continue;
            const DirectionalJet dj = source(x, xi);
            DerivativeRatioRow row;
            row.x = x;
            row.xi = xi;
            row.psi = pj.value;
            const double psi_xi = pj.grad.dot(xi);
            row.first_ratio = std::abs(dj.first) / (norm + std::abs(psi_xi) / std::sqrt(pj.value));
            row.lower_ratio = std::max(0.0, -dj.second) / (norm * norm + psi_xi * psi_xi / pj.value);
            row.mu = mu(problem, x, xi / norm);
            row.upper_applies = row.mu > mu_threshold;
            row.upper_ratio = row.upper_applies ? std::max(0.0, dj.second) * pj.value * row.mu / (norm * norm) : 0.0;
            out.rows.push_back(row);
        }
    }
    std::vector<const DerivativeRatioRow*> sorted;
    for (const auto& r : out.rows) sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const DerivativeRatioRow* a, const DerivativeRatioRow* b) { return a->psi > b->psi; });
    std::vector<double> first, lower, upper;
    bool finite = true;
    for (const DerivativeRatioRow* r : sorted) {
        first.push_back(r->first_ratio);
        lower.push_back(r->lower_ratio);
        if (r->upper_applies) upper.push_back(r->upper_ratio);
        finite = finite && std::isfinite(r->first_ratio) && std::isfinite(r->lower_ratio) &&
                 std::isfinite(r->upper_ratio);
        out.fitted_first = std::max(out.fitted_first, r->first_ratio);
        out.fitted_lower = std::max(out.fitted_lower, r->lower_ratio);
        if (r->upper_applies) out.fitted_upper = std::max(out.fitted_upper, r->upper_ratio);
    }
    out.first_trend = mann_kendall(first);
    out.lower_trend = mann_kendall(lower);
    out.upper_trend = mann_kendall(upper);
    out.pass = finite && !out.rows.empty() && out.first_trend.p_increasing > 0.05 &&
               out.lower_trend.p_increasing > 0.05 && out.upper_trend.p_increasing > 0.05;
    return out;
}

NormalDerivativeReport normal_derivative_check(const ControlProblem& problem, const Domain& domain,
                                               std::span<const Vec> boundary_samples,
                                               const std::function<Vec(const Vec&)>& gradient,
                                               std::size_t n_norm_samples) {
    NormalDerivativeReport out;
    out.max_normal_derivative = 0.0;
    for (const Vec& y : boundary_samples) {
        const Vec inward = -domain.outward_normal(y);
        const double vn = std::abs(gradient(y).dot(inward));
        if (!(vn <= out.max_normal_derivative)) {
            out.max_normal_derivative = vn;
            out.witness = y;
        }
    }
    std::mt19937_64 rng(13);
    std::vector<Vec> pts = sample_interior(domain, n_norm_samples, rng);
    pts.insert(pts.end(), boundary_samples.begin(), boundary_samples.end());
    double g0 = 0.0, g1 = 0.0, g2 = 0.0;
    CoefficientJet jet;
    for (const Vec& x : pts) {
        const ScalarJet g = problem.g(x, 2);
        g0 = std::max(g0, std::abs(g.value));
        if (g.grad.size() > 0) g1 = std::max(g1, g.grad.norm());
        if (g.hess.rows() > 0) {
            const Eigen::SelfAdjointEigenSolver<Mat> es(g.hess, Eigen::EigenvaluesOnly);
            g2 = std::max(g2, es.eigenvalues().cwiseAbs().maxCoeff());
        }
        for (std::size_t a = 0; a < problem.num_controls(); ++a) {
            problem.coefficients(a, x, 0, jet);
            out.f_sup = std::max(out.f_sup, std::abs(jet.f));
        }
    }
    out.g_norm = g0 + g1 + g2;
    out.fitted_k = safe_ratio(out.max_normal_derivative, out.g_norm + out.f_sup);
    out.bounded = std::isfinite(out.max_normal_derivative) && std::isfinite(out.fitted_k);
    return out;
}

}  // namespace qdlab
