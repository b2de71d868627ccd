#include "qdlab/engine.hpp"

#include "qdlab/linalg.hpp"
#include "qdlab/random.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qdlab {

std::string_view to_string(StopCause cause) noexcept {
    switch (cause) {
        case StopCause::Running: return "running";
        case StopCause::Exit: return "exit";
        case StopCause::XiCap: return "xi_cap";
        case StopCause::Horizon: return "horizon";
        case StopCause::PerturbationBreakdown: return "perturbation_breakdown";
    }
    return "unknown";
}

BundleEngine::BundleEngine(ControlProblem problem, Domain domain, std::optional<InteriorCondition> condition,
                           MarkovPolicy policy, EngineConfig config)
    : problem_(std::move(problem)),
      domain_(std::move(domain)),
      condition_(condition ? std::move(*condition)
                           : InteriorCondition::zero(problem_.dim(), problem_.noise_dim())),
      policy_(std::move(policy)),
      config_(config) {
    if (problem_.dim() != domain_.dim()) throw Error(ErrorCode::InvalidArgument, "problem and domain dimensions differ");
    Tracking& t = config_.track;
    if (t.eta || t.augmented || t.y || t.z) t.xi = true;
    if (t.z) t.eta = true;
    if (!(config_.caps.dt0 > 0.0) || !(config_.caps.dt_min > 0.0) || !(config_.caps.dt_boundary_factor > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "time steps must be positive");
    }
    if (config_.eps < 0.0) throw Error(ErrorCode::InvalidPerturbation, "eps must be non-negative");
    if (t.xi && (config_.recipe == RecipeMode::Switched || config_.recipe == RecipeMode::BoundaryOnly)) {
        config_.stop_low = std::max(config_.stop_low, config_.levels.delta());
    }
}

int BundleEngine::jet_order() const noexcept {
    if (config_.track.eta) return 2;
    if (config_.track.xi) return 1;
    return 0;
}

BundleState BundleEngine::initial_state(const Vec& x0, const Vec& xi0, const Vec& eta0) const {
    const int d = problem_.dim();
    if (x0.size() != d) throw Error(ErrorCode::InvalidArgument, "start point has wrong dimension");
    BundleState s;
    s.x = x0;
    s.xi = config_.track.xi ? (xi0.size() == d ? xi0 : Vec(Vec::Zero(d))) : Vec();
    s.eta = config_.track.eta ? (eta0.size() == d ? eta0 : Vec(Vec::Zero(d))) : Vec();
    const double eps = config_.eps;
    if (config_.track.y) {
        s.y = x0 + eps * s.xi;
        s.y_alive = true;
    }
    if (config_.track.z) {
        s.z_plus = x0 + eps * s.xi + 0.5 * eps * eps * s.eta;
        s.z_minus = x0 - eps * s.xi + 0.5 * eps * eps * s.eta;
        s.zp_alive = s.zm_alive = true;
    }
    s.control = policy_(x0);
    s.recipe = select_recipe(config_.recipe, domain_.psi(x0), config_.levels, RecipeKind::None);
    return s;
}

QuasiRecipe BundleEngine::recipe_at(const BundleState& tip, const CoefficientJet& jet) const {
    const int d1 = problem_.noise_dim();
    if (!config_.track.xi || tip.recipe == RecipeKind::None) return QuasiRecipe::zero(d1);
    if (tip.recipe == RecipeKind::Boundary) {
        return boundary_recipe(jet, domain_.psi_jet(tip.x), tip.xi, config_.levels.lambda(), config_.upsilon_floor);
    }
    return interior_recipe(jet, condition_, tip.control, tip.x, tip.xi, tip.eta);
}

namespace {

bool radicand_ok(double value) { return value > 0.0 && std::isfinite(value); }

}  // namespace

StepStatus BundleEngine::advance(const BundleState& s, double dt, const Vec& dw, const QuasiRecipe& rc,
                                 const CoefficientJet& jx, BundleState& n) const {
    const Tracking& tr = config_.track;
    const double eps = config_.eps;
    const double r = rc.r;
    const double r_hat = rc.r_hat;

    const double rad_y = 1.0 + 2.0 * eps * r;
    const double rad_zp = 1.0 + 2.0 * eps * r + eps * eps * r_hat;
    const double rad_zm = 1.0 - 2.0 * eps * r + eps * eps * r_hat;
    if (tr.y && s.y_alive && !radicand_ok(rad_y)) return StepStatus::Rejected;
    if (tr.z && s.zp_alive && !radicand_ok(rad_zp)) return StepStatus::Rejected;
    if (tr.z && s.zm_alive && !radicand_ok(rad_zm)) return StepStatus::Rejected;

    n = s;
    n.t = s.t + dt;
    const Mat& sig = jx.sigma;
    const double disc = std::exp(-s.phi);
    n.x = s.x + sig * dw + jx.b * dt;
    n.phi = s.phi + jx.c * dt;
    n.running = s.running + jx.f * disc * dt;

    if (tr.xi) {
        const Mat s_xi = jx.sigma_dir(s.xi);
        const Mat sig_p = sig * rc.p;
        const Vec b_xi = jx.b_dir(s.xi);
        n.xi = s.xi + (s_xi + r * sig + sig_p) * dw + (b_xi + 2.0 * r * jx.b - sig * rc.pi) * dt;

        if (tr.eta) {
            const Mat s_eta = jx.sigma_dir(s.eta);
            const Mat s_xixi = jx.sigma_dir2(s.xi, s.xi);
            const Mat diff = s_eta + r_hat * sig + sig * rc.p_hat + s_xixi + 2.0 * r * s_xi + 2.0 * s_xi * rc.p +
                             2.0 * r * sig_p - r * r * sig + sig_p * rc.p;
            const Vec drift = jx.b_dir(s.eta) + 2.0 * r_hat * jx.b - sig * rc.pi_hat + jx.b_dir2(s.xi, s.xi) +
                              4.0 * r * b_xi - 2.0 * s_xi * rc.pi - 2.0 * r * sig * rc.pi - 2.0 * sig_p * rc.pi;
            n.eta = s.eta + diff * dw + drift * dt;
        }

        if (tr.augmented) {
            const double c_xi = jx.c_dir(s.xi);
            const double f_xi = jx.f_dir(s.xi);
            n.xi_discount = s.xi_discount - (c_xi + 2.0 * r * jx.c) * dt;
            n.xi_weight = s.xi_weight + rc.pi.dot(dw);
            n.xi_payoff = s.xi_payoff + disc * (f_xi + (2.0 * r + s.xi_discount + s.xi_weight) * jx.f) * dt;
            if (tr.eta) {
                const double c_xixi = jx.c_dir2(s.xi, s.xi);
                const double f_xixi = jx.f_dir2(s.xi, s.xi);
                const double c_eta = jx.c_dir(s.eta);
                const double f_eta = jx.f_dir(s.eta);
                n.eta_discount = s.eta_discount - (c_xixi + c_eta + 4.0 * r * c_xi + 2.0 * r_hat * jx.c) * dt;
                n.pi_sq_integral = s.pi_sq_integral + rc.pi.squaredNorm() * dt;
                n.pi_hat_integral = s.pi_hat_integral + rc.pi_hat.dot(dw);
                n.eta_weight = n.xi_weight * n.xi_weight - n.pi_sq_integral + n.pi_hat_integral;
                const double t_xi = s.xi_discount + s.xi_weight;
                const double t_eta = s.eta_weight + 2.0 * s.xi_weight * s.xi_discount +
                                     s.xi_discount * s.xi_discount + s.eta_discount;
                n.eta_payoff = s.eta_payoff + disc *
                                                  (f_xixi + f_eta + (4.0 * r + 2.0 * t_xi) * f_xi +
                                                   (2.0 * r_hat + 4.0 * t_xi * r + t_eta) * jx.f) *
                                                  dt;
            }
        }
    }

    if (tr.y && s.y_alive) {
        CoefficientJet jy;
        problem_.coefficients(s.control, s.y, 0, jy);
        const double root = std::sqrt(rad_y);
        const Vec h = eps * rc.pi;
        const Mat rot = skew_exp(rc.p, eps);
        const Mat s_rot = jy.sigma * rot;
        n.y = s.y + root * (s_rot * dw) + (rad_y * jy.b - root * (s_rot * h)) * dt;
        n.y_phi = s.y_phi + rad_y * jy.c * dt;
        n.y_payoff = s.y_payoff + rad_y * jy.f * std::exp(s.y_log_p - s.y_phi) * dt;
        n.y_log_p = s.y_log_p + h.dot(dw) - 0.5 * h.squaredNorm() * dt;
    }

    if (tr.z) {
        auto move = [&](double sign, double rad, const Vec& z, double phi, double log_p, double payoff, Vec& z_out,
                        double& phi_out, double& log_p_out, double& payoff_out) {
            CoefficientJet jz;
            problem_.coefficients(s.control, z, 0, jz);
            const double root = std::sqrt(rad);
            const Vec h = sign * eps * rc.pi + 0.5 * eps * eps * rc.pi_hat;
            const Mat rot = skew_exp(rc.p, sign * eps) * skew_exp(rc.p_hat, 0.5 * eps * eps);
            const Mat s_rot = jz.sigma * rot;
            z_out = z + root * (s_rot * dw) + (rad * jz.b - root * (s_rot * h)) * dt;
            phi_out = phi + rad * jz.c * dt;
            payoff_out = payoff + rad * jz.f * std::exp(log_p - phi) * dt;
            log_p_out = log_p + h.dot(dw) - 0.5 * h.squaredNorm() * dt;
        };
        if (s.zp_alive) {
            move(1.0, rad_zp, s.z_plus, s.zp_phi, s.zp_log_p, s.zp_payoff, n.z_plus, n.zp_phi, n.zp_log_p,
                 n.zp_payoff);
        }
        if (s.zm_alive) {
            move(-1.0, rad_zm, s.z_minus, s.zm_phi, s.zm_log_p, s.zm_payoff, n.z_minus, n.zm_phi, n.zm_log_p,
                 n.zm_payoff);
        }
    }
    return StepStatus::Accepted;
}

StepStatus BundleEngine::step(const BundleState& tip, double dt, const Vec& dw, BundleState& next) const {
    BundleState s = tip;
    s.control = policy_(tip.x);
    const RecipeKind kind = select_recipe(config_.recipe, domain_.psi(tip.x), config_.levels, tip.recipe);
    if (kind != s.recipe && s.recipe != RecipeKind::None) ++s.switches;
    s.recipe = kind;
    CoefficientJet jx;
    problem_.coefficients(s.control, s.x, std::max(jet_order(), kind == RecipeKind::Boundary ? 1 : 0), jx);
    const QuasiRecipe rc = recipe_at(s, jx);
    return advance(s, dt, dw, rc, jx, next);
}

namespace {

double lerp(double a, double b, double t) { return a + t * (b - a); }

Vec lerp(const Vec& a, const Vec& b, double t) {
    if (a.size() != b.size()) return b;
    return a + t * (b - a);
}

bool finite_state(const BundleState& s) {
    auto ok = [](const Vec& v) { return v.size() == 0 || v.allFinite(); };
    return ok(s.x) && ok(s.xi) && ok(s.eta) && ok(s.y) && ok(s.z_plus) && ok(s.z_minus) && std::isfinite(s.phi) &&
           std::isfinite(s.running) && std::isfinite(s.xi_payoff) && std::isfinite(s.eta_payoff) &&
           std::isfinite(s.xi_weight) && std::isfinite(s.eta_weight) && std::isfinite(s.y_log_p);
}

}  // namespace

BundleState blend(const BundleState& a, const BundleState& b, double t) {
    BundleState o = b;
    o.t = lerp(a.t, b.t, t);
    o.x = lerp(a.x, b.x, t);
    o.xi = lerp(a.xi, b.xi, t);
    o.eta = lerp(a.eta, b.eta, t);
    o.phi = lerp(a.phi, b.phi, t);
    o.running = lerp(a.running, b.running, t);
    o.xi_discount = lerp(a.xi_discount, b.xi_discount, t);
    o.xi_weight = lerp(a.xi_weight, b.xi_weight, t);
    o.xi_payoff = lerp(a.xi_payoff, b.xi_payoff, t);
    o.eta_discount = lerp(a.eta_discount, b.eta_discount, t);
    o.eta_weight = lerp(a.eta_weight, b.eta_weight, t);
    o.eta_payoff = lerp(a.eta_payoff, b.eta_payoff, t);
    o.pi_sq_integral = lerp(a.pi_sq_integral, b.pi_sq_integral, t);
    o.pi_hat_integral = lerp(a.pi_hat_integral, b.pi_hat_integral, t);
    o.y = lerp(a.y, b.y, t);
    o.y_phi = lerp(a.y_phi, b.y_phi, t);
    o.y_log_p = lerp(a.y_log_p, b.y_log_p, t);
    o.y_payoff = lerp(a.y_payoff, b.y_payoff, t);
    o.z_plus = lerp(a.z_plus, b.z_plus, t);
    o.zp_phi = lerp(a.zp_phi, b.zp_phi, t);
    o.zp_log_p = lerp(a.zp_log_p, b.zp_log_p, t);
    o.zp_payoff = lerp(a.zp_payoff, b.zp_payoff, t);
    o.z_minus = lerp(a.z_minus, b.z_minus, t);
    o.zm_phi = lerp(a.zm_phi, b.zm_phi, t);
    o.zm_log_p = lerp(a.zm_log_p, b.zm_log_p, t);
    o.zm_payoff = lerp(a.zm_payoff, b.zm_payoff, t);
    return o;
}

PathBundle BundleEngine::simulate(const Vec& x0, const Vec& xi0, const Vec& eta0, std::uint64_t seed,
                                  std::uint64_t path_index, const StateObserver* observer,
                                  std::span<const double> checkpoints) const {
    const StepCaps& caps = config_.caps;
    const int d1 = problem_.noise_dim();
    PathRng rng(seed, path_index);
    PathBundle out;
    BundleState tip = initial_state(x0, xi0, eta0);
    out.start = tip;
    std::size_t next_checkpoint = 0;

    auto in_band = [&](double psi) { return psi > config_.stop_low && psi < config_.stop_high; };
    auto level_for = [&](double psi) { return psi <= config_.stop_low ? config_.stop_low : config_.stop_high; };
    auto record_trace = [&](const BundleState& s) {
        if (!config_.record_trace) return;
        out.trace.push_back({s.t, s.x, s.xi, s.eta, s.phi, std::exp(s.y_log_p),
                             classify_psi(domain_.psi(s.x), config_.levels)});
    };
    auto finish = [&](StopCause cause) {
        out.tip = tip;
        out.cause = cause;
        if (config_.track.xi && tip.xi.norm() >= caps.xi_cap) out.hit_xi_cap = true;
        while (next_checkpoint < checkpoints.size()) {
            out.checkpoints.push_back(tip);
            ++next_checkpoint;
        }
        record_trace(tip);
        if (observer) (*observer)(tip);
        return out;
    };
    auto kill_perturbed = [&](BundleState& s) {
        if (std::isnan(out.perturbed_stop_time)) out.perturbed_stop_time = s.t;
        s.y_alive = s.zp_alive = s.zm_alive = false;
    };

    while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] <= 0.0) {
        out.checkpoints.push_back(tip);
        ++next_checkpoint;
    }
    if (observer) (*observer)(tip);
    record_trace(tip);

    if (!in_band(domain_.psi(tip.x))) return finish(StopCause::Exit);
    auto perturbed_outside = [&](const BundleState& s) {
        return (s.y_alive && !in_band(domain_.psi(s.y))) || (s.zp_alive && !in_band(domain_.psi(s.z_plus))) ||
               (s.zm_alive && !in_band(domain_.psi(s.z_minus)));
    };
    if (perturbed_outside(tip)) {
        if (config_.stop_on_perturbed_exit) return finish(StopCause::Exit);
        kill_perturbed(tip);
    }
    if (config_.track.xi && tip.xi.norm() >= caps.xi_cap) return finish(StopCause::XiCap);

    Vec normals(d1);
    BundleState next;
    while (true) {
        if (tip.t >= caps.horizon) return finish(StopCause::Horizon);
        const double psi_x = domain_.psi(tip.x);
        double dt = std::min(caps.dt0, caps.dt_boundary_factor * psi_x);
        if (config_.track.xi &&
            select_recipe(config_.recipe, psi_x, config_.levels, tip.recipe) == RecipeKind::Boundary) {
            const Vec along = problem_.coefficients(policy_(tip.x), tip.x, 0).sigma.transpose() * domain_.psi_jet(tip.x).grad;
            const double upsilon = std::max(along.squaredNorm(), config_.upsilon_floor);
            dt = std::min(dt, caps.dt_layer_factor * psi_x * psi_x / upsilon);
        }
        dt = std::max(dt, caps.dt_min);
        dt = std::min(dt, caps.horizon - tip.t);
        if (next_checkpoint < checkpoints.size()) dt = std::min(dt, checkpoints[next_checkpoint] - tip.t);
        for (int k = 0; k < d1; ++k) normals[k] = rng.normal();

        // A non-positive time-change radicand does not depend on dt, so a rejection ends the perturbed copies.
        if (step(tip, dt, std::sqrt(dt) * normals, next) == StepStatus::Rejected) {
            ++out.rejections;
            if (config_.stop_on_perturbed_exit) return finish(StopCause::PerturbationBreakdown);
            kill_perturbed(tip);
            if (step(tip, dt, std::sqrt(dt) * normals, next) == StepStatus::Rejected) {
                throw Error(ErrorCode::StepRejected, "step rejected with no perturbed process alive");
            }
        }
        if (!finite_state(next)) {
            std::ostringstream os;
            os << "non-finite state at t=" << next.t << " from x=" << format_vec(tip.x);
            throw Error(ErrorCode::PathAborted, os.str());
        }
        ++out.steps;

        // Exit detection with bisection along the step for every live process.
        double theta = 2.0;
        Process first = Process::X;
        auto check = [&](const Vec& a, const Vec& b, Process which) {
            const double psi_b = domain_.psi(b);
            if (in_band(psi_b)) return;
            const double level = level_for(psi_b);
            const double th = bisect_level([&](double s) { return domain_.psi(a + s * (b - a)); }, level, 1e-10);
            if (th < theta) {
                theta = th;
                first = which;
            }
        };
        check(tip.x, next.x, Process::X);
        if (next.y_alive) check(tip.y, next.y, Process::Y);
        if (next.zp_alive) check(tip.z_plus, next.z_plus, Process::ZPlus);
        if (next.zm_alive) check(tip.z_minus, next.z_minus, Process::ZMinus);

        if (theta <= 1.0) {
            if (first == Process::X || config_.stop_on_perturbed_exit) {
                tip = blend(tip, next, theta);
                out.exited = first;
                if (first != Process::X) kill_perturbed(tip);
                return finish(StopCause::Exit);
            }
            // A perturbed copy left: freeze the copies at the crossing, keep the rest of the step.
            const BundleState frozen = blend(tip, next, theta);
            next.y = frozen.y;
            next.z_plus = frozen.z_plus;
            next.z_minus = frozen.z_minus;
            if (std::isnan(out.perturbed_stop_time)) out.perturbed_stop_time = frozen.t;
            next.y_alive = next.zp_alive = next.zm_alive = false;
            // The frozen step may still carry an exit of x later in the step.
            const double psi_next = domain_.psi(next.x);
            if (!in_band(psi_next)) {
                const double th = bisect_level([&](double s) { return domain_.psi(tip.x + s * (next.x - tip.x)); },
                                               level_for(psi_next), 1e-10);
                tip = blend(tip, next, th);
                return finish(StopCause::Exit);
            }
        } else if (caps.bridge_correction) {
            // Brownian-bridge crossing probability between two interior endpoints.
            const PsiJet ja = domain_.psi_jet(tip.x);
            const PsiJet jb = domain_.psi_jet(next.x);
            const Vec normal = ja.grad.normalized();
            CoefficientJet jx;
            problem_.coefficients(next.control, tip.x, 0, jx);
            const double var = (jx.sigma.transpose() * normal).squaredNorm() * dt;
            const double da = (ja.value - config_.stop_low) / ja.grad.norm();
            const double db = (jb.value - config_.stop_low) / jb.grad.norm();
            const double p_cross = var > 0.0 ? std::exp(-2.0 * da * db / var) : 0.0;
            if (rng.uniform() < p_cross && config_.stop_low == 0.0) {
                tip = next;
                tip.x = project_to_boundary(domain_, next.x);
                return finish(StopCause::Exit);
            }
        }

        tip = next;
        record_trace(tip);
        if (next_checkpoint < checkpoints.size() && tip.t >= checkpoints[next_checkpoint] - 1e-14) {
            out.checkpoints.push_back(tip);
            ++next_checkpoint;
        }
        if (observer) (*observer)(tip);
        if (config_.track.xi && tip.xi.norm() >= caps.xi_cap) return finish(StopCause::XiCap);
    }
}

StepStatus step_bundle(const BundleEngine& engine, const BundleState& tip, double dt, const Vec& dw,
                       BundleState& next) {
    return engine.step(tip, dt, dw, next);
}

PathBundle simulate_bundle(const BundleEngine& engine, const Vec& x0, const Vec& xi0, const Vec& eta0,
                           std::uint64_t seed, std::uint64_t path_index) {
    return engine.simulate(x0, xi0, eta0, seed, path_index);
}

double first_representation(const BundleState& s, const ScalarJet& v) {
    const double tilde = s.xi_discount + s.xi_weight;
    return std::exp(-s.phi) * (v.grad.dot(s.xi) + tilde * v.value) + s.xi_payoff;
}

double second_representation(const BundleState& s, const ScalarJet& v) {
    const double t_xi = s.xi_discount + s.xi_weight;
    const double t_eta =
        s.eta_weight + 2.0 * s.xi_weight * s.xi_discount + s.xi_discount * s.xi_discount + s.eta_discount;
    const double v_xi = v.grad.dot(s.xi);
    return std::exp(-s.phi) * (s.xi.dot(v.hess * s.xi) + v.grad.dot(s.eta) + 2.0 * t_xi * v_xi + t_eta * v.value) +
           s.eta_payoff;
}

}  // namespace qdlab
