#include "qdlab/builtins.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace qdlab {

namespace {

double param(const ParamMap& p, const std::string& key, double fallback) {
    const auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

void require_known(const std::string& name, const ParamMap& p, const std::set<std::string>& known) {
    for (const auto& [key, value] : p) {
        if (!known.contains(key)) {
            throw Error(ErrorCode::InvalidArgument, "unknown parameter '" + key + "' for problem " + name);
        }
        if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "parameter '" + key + "' is not finite");
    }
}

ScalarJet constant_jet(int d, double value) { return {value, Vec::Zero(d), Mat::Zero(d, d)}; }

ControlProblem finish(std::string name, std::shared_ptr<const CoefficientModel> model, std::vector<std::string> labels) {
    ControlProblem p(std::move(name), std::move(model), std::move(labels), 1.0);
    const double k0 = std::ceil(100.0 * sampled_k0(p, default_domain(p.dim()), 500)) / 100.0;
    return p.with_k0(k0);
}

ControlProblem make_ode1d(const ParamMap& p) {
    require_known("ode1d", p, {"sigma", "b", "c", "f", "g"});
    const double sigma = param(p, "sigma", std::numbers::sqrt2);
    const double b = param(p, "b", 0.0);
    const double c = param(p, "c", 0.0);
    const double f = param(p, "f", 1.0);
    const double g = param(p, "g", 0.0);
    if (c < 0.0) throw Error(ErrorCode::InvalidArgument, "discount rate must be non-negative");
    auto model = std::make_shared<LambdaModel>(
        1, 1, 1,
        [=](std::size_t, const Vec&, int, CoefficientJet& j) {
            j.sigma(0, 0) = sigma;
            j.b[0] = b;
            j.c = c;
            j.f = f;
        },
        [=](const Vec&, int) { return constant_jet(1, g); });
    return finish("ode1d", model, {"a"});
}

ControlProblem make_twocontrol(const ParamMap& p) {
    require_known("twocontrol1d", p, {"f"});
    const double f = param(p, "f", -1.0);
    auto model = std::make_shared<LambdaModel>(
        1, 1, 2,
        [=](std::size_t a, const Vec&, int, CoefficientJet& j) {
            // a = sigma^2 / 2 equals the control value 1 or 2.
            j.sigma(0, 0) = std::sqrt(2.0 * static_cast<double>(a + 1));
            j.f = f;
        },
        [](const Vec&, int) { return constant_jet(1, 0.0); });
    return finish("twocontrol1d", model, {"1", "2"});
}

ControlProblem make_laplace2d(const ParamMap& p) {
    require_known("laplace2d", p, {"f"});
    const double f = param(p, "f", 1.0);
    auto model = std::make_shared<LambdaModel>(
        2, 2, 1,
        [=](std::size_t, const Vec&, int, CoefficientJet& j) {
            j.sigma = std::numbers::sqrt2 * Mat::Identity(2, 2);
            j.f = f;
        },
        [](const Vec&, int) { return constant_jet(2, 0.0); });
    return finish("laplace2d", model, {"a"});
}

ControlProblem make_degenerate2d(const ParamMap& p) {
    require_known("degenerate2d", p, {"angle", "inner_radius", "strength", "f"});
    const double angle = param(p, "angle", std::numbers::pi / 4.0);
    const double r0 = param(p, "inner_radius", 0.6);
    const double k = param(p, "strength", 4.0);
    const double f = param(p, "f", 0.0);
    Vec e(2), e_perp(2);
    e << std::cos(angle), std::sin(angle);
    e_perp << -std::sin(angle), std::cos(angle);
    auto model = std::make_shared<LambdaModel>(
        2, 2, 1,
        [=](std::size_t, const Vec& x, int order, CoefficientJet& j) {
            // Second column k * max(0, |x|^2 - r0^2)^3 * sqrt(2) e_perp switches on near the boundary.
            const double u = x.squaredNorm() - r0 * r0;
            const double up = std::max(u, 0.0);
            const double kappa = k * up * up * up;
            j.sigma.col(0) = std::numbers::sqrt2 * e;
            j.sigma.col(1) = std::numbers::sqrt2 * kappa * e_perp;
            j.f = f;
            if (order >= 1) {
                for (int i = 0; i < 2; ++i) {
                    const double dk = 6.0 * k * up * up * x[i];
                    j.dsigma[i].col(1) = std::numbers::sqrt2 * dk * e_perp;
                }
            }
            if (order >= 2) {
                for (int i = 0; i < 2; ++i) {
                    for (int l = 0; l < 2; ++l) {
                        const double d2k = 24.0 * k * up * x[i] * x[l] + (i == l ? 6.0 * k * up * up : 0.0);
                        j.d2sigma[i][l].col(1) = std::numbers::sqrt2 * d2k * e_perp;
                    }
                }
            }
        },
        [=](const Vec& x, int) {
            // g bends along e_perp: half the squared coordinate across the degenerate direction.
            const double s = x.dot(e_perp);
            return ScalarJet{0.5 * s * s, s * e_perp, e_perp * e_perp.transpose()};
        });
    return finish("degenerate2d", model, {"a"});
}

ControlProblem make_exa(const ParamMap& p) {
    require_known("paper-example-exa", p, {});
    auto model = std::make_shared<LambdaModel>(
        2, 1, 1,
        [](std::size_t, const Vec&, int, CoefficientJet& j) { j.sigma << std::numbers::sqrt2, std::numbers::sqrt2; },
        [](const Vec& x, int) {
            Vec e(2);
            e << 1.0, -1.0;
            const double s = x.dot(e);
            return ScalarJet{0.25 * s * s, 0.5 * s * e, 0.5 * e * e.transpose()};
        });
    return finish("paper-example-exa", model, {"a"});
}

}  // namespace

std::vector<BuiltinInfo> builtin_problems() {
    return {
        {"ode1d", "one-dimensional linear problem a v'' + b v' - c v + f = 0, v = g at +-1",
         {"sigma", "b", "c", "f", "g"}},
        {"twocontrol1d", "two controls a in {1, 2} with running payoff f on (-1, 1)", {"f"}},
        {"laplace2d", "sigma = sqrt(2) I on the unit disk with running payoff f", {"f"}},
        {"degenerate2d", "rank-one interior diffusion along a fixed direction, full rank near the unit circle",
         {"angle", "inner_radius", "strength", "f"}},
        {"paper-example-exa", "constant diffusion a = [[1, 1], [1, 1]]", {}},
    };
}

ControlProblem make_builtin_problem(const std::string& name, const ParamMap& params) {
    if (name == "ode1d") return make_ode1d(params);
    if (name == "twocontrol1d") return make_twocontrol(params);
    if (name == "laplace2d") return make_laplace2d(params);
    if (name == "degenerate2d") return make_degenerate2d(params);
    if (name == "paper-example-exa") return make_exa(params);
    throw Error(ErrorCode::InvalidArgument, "unknown built-in problem '" + name + "'");
}

std::optional<ClosedForm> builtin_closed_form(const std::string& name, const ParamMap& params) {
    if (name == "ode1d") {
        const double sigma = param(params, "sigma", std::numbers::sqrt2);
        const double b = param(params, "b", 0.0);
        const double c = param(params, "c", 0.0);
        const double f = param(params, "f", 1.0);
        const double g = param(params, "g", 0.0);
        if (b != 0.0) return std::nullopt;
        const double a = 0.5 * sigma * sigma;
        if (c == 0.0) {
            return ClosedForm([=](const Vec& x) {
                return ScalarJet{g + f * (1.0 - x[0] * x[0]) / (2.0 * a), Vec::Constant(1, -f * x[0] / a),
                                 Mat::Constant(1, 1, -f / a)};
            });
        }
        const double k = std::sqrt(c / a);
        const double amp = (g - f / c) / std::cosh(k);
        return ClosedForm([=](const Vec& x) {
            return ScalarJet{f / c + amp * std::cosh(k * x[0]), Vec::Constant(1, amp * k * std::sinh(k * x[0])),
                             Mat::Constant(1, 1, amp * k * k * std::cosh(k * x[0]))};
        });
    }
    if (name == "twocontrol1d") {
        const double f = param(params, "f", -1.0);
        const double a = f < 0.0 ? 2.0 : 1.0;
        return ClosedForm([=](const Vec& x) {
            return ScalarJet{f * (1.0 - x[0] * x[0]) / (2.0 * a), Vec::Constant(1, -f * x[0] / a),
                             Mat::Constant(1, 1, -f / a)};
        });
    }
    if (name == "laplace2d") {
        const double f = param(params, "f", 1.0);
        return ClosedForm([=](const Vec& x) {
            return ScalarJet{0.25 * f * (1.0 - x.squaredNorm()), Vec(-0.5 * f * x),
                             Mat(-0.5 * f * Mat::Identity(2, 2))};
        });
    }
    return std::nullopt;
}

std::optional<std::string> builtin_optimal_control(const std::string& name, const ParamMap& params) {
    if (name == "twocontrol1d") return param(params, "f", -1.0) < 0.0 ? "2" : "1";
    if (name == "ode1d" || name == "laplace2d" || name == "degenerate2d" || name == "paper-example-exa") return "a";
    return std::nullopt;
}

Domain default_domain(int dim) { return Domain::ball(Vec::Zero(dim), 1.0); }

}  // namespace qdlab
