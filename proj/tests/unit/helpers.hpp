#pragma once

#include "qdlab/builtins.hpp"
#include "qdlab/domain.hpp"
#include "qdlab/problem.hpp"

#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace qdlab::testing {

inline Vec vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

inline Mat mat2(double a, double b, double c, double d) {
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

/// Boundary data as a quadratic g(x) = g0 + (lin, x) + (x, quad x) / 2.
struct Quadratic {
    double g0 = 0.0;
    Vec lin;
    Mat quad;

    [[nodiscard]] ScalarJet operator()(const Vec& x) const {
        ScalarJet j;
        j.value = g0 + lin.dot(x) + 0.5 * x.dot(quad * x);
        j.grad = lin + quad * x;
        j.hess = quad;
        return j;
    }
};

inline Quadratic constant_g(int d, double value) { return {value, Vec::Zero(d), Mat::Zero(d, d)}; }

/// Space-independent coefficients, one entry per control.
struct ConstantControl {
    Mat sigma;
    Vec b;
    double c = 0.0;
    double f = 0.0;
};

inline ControlProblem constant_problem(std::vector<ConstantControl> controls, Quadratic g,
                                       std::vector<std::string> labels = {}, std::string name = "constant") {
    const int d = static_cast<int>(controls.front().sigma.rows());
    const int d1 = static_cast<int>(controls.front().sigma.cols());
    if (labels.empty()) {
        for (std::size_t a = 0; a < controls.size(); ++a) labels.push_back("u" + std::to_string(a));
    }
    const std::size_t n = controls.size();
    auto model = std::make_shared<LambdaModel>(
        d, d1, n,
        [controls](std::size_t a, const Vec&, int, CoefficientJet& out) {
            out.sigma = controls[a].sigma;
            out.b = controls[a].b;
            out.c = controls[a].c;
            out.f = controls[a].f;
        },
        [g](const Vec& x, int) { return g(x); });
    return ControlProblem(std::move(name), model, labels, 1.0);
}

inline Domain unit_ball(int d) { return Domain::ball(Vec::Zero(d), 1.0); }

}  // namespace qdlab::testing
