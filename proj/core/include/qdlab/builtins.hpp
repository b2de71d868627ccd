#pragma once

#include "qdlab/domain.hpp"
#include "qdlab/problem.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qdlab {

using ParamMap = std::map<std::string, double>;

struct BuiltinInfo {
    std::string name;
    std::string summary;
    std::vector<std::string> parameters;
};

[[nodiscard]] std::vector<BuiltinInfo> builtin_problems();

/// Constructs a named built-in problem. Unknown parameters raise InvalidArgument.
///
///   ode1d              sigma, b, c, f, g constants on an interval; one control
///   twocontrol1d       a in {1, 2}, running payoff f; sup picks the extreme control
///   laplace2d          sigma = sqrt(2) I in two dimensions, running payoff f
///   degenerate2d       rank-one diffusion in the interior, full rank near the unit circle
///   paper-example-exa  constant a = [[1, 1], [1, 1]]
[[nodiscard]] ControlProblem make_builtin_problem(const std::string& name, const ParamMap& params = {});

/// Closed-form value function of the built-in on its default unit-ball domain, if known.
[[nodiscard]] std::optional<ClosedForm> builtin_closed_form(const std::string& name, const ParamMap& params = {});

/// Optimal control label of the built-in when it is constant in space.
[[nodiscard]] std::optional<std::string> builtin_optimal_control(const std::string& name, const ParamMap& params = {});

[[nodiscard]] Domain default_domain(int dim);

}  // namespace qdlab
