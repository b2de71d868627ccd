#pragma once

#include "qdlab/problem.hpp"

#include <string>
#include <vector>

namespace qdlab {

/// Node values of every coefficient on a uniform tensor grid. Axis 0 varies fastest in the flat layout.
struct CoefficientTable {
    Vec lo;
    Vec hi;
    std::vector<int> nodes;  ///< nodes per axis, at least 3
    int noise_dim = 1;

    struct Control {
        std::string label;
        std::vector<std::vector<double>> sigma;  ///< entry (i, k) at position i * noise_dim + k
        std::vector<std::vector<double>> b;      ///< one array per coordinate; empty means zero drift
        std::vector<double> c;                   ///< empty means zero
        std::vector<double> f;                   ///< empty means zero
    };
    std::vector<Control> controls;
    std::vector<double> g;  ///< boundary data extended to the whole grid

    [[nodiscard]] int dim() const noexcept { return static_cast<int>(nodes.size()); }
    [[nodiscard]] std::size_t node_count() const noexcept;
};

/// Problem whose coefficients are tensor-product quadratic interpolants of the table.
/// Throws InvalidArgument on inconsistent sizes.
[[nodiscard]] ControlProblem make_table_problem(const CoefficientTable& table, std::string name = "table");

}  // namespace qdlab
