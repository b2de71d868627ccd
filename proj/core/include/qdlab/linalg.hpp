#pragma once

#include "qdlab/types.hpp"

namespace qdlab {

/// exp(s P) for skew-symmetric P by scaling and squaring of a truncated Taylor series.
/// The result is orthogonal with determinant +1. Throws NonSkewInput when P + P^T is not negligible.
[[nodiscard]] Mat skew_exp(const Mat& p, double s = 1.0);

[[nodiscard]] bool is_skew(const Mat& p, double tol = 1e-12);

}  // namespace qdlab
