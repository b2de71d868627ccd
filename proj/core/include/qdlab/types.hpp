#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qdlab {

/// Largest state or noise dimension supported by the stack-allocated linear algebra types.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

enum class ErrorCode {
    IllFormedDomain,
    NormalizationImpossible,
    InvalidLevels,
    InvalidArgument,
    UpsilonTooSmall,
    NonSkewInput,
    StepRejected,
    PathAborted,
    InvalidPerturbation,
    MissingBoundaryGradient,
    RegionMismatch,
    Underpowered,
    OutOfStencil,
    SchemaViolation,
    AssumptionViolated,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[nodiscard]] std::string format_vec(const Vec& v);

/// Validated pair of boundary-layer levels with 0 < delta < lambda^2 < lambda < 1.
class Levels {
public:
    Levels() = default;
    Levels(double delta, double lambda);

    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] double lambda_sq() const noexcept { return lambda_ * lambda_; }
    /// Below this level the switched recipe moves to the boundary construction.
    [[nodiscard]] double switch_low() const noexcept { return lambda_sq() + 0.25 * (lambda_ - lambda_sq()); }
    /// Above this level the switched recipe moves to the interior construction.
    [[nodiscard]] double switch_high() const noexcept { return lambda_sq() + 0.75 * (lambda_ - lambda_sq()); }

private:
    double delta_ = 1e-4;
    double lambda_ = 0.25;
};

}  // namespace qdlab
