#include "qdlab/types.hpp"

#include <cmath>
#include <sstream>

namespace qdlab {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::IllFormedDomain: return "IllFormedDomain";
        case ErrorCode::NormalizationImpossible: return "NormalizationImpossible";
        case ErrorCode::InvalidLevels: return "InvalidLevels";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::UpsilonTooSmall: return "UpsilonTooSmall";
        case ErrorCode::NonSkewInput: return "NonSkewInput";
        case ErrorCode::StepRejected: return "StepRejected";
        case ErrorCode::PathAborted: return "PathAborted";
        case ErrorCode::InvalidPerturbation: return "InvalidPerturbation";
        case ErrorCode::MissingBoundaryGradient: return "MissingBoundaryGradient";
        case ErrorCode::RegionMismatch: return "RegionMismatch";
        case ErrorCode::Underpowered: return "Underpowered";
        case ErrorCode::OutOfStencil: return "OutOfStencil";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    }
    return "Unknown";
}

std::string format_vec(const Vec& v) {
    std::ostringstream os;
    os.precision(12);
    os << '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) os << ", ";
        os << v[i];
    }
    os << ']';
    return os.str();
}

Levels::Levels(double delta, double lambda) : delta_(delta), lambda_(lambda) {
    const bool ok = std::isfinite(delta) && std::isfinite(lambda) && delta > 0.0 && lambda > 0.0 &&
                    delta < lambda * lambda && lambda < 1.0;
    if (!ok) {
        std::ostringstream os;
        os << "levels must satisfy 0 < delta < lambda^2 < lambda < 1 (delta=" << delta
           << ", lambda=" << lambda << ")";
        throw Error(ErrorCode::InvalidLevels, os.str());
    }
}

}  // namespace qdlab
