#include "qdlab/linalg.hpp"

#include <cmath>

namespace qdlab {

bool is_skew(const Mat& p, double tol) {
    if (p.rows() != p.cols()) return false;
    const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
    return (p + p.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Mat skew_exp(const Mat& p, double s) {
    if (!is_skew(p)) throw Error(ErrorCode::NonSkewInput, "matrix exponential expects a skew-symmetric argument");
    const Eigen::Index n = p.rows();
    const Mat a = s * p;
    const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
    if (n == 1 || norm == 0.0) return Mat::Identity(n, n);
    int squarings = 0;
    if (norm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
    const Mat b = a / std::ldexp(1.0, squarings);
    Mat result = Mat::Identity(n, n);
    Mat term = Mat::Identity(n, n);
    for (int k = 1; k < 40; ++k) {
        term = term * b / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-17) break;
    }
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

}  // namespace qdlab
