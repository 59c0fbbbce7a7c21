#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

namespace bipmatch::detail {

// Lower-triangular Cholesky factorization. Returns the index (0-based order of
// the leading minor) of the first non-positive pivot, or nullopt on success.
inline std::optional<int> cholesky_lower(const Eigen::MatrixXd& a, Eigen::MatrixXd& l) {
  const int n = static_cast<int>(a.rows());
  l = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0)) return j;
    d = std::sqrt(d);
    l(j, j) = d;
    for (int i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / d;
    }
  }
  return std::nullopt;
}

inline bool is_positive_definite(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd l;
  return !cholesky_lower(a, l).has_value();
}

// log det of a PD matrix from its lower Cholesky factor.
inline double logdet_from_cholesky(const Eigen::MatrixXd& l) {
  double s = 0.0;
  for (int i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

inline bool is_symmetric(const Eigen::MatrixXd& a, double tol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = i + 1; j < a.cols(); ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
    }
  }
  return true;
}

}  // namespace bipmatch::detail
