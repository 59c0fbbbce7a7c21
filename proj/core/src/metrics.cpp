#include "bipmatch/metrics.hpp"

namespace bipmatch {

double vertex_error(const Permutation& p_hat, const Permutation& p_star) {
  if (p_hat.size() != p_star.size()) throw DimensionError("permutation sizes differ");
  int wrong = 0;
  for (int i = 0; i < p_hat.size(); ++i) {
    if (p_hat(i) != p_star(i)) ++wrong;
  }
  return static_cast<double>(wrong) / p_hat.size();
}

double edge_error(const UnipartiteGraph& a, const Permutation& p_hat, const Permutation& p_star) {
  if (a.n() != p_hat.size() || a.n() != p_star.size()) {
    throw DimensionError("graph and permutation sizes differ");
  }
  if (a.empty()) throw DomainError("edge error is undefined for an empty graph");
  const Eigen::MatrixXd w_star = permute_graph(a, p_star).adj();
  const Eigen::MatrixXd w_hat = permute_graph(a, p_hat).adj();
  return (w_star - w_hat).squaredNorm() / (2.0 * a.frobenius_sq());
}

EdgeConfusion edge_confusion(const Eigen::MatrixXi& w_hat, const Eigen::MatrixXi& w_true) {
  if (w_hat.rows() != w_true.rows() || w_hat.cols() != w_true.cols() ||
      w_hat.rows() != w_hat.cols()) {
    throw DimensionError("edge sets must be square matrices of equal size");
  }
  const int n = static_cast<int>(w_hat.rows());
  int fp = 0, fn = 0, negatives = 0, positives = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool t = w_true(i, j) != 0;
      const bool h = w_hat(i, j) != 0;
      if (t) {
        ++positives;
        if (!h) ++fn;
      } else {
        ++negatives;
        if (h) ++fp;
      }
    }
  }
  EdgeConfusion out;
  if (negatives > 0) out.fpr = static_cast<double>(fp) / negatives;
  if (positives > 0) out.fnr = static_cast<double>(fn) / positives;
  return out;
}

}  // namespace bipmatch
