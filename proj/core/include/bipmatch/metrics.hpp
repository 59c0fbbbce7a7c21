#pragma once

#include <Eigen/Dense>
#include <optional>

#include "bipmatch/errors.hpp"
#include "bipmatch/graphs.hpp"

namespace bipmatch {

// Fraction of vertices mapped differently by p_hat and p_star; equals
// ||P_hat - P_star||_F^2 / (2n).
double vertex_error(const Permutation& p_hat, const Permutation& p_star);

// ||p_star relabeling of A - p_hat relabeling of A||_F^2 / (2 ||A||_F^2),
// the fraction of incorrect edges (zero for any automorphic image of the
// truth).
double edge_error(const UnipartiteGraph& a, const Permutation& p_hat, const Permutation& p_star);

// Edge false positive / negative rates over the upper triangle; a rate whose
// denominator is empty is reported absent.
struct EdgeConfusion {
  std::optional<double> fpr;
  std::optional<double> fnr;
};

EdgeConfusion edge_confusion(const Eigen::MatrixXi& w_hat, const Eigen::MatrixXi& w_true);

struct ErrorReport {
  double vertex_error = 0.0;
  double edge_error = 0.0;
  std::optional<double> fpr;
  std::optional<double> fnr;
};

}  // namespace bipmatch
