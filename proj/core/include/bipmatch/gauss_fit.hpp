#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bipmatch/errors.hpp"
#include "bipmatch/graphs.hpp"
#include "bipmatch/models.hpp"

namespace bipmatch {

// Sample covariance with 1/m normalization (the displayed estimator, not the
// unbiased 1/(m-1) version).
struct CovarianceEstimate {
  Eigen::MatrixXd sigma_hat;
  Eigen::VectorXd mu_hat;
  int m = 0;

  int n() const { return static_cast<int>(sigma_hat.rows()); }
};

CovarianceEstimate sample_covariance(const BipartiteData& b);

// Symmetric nonnegative per-entry penalty multipliers with a zero diagonal.
class PenaltyWeights {
 public:
  explicit PenaltyWeights(Eigen::MatrixXd omega);

  static PenaltyWeights uniform(int n);
  // omega_ij = max(0, 1 - (D^T A D)_ij), the relaxed constraint weights;
  // negative values (a reward, which would break convexity) are clamped to 0.
  static PenaltyWeights from_doubly_stochastic(const UnipartiteGraph& a, const DoublyStochastic& d);

  int n() const { return static_cast<int>(omega_.rows()); }
  const Eigen::MatrixXd& omega() const { return omega_; }

 private:
  Eigen::MatrixXd omega_;
};

struct PrecisionEstimate {
  Eigen::MatrixXd theta_hat;
  double objective = 0.0;  // penalized objective at theta_hat
  int iterations = 0;      // outer sweeps used
  double kkt_residual = 0.0;
  bool converged = false;
  std::vector<double> objective_trace;  // penalized objective after each sweep
};

// log det(theta) - Tr(sigma_hat * theta); the Gaussian profile loss.
double gaussian_profile_loss(const Eigen::MatrixXd& theta, const CovarianceEstimate& cov);
double gaussian_profile_loss(const PrecisionEstimate& est, const CovarianceEstimate& cov);

// Entrywise weighted graphical lasso
//   max_theta  log det(theta) - Tr(sigma theta) - lambda sum_{i != j} omega_ij |theta_ij|
// solved by primal block coordinate ascent over columns with an inner
// coordinate-descent lasso; the diagonal is unpenalized. The sweep objective
// is non-decreasing. On non-convergence the best iterate is returned with
// converged = false and the KKT residual filled in.
PrecisionEstimate weighted_graphical_lasso(const CovarianceEstimate& cov,
                                           const PenaltyWeights& weights, double lambda,
                                           double tol = 1e-6, int max_sweeps = 200);

// Profile MLE of theta restricted to a symmetric off-diagonal support
// (diagonal always free), realized as the huge-penalty limit of the weighted
// graphical lasso followed by exact zeroing off the support and, if a
// Cholesky pivot fails, a tiny diagonal repair.
PrecisionEstimate constrained_gaussian_mle(const CovarianceEstimate& cov,
                                           const Eigen::MatrixXi& support, double tol = 1e-6);

}  // namespace bipmatch
