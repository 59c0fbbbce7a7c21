#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bipmatch/errors.hpp"
#include "bipmatch/gauss_fit.hpp"
#include "bipmatch/models.hpp"

namespace bipmatch {

// One node's penalized logistic fit: column theta_col (theta_col[j] = 0) and
// intercept beta_j. The objective is the mean per-column conditional
// log-likelihood minus lambda * sum_i omega_ij |theta_ij| (glmnet-style 1/m
// normalization, so lambda is comparable across sample sizes).
struct NodewiseFit {
  Eigen::VectorXd theta_col;
  double beta_j = 0.0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  bool separable_warning = false;  // a coefficient hit the +-50 cap
  int passes = 0;
  std::vector<double> objective_trace;  // penalized objective after each pass
};

// Nodewise parameters; theta has a zero diagonal and is symmetrized by
// averaging after the per-node fits.
struct PseudoParams {
  Eigen::MatrixXd theta;
  Eigen::VectorXd beta;
};

// Log-pseudo-likelihood: sum over nodes j and columns k of
// log P(B_jk | B_{-j,k}) under the logistic conditional with logit
// beta_j + B_k' theta_j ({0,1} response coding).
double pseudo_loglik(const BipartiteData& b, const PseudoParams& params);

// Lasso penalized logistic regression of node j on the remaining rows of B.
// Cyclic coordinate descent with the 1/4 quadratic curvature bound;
// coefficients are capped at +-50 when the data are separable.
NodewiseFit lasso_logistic_node(const BipartiteData& b, int j, const PenaltyWeights& weights,
                                double lambda, double tol = 1e-7);
NodewiseFit lasso_logistic_node(const BipartiteData& b, int j, const PenaltyWeights& weights,
                                double lambda, double tol, const Eigen::VectorXd& theta_init,
                                double beta_init);

// Runs lasso_logistic_node for every node, then symmetrizes theta by
// averaging theta_ij and theta_ji.
PseudoParams fit_pseudo_all_nodes(const BipartiteData& b, const PenaltyWeights& weights,
                                  double lambda);
PseudoParams fit_pseudo_all_nodes(const BipartiteData& b, const PenaltyWeights& weights,
                                  double lambda, const PseudoParams& init);

// Unpenalized nodewise fits restricted to a symmetric support (coordinates
// off the support are fixed at zero), symmetrized; the profile estimator used
// for model selection.
PseudoParams constrained_pseudo_mle(const BipartiteData& b, const Eigen::MatrixXi& support);

}  // namespace bipmatch
