#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "bipmatch/assign.hpp"
#include "bipmatch/errors.hpp"
#include "bipmatch/graphs.hpp"
#include "bipmatch/models.hpp"

namespace bipmatch {

enum class CollapseMethod { kOmp, kCov, kCorr, kGlasso, kMb };

// Bipartite data collapsed to an n x n symmetric matrix. For kGlasso the
// matrix is |theta_hat| and the edge set is its exact nonzero pattern; for
// kMb the matrix is the 0/1 selected edge matrix itself.
struct CollapsedGraph {
  Eigen::MatrixXd matrix;
  CollapseMethod method = CollapseMethod::kOmp;

  Eigen::MatrixXi edges() const;  // nonzero off-diagonal pattern
};

// Co-occurrence one-mode projection Btilde = B B' / m.
CollapsedGraph one_mode_projection(const BipartiteData& b);

// Sample covariance of the rows of B.
CollapsedGraph covariance_collapse(const BipartiteData& b);

// Pearson correlations between the rows of B; rows of zero variance are an
// error (all offending indices are listed).
CollapsedGraph correlation_matrix(const BipartiteData& b);

// Neighborhood selection: nodewise lasso (linear for Gaussian data, logistic
// for binary data) with the OR combination rule.
CollapsedGraph mb_edges(const BipartiteData& b, double lambda);

// Uniform-weight graphical lasso estimate |theta_hat|.
CollapsedGraph glasso_edges(const BipartiteData& b, double lambda);

// Grid selection for the edge-estimation baselines by a BIC-style score
// (loglik - log(m) * edges / 2).
struct EdgeSelection {
  CollapsedGraph graph;
  double lambda_star = 0.0;
  double score = 0.0;
};

EdgeSelection mb_edges_auto(const BipartiteData& b, const std::vector<double>& grid);
EdgeSelection glasso_edges_auto(const BipartiteData& b, const std::vector<double>& grid);

// Classical collapse-then-match: Frank-Wolfe maximization of
// Tr(D' A D collapsed) from the barycenter, projected to a permutation.
Permutation collapse_and_match(const UnipartiteGraph& a, const CollapsedGraph& collapsed,
                               const std::optional<SeedSet>& seeds = std::nullopt);

// Exhaustive trace optimizer over all n! permutations (n <= 7), the oracle
// counterpart of collapse_and_match; kMax trace equals the Frobenius argmin.
struct BruteForceQap {
  Permutation p;
  double objective = 0.0;
};

BruteForceQap brute_force_qap(const UnipartiteGraph& a, const Eigen::MatrixXd& m, LapSense sense);

// Canned instances reproducing the collapsing counterexamples: equal
// interactions with heterogeneous node effects, and two blocks with unequal
// interaction weights.
struct CounterexampleInstance {
  UnipartiteGraph a;
  MrfParams params;
};

CounterexampleInstance fig2_beta_instance();
CounterexampleInstance fig2_theta_instance();

}  // namespace bipmatch
