#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "bipmatch/assign.hpp"
#include "bipmatch/gauss_fit.hpp"
#include "bipmatch/graphs.hpp"
#include "bipmatch/ising_fit.hpp"
#include "bipmatch/models.hpp"

namespace bipmatch {

// S* = 10 values logarithmically spaced between 10^-2.5 and 10^-0.5.
std::vector<double> default_lambda_grid();

struct MatchConfig {
  std::vector<double> lambda_grid = default_lambda_grid();
  int max_outer = 20;  // T*
  int fw_max = 30;
  // Extra Frank-Wolfe starts per assignment step from seeded random points of
  // the polytope; the best final iterate wins and every projection joins the
  // candidate pool. Zero restores the single warm start.
  int fw_restarts = 3;
  double conv_tol = 1e-4;  // on the change of the unpenalized profile loss
  std::optional<SeedSet> seeds;
  std::uint64_t rng_seed = 0;  // drives the restart points only

  void validate(int n) const;
};

struct TraceRecord {
  int lambda_index = 0;
  double lambda = 0.0;
  int iteration = 0;           // outer iteration t, 1-based
  double objective_fit = 0.0;  // penalized objective after the fit half-step
  double objective_d = 0.0;    // penalized objective after the assignment half-step
  double profile_loss = 0.0;   // unpenalized loss at the fitted parameters
  Permutation projected = Permutation::identity(1);
  bool converged = false;
};

struct LambdaFailure {
  int lambda_index = 0;
  double lambda = 0.0;
  std::string message;
};

struct MatchResult {
  Permutation p_hat = Permutation::identity(1);
  Eigen::MatrixXd theta_hat;
  std::optional<Eigen::VectorXd> beta_hat;
  double lambda_star = 0.0;
  double selection_score = 0.0;
  std::vector<TraceRecord> trace;
  std::vector<LambdaFailure> failures;
};

struct ScoredCandidate {
  Permutation p;
  double score = 0.0;
  int first_seen = 0;  // index into the supplied candidate list
};

// Deduplicates the candidates and scores each by the family-appropriate
// constrained profile likelihood; returned in descending score order, ties
// resolved by earlier discovery.
std::vector<ScoredCandidate> evaluate_candidates(const UnipartiteGraph& a, const BipartiteData& b,
                                                 const std::vector<Permutation>& candidates,
                                                 ModelFamily family);

// Matching by penalized inverse covariance estimation: per lambda, alternate
// the weighted graphical lasso with weights 1 - (D'AD)_ij and a Frank-Wolfe
// assignment step, collect every projected permutation, then select the one
// maximizing the constrained Gaussian profile likelihood.
MatchResult match_invcov(const UnipartiteGraph& a, const BipartiteData& b,
                         const MatchConfig& cfg);

// Matching by penalized pseudolikelihood: the same loop with penalized
// nodewise logistic fits and |symmetrized theta| in the assignment step;
// selection maximizes the constrained pseudolikelihood.
MatchResult match_pseudo(const UnipartiteGraph& a, const BipartiteData& b,
                         const MatchConfig& cfg);

}  // namespace bipmatch
