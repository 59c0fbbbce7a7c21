#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bipmatch/errors.hpp"
#include "bipmatch/graphs.hpp"

namespace bipmatch {

enum class ModelFamily { kIsing, kGaussian };

std::string to_string(ModelFamily family);
ModelFamily family_from_string(const std::string& s);

// MRF parameters: symmetric interaction matrix theta and node effects beta.
// The Ising joint is P(x) = exp(beta'x + sum_{i != j} theta_ij x_i x_j) / Z over
// x in {0,1}^n (the pair sum runs over ordered pairs, so each unordered pair
// contributes twice). The Gaussian model is N(mu, theta^{-1}) with mu =
// theta^{-1} beta.
class MrfParams {
 public:
  MrfParams(ModelFamily family, Eigen::MatrixXd theta, Eigen::VectorXd beta);

  ModelFamily family() const { return family_; }
  int n() const { return static_cast<int>(theta_.rows()); }
  const Eigen::MatrixXd& theta() const { return theta_; }
  const Eigen::VectorXd& beta() const { return beta_; }

  // Gaussian mean theta^{-1} beta; derived on demand.
  Eigen::VectorXd mu() const;

 private:
  ModelFamily family_;
  Eigen::MatrixXd theta_;
  Eigen::VectorXd beta_;
};

// n x m matrix whose columns are i.i.d. draws from the MRF; binary for Ising.
class BipartiteData {
 public:
  BipartiteData(Eigen::MatrixXd b, ModelFamily family);

  int n() const { return static_cast<int>(b_.rows()); }
  int m() const { return static_cast<int>(b_.cols()); }
  ModelFamily family() const { return family_; }
  const Eigen::MatrixXd& matrix() const { return b_; }

 private:
  Eigen::MatrixXd b_;
  ModelFamily family_;
};

// Systematic-sweep Gibbs sampler for the Ising joint. Each column is an
// independently seeded chain run for burn_in + thin full sweeps; the
// per-coordinate conditional is P(x_i = 1 | rest) = logistic(beta_i +
// 2 sum_{j != i} theta_ij x_j).
BipartiteData ising_gibbs_sample(const MrfParams& params, int m, int burn_in, int thin,
                                 std::uint64_t seed);

// i.i.d. N(mu, theta^{-1}) columns drawn through the Cholesky factor of theta.
BipartiteData gaussian_sample(const MrfParams& params, int m, std::uint64_t seed);

// Exhaustive Ising distribution over {0,1}^n; state s has bit i = x_i.
struct IsingTable {
  int n = 0;
  std::vector<double> prob;     // 2^n entries summing to 1
  std::vector<double> energy;   // beta'x + sum_{i != j} theta_ij x_i x_j
  double log_z = 0.0;

  double log_prob(std::uint32_t state) const { return energy[state] - log_z; }
};

// Hard capacity cap for 2^n enumerations.
inline constexpr int kMaxExactIsingN = 20;

IsingTable exact_ising_distribution(const MrfParams& params);

// Mean per-column log-likelihood of B under the model; enumeration for Ising
// (n <= 20), closed form for Gaussian.
double exact_loglik(const BipartiteData& b, const MrfParams& params);

// Profile MLE for the one-parameter restricted Ising model theta_ij =
// theta0 * 1{(P^T A P)_ij = 1}, beta = 0. theta_hat solves
// Tr(P^T A P Btilde) = Psi'(theta) and may be +-infinity at the boundary of
// the sufficient-statistic range; loglik is the (finite) profile value.
struct RestrictedProfile {
  double theta_hat = 0.0;
  double loglik = 0.0;
  double trace_stat = 0.0;
};

RestrictedProfile restricted_profile(const UnipartiteGraph& a, const Permutation& p,
                                     const BipartiteData& b);
double restricted_profile_theta(const UnipartiteGraph& a, const Permutation& p,
                                const BipartiteData& b);

// Unpenalized Ising MLE with theta constrained to a symmetric support
// (diagonal excluded, beta free), fitted by Newton steps on exact
// enumeration moments. n <= 20.
struct IsingMleFit {
  Eigen::MatrixXd theta;
  Eigen::VectorXd beta;
  double loglik = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
};

IsingMleFit exact_ising_mle(const BipartiteData& b, const Eigen::MatrixXi& support);

// Objective used by the exhaustive matcher.
//  - kIsingRestricted: one-parameter profile likelihood (the restricted model
//    above; the regime of the collapsing equivalence).
//  - kIsingExact: support-constrained full Ising MLE by enumeration.
//  - kGaussian: support-constrained Gaussian profile MLE.
enum class MatchObjective { kIsingRestricted, kIsingExact, kGaussian };

struct BruteForceResult {
  Permutation p;
  double score;
};

// Exhaustive search over all n! permutations (n <= 7) for the permutation
// maximizing the profile log-likelihood; ties resolved to the
// lexicographically smallest index map.
BruteForceResult brute_force_match_scored(const UnipartiteGraph& a, const BipartiteData& b,
                                          MatchObjective objective);
Permutation brute_force_match(const UnipartiteGraph& a, const BipartiteData& b,
                              MatchObjective objective);

// Bipartite CSV: a "# family=ising|gaussian" sidecar line, then n rows of m
// comma-separated values, no header.
BipartiteData read_bipartite_csv(const std::string& path);
void write_bipartite_csv(const BipartiteData& b, const std::string& path);

}  // namespace bipmatch
