#include "bipmatch/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "bipmatch/rng.hpp"

namespace bipmatch {

namespace {

// applies the weighted penalty term of the relaxed objective
double penalty_term(const Eigen::MatrixXd& theta, const PenaltyWeights& weights, double lambda) {
  double pen = 0.0;
  for (int i = 0; i < theta.rows(); ++i) {
    for (int j = 0; j < theta.cols(); ++j) {
      if (i != j) pen += weights.omega()(i, j) * std::abs(theta(i, j));
    }
  }
  return lambda * pen;
}

Eigen::MatrixXd abs_zero_diag(const Eigen::MatrixXd& theta) {
  Eigen::MatrixXd m = theta.cwiseAbs();
  m = ((m + m.transpose()) / 2.0).eval();
  m.diagonal().setZero();
  return m;
}

DoublyStochastic seeded_initial(int n, const SeedSet& seeds) {
  const int n1 = seeds.size();
  std::vector<char> row_seeded(n, 0), col_seeded(n, 0);
  for (const auto& [x, y] : seeds.pairs) {
    row_seeded[x] = 1;
    col_seeded[y] = 1;
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [x, y] : seeds.pairs) d(x, y) = 1.0;
  const int n2 = n - n1;
  if (n2 > 0) {
    for (int i = 0; i < n; ++i) {
      if (row_seeded[i]) continue;
      for (int j = 0; j < n; ++j) {
        if (!col_seeded[j]) d(i, j) = 1.0 / n2;
      }
    }
  }
  return DoublyStochastic(std::move(d));
}

// free block of a seeded iterate, rows/cols ordered as seeded_faq_step expects
// (unseeded indices ascending)
DoublyStochastic free_block(const DoublyStochastic& d, const SeedSet& seeds) {
  const int n = d.n();
  std::vector<char> row_seeded(n, 0), col_seeded(n, 0);
  for (const auto& [x, y] : seeds.pairs) {
    row_seeded[x] = 1;
    col_seeded[y] = 1;
  }
  std::vector<int> rows, cols;
  for (int i = 0; i < n; ++i) {
    if (!row_seeded[i]) rows.push_back(i);
    if (!col_seeded[i]) cols.push_back(i);
  }
  Eigen::MatrixXd jb(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      jb(r, c) = d.matrix()(rows[r], cols[c]);
    }
  }
  return DoublyStochastic(std::move(jb));
}

struct CandidateMeta {
  Permutation p;
  int lambda_index;
  int iteration;
};

// midpoint of the barycenter and a random permutation matrix
DoublyStochastic random_start(int n, Rng& rng) {
  const Permutation p = Permutation::uniform_random(n, rng);
  return DoublyStochastic(0.5 * p.matrix() + 0.5 * barycenter(n).matrix());
}

// Shared alternation driver; the two algorithms differ only in the fit
// half-step and the selection score.
template <typename FitStep>
MatchResult run_alternation(const UnipartiteGraph& a, const BipartiteData& b,
                            const MatchConfig& cfg, ModelFamily family, FitStep fit_step) {
  const int n = a.n();
  cfg.validate(n);
  if (b.n() != n) throw DimensionError("graph and data sizes differ");

  const bool seeded = cfg.seeds.has_value() && !cfg.seeds->empty();
  if (seeded) {
    for (const auto& [x, y] : cfg.seeds->pairs) {
      if (x < 0 || x >= n || y < 0 || y >= n) throw SeedError("seed index out of range");
    }
  }

  MatchResult result;
  std::vector<CandidateMeta> candidates;

  for (int s = 0; s < static_cast<int>(cfg.lambda_grid.size()); ++s) {
    const double lambda = cfg.lambda_grid[s];
    try {
      DoublyStochastic d = seeded ? seeded_initial(n, *cfg.seeds) : barycenter(n);
      double prev_loss = std::numeric_limits<double>::quiet_NaN();
      for (int t = 1; t <= cfg.max_outer; ++t) {
        const PenaltyWeights weights = PenaltyWeights::from_doubly_stochastic(a, d);
        const auto fit = fit_step(weights, lambda, t);

        TraceRecord rec;
        rec.lambda_index = s;
        rec.lambda = lambda;
        rec.iteration = t;
        rec.profile_loss = fit.loss;
        rec.objective_fit = fit.base - penalty_term(fit.theta, weights, lambda);

        const Eigen::MatrixXd m = abs_zero_diag(fit.theta);
        const int n_free = seeded ? n - cfg.seeds->size() : n;
        auto run_fw = [&](const DoublyStochastic& start) {
          return seeded ? seeded_faq_step(a, m, *cfg.seeds, start, cfg.fw_max)
                        : faq_step(a, m, start, cfg.fw_max);
        };
        // warm start plus seeded random restarts; the best final iterate is
        // kept (so the relaxed objective still never decreases) and every
        // projection becomes a selection candidate
        QapStepResult step = run_fw(seeded ? free_block(d, *cfg.seeds) : d);
        std::vector<Permutation> extra;
        if (n_free > 0) {
          for (int r = 0; r < cfg.fw_restarts; ++r) {
            Rng rng(Rng::derive(Rng::derive(cfg.rng_seed, 1000 * s + t), r));
            const QapStepResult restart = run_fw(random_start(n_free, rng));
            extra.push_back(restart.projected);
            if (restart.objective_trace.back() > step.objective_trace.back()) {
              step = restart;
            }
          }
        }
        d = step.d;
        const PenaltyWeights new_weights = PenaltyWeights::from_doubly_stochastic(a, d);
        rec.objective_d = fit.base - penalty_term(fit.theta, new_weights, lambda);
        rec.projected = step.projected;

        const bool converged = t > 1 && std::abs(fit.loss - prev_loss) < cfg.conv_tol;
        rec.converged = converged;
        prev_loss = fit.loss;
        result.trace.push_back(rec);
        candidates.push_back({step.projected, s, t});
        for (const Permutation& p : extra) candidates.push_back({p, s, t});
        if (converged) break;
      }
    } catch (const Error& e) {
      result.failures.push_back({s, lambda, e.what()});
    }
  }

  if (candidates.empty()) {
    std::string detail;
    for (const auto& f : result.failures) detail += " [" + f.message + "]";
    throw SolverError("matching failed for every lambda:" + detail);
  }

  std::vector<Permutation> perms;
  perms.reserve(candidates.size());
  for (const auto& c : candidates) perms.push_back(c.p);
  const std::vector<ScoredCandidate> scored = evaluate_candidates(a, b, perms, family);
  const ScoredCandidate& best = scored.front();

  result.p_hat = best.p;
  result.selection_score = best.score;
  result.lambda_star = cfg.lambda_grid[candidates[best.first_seen].lambda_index];

  const Eigen::MatrixXi support = permute_graph(a, best.p).support();
  if (family == ModelFamily::kGaussian) {
    const CovarianceEstimate cov = sample_covariance(b);
    result.theta_hat = constrained_gaussian_mle(cov, support).theta_hat;
    result.beta_hat = std::nullopt;
  } else {
    const PseudoParams refit = constrained_pseudo_mle(b, support);
    result.theta_hat = refit.theta;
    result.beta_hat = refit.beta;
  }
  return result;
}

// One fit half-step: theta feeds the assignment step, loss is the unpenalized
// profile loss used for convergence, base is the smooth part of the penalized
// objective in the scale the fit optimizes (per-column for both families).
struct FitHalf {
  Eigen::MatrixXd theta;
  double loss = 0.0;
  double base = 0.0;
};

}  // namespace

std::vector<double> default_lambda_grid() {
  std::vector<double> grid(10);
  for (int i = 0; i < 10; ++i) {
    const double e = -2.5 + 2.0 * i / 9.0;
    grid[i] = std::pow(10.0, e);
  }
  return grid;
}

void MatchConfig::validate(int n) const {
  if (lambda_grid.empty()) throw ConfigError("lambda grid must be non-empty");
  double prev = 0.0;
  for (double l : lambda_grid) {
    if (!(l > 0.0)) throw ConfigError("lambda grid values must be strictly positive");
    if (l <= prev && prev != 0.0) throw ConfigError("lambda grid must be sorted ascending");
    prev = l;
  }
  if (max_outer < 1) throw ConfigError("max_outer must be at least 1");
  if (fw_max < 1) throw ConfigError("fw_max must be at least 1");
  if (!(conv_tol > 0.0)) throw ConfigError("conv_tol must be positive");
  if (seeds.has_value() && seeds->size() > n) throw ConfigError("more seeds than vertices");
}

std::vector<ScoredCandidate> evaluate_candidates(const UnipartiteGraph& a, const BipartiteData& b,
                                                 const std::vector<Permutation>& candidates,
                                                 ModelFamily family) {
  if (candidates.empty()) throw DomainError("candidate list is empty");

  std::optional<CovarianceEstimate> cov;
  if (family == ModelFamily::kGaussian) cov = sample_covariance(b);

  // the profile score depends on the candidate only through the relabeled
  // support, so fits are shared across permutations with the same image
  std::map<std::vector<int>, double> support_score;
  std::vector<ScoredCandidate> unique;
  std::map<std::vector<int>, int> seen;
  for (std::size_t idx = 0; idx < candidates.size(); ++idx) {
    const auto& p = candidates[idx];
    if (seen.count(p.map())) continue;
    seen[p.map()] = static_cast<int>(idx);
    const Eigen::MatrixXi support = permute_graph(a, p).support();
    std::vector<int> key(support.data(), support.data() + support.size());
    double score;
    if (auto it = support_score.find(key); it != support_score.end()) {
      score = it->second;
    } else {
      try {
        if (family == ModelFamily::kGaussian) {
          score = gaussian_profile_loss(constrained_gaussian_mle(*cov, support), *cov);
        } else {
          score = pseudo_loglik(b, constrained_pseudo_mle(b, support));
        }
      } catch (const Error&) {
        score = -std::numeric_limits<double>::infinity();
      }
      support_score.emplace(std::move(key), score);
    }
    unique.push_back({p, score, static_cast<int>(idx)});
  }
  std::stable_sort(unique.begin(), unique.end(), [](const auto& x, const auto& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.first_seen < y.first_seen;
  });
  if (std::isinf(unique.front().score)) {
    throw SolverError("profile scoring failed for every candidate");
  }
  return unique;
}

MatchResult match_invcov(const UnipartiteGraph& a, const BipartiteData& b,
                         const MatchConfig& cfg) {
  if (b.m() < 2) throw DomainError("match_invcov needs at least two data columns");
  const CovarianceEstimate cov = sample_covariance(b);
  auto fit_step = [&](const PenaltyWeights& weights, double lambda, int) {
    const PrecisionEstimate est = weighted_graphical_lasso(cov, weights, lambda);
    FitHalf half;
    half.theta = est.theta_hat;
    half.loss = gaussian_profile_loss(est.theta_hat, cov);
    half.base = half.loss;
    return half;
  };
  return run_alternation(a, b, cfg, ModelFamily::kGaussian, fit_step);
}

MatchResult match_pseudo(const UnipartiteGraph& a, const BipartiteData& b,
                         const MatchConfig& cfg) {
  if (b.family() != ModelFamily::kIsing) throw ModelError("match_pseudo requires binary data");
  PseudoParams warm;
  warm.theta = Eigen::MatrixXd::Zero(b.n(), b.n());
  warm.beta = Eigen::VectorXd::Zero(b.n());
  auto fit_step = [&, warm](const PenaltyWeights& weights, double lambda, int t) mutable {
    if (t == 1) {  // fresh start per lambda
      warm.theta.setZero();
      warm.beta.setZero();
    }
    warm = fit_pseudo_all_nodes(b, weights, lambda, warm);
    FitHalf half;
    half.theta = warm.theta;
    half.loss = pseudo_loglik(b, warm);
    half.base = half.loss / b.m();
    return half;
  };
  return run_alternation(a, b, cfg, ModelFamily::kIsing, fit_step);
}

}  // namespace bipmatch
