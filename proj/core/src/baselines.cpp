#include "bipmatch/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bipmatch/gauss_fit.hpp"
#include "bipmatch/ising_fit.hpp"

namespace bipmatch {

namespace {

constexpr int kMaxBruteForceN = 7;

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Lasso linear regression of row j on the other (centered) rows,
// min (1/2m)||y - X'beta||^2 + lambda sum |beta|, by coordinate descent on the
// Gram system.
Eigen::VectorXd lasso_linear_node(const Eigen::MatrixXd& centered, int j, double lambda) {
  const int n = static_cast<int>(centered.rows());
  const int m = static_cast<int>(centered.cols());
  std::vector<int> others;
  for (int i = 0; i < n; ++i) {
    if (i != j) others.push_back(i);
  }
  const int p = n - 1;
  Eigen::MatrixXd x(p, m);
  for (int i = 0; i < p; ++i) x.row(i) = centered.row(others[i]);
  const Eigen::VectorXd y = centered.row(j);
  const Eigen::MatrixXd gram = (x * x.transpose()) / m;
  const Eigen::VectorXd c = (x * y) / m;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd gb = Eigen::VectorXd::Zero(p);  // gram * beta
  for (int pass = 0; pass < 2000; ++pass) {
    double max_delta = 0.0;
    for (int i = 0; i < p; ++i) {
      if (!(gram(i, i) > 0.0)) continue;
      const double nv = soft_threshold(c[i] - (gb[i] - gram(i, i) * beta[i]), lambda) / gram(i, i);
      const double delta = nv - beta[i];
      if (delta != 0.0) {
        gb += delta * gram.col(i);
        beta[i] = nv;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta <= 1e-8) break;
  }
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < p; ++i) full[others[i]] = beta[i];
  return full;
}

}  // namespace

Eigen::MatrixXi CollapsedGraph::edges() const {
  Eigen::MatrixXi e = (matrix.array() != 0.0).cast<int>().matrix();
  e.diagonal().setZero();
  return e;
}

CollapsedGraph one_mode_projection(const BipartiteData& b) {
  CollapsedGraph g;
  g.method = CollapseMethod::kOmp;
  g.matrix = (b.matrix() * b.matrix().transpose()) / b.m();
  g.matrix = ((g.matrix + g.matrix.transpose()) / 2.0).eval();
  return g;
}

CollapsedGraph covariance_collapse(const BipartiteData& b) {
  CollapsedGraph g;
  g.method = CollapseMethod::kCov;
  g.matrix = sample_covariance(b).sigma_hat;
  return g;
}

CollapsedGraph correlation_matrix(const BipartiteData& b) {
  const CovarianceEstimate cov = sample_covariance(b);
  const int n = cov.n();
  std::string degenerate;
  for (int i = 0; i < n; ++i) {
    if (!(cov.sigma_hat(i, i) > 0.0)) {
      degenerate += (degenerate.empty() ? "" : ", ") + std::to_string(i);
    }
  }
  if (!degenerate.empty()) {
    throw DomainError("rows with zero variance: " + degenerate);
  }
  CollapsedGraph g;
  g.method = CollapseMethod::kCorr;
  g.matrix.resize(n, n);
  for (int i = 0; i < n; ++i) {
    g.matrix(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double r =
          cov.sigma_hat(i, j) / std::sqrt(cov.sigma_hat(i, i) * cov.sigma_hat(j, j));
      g.matrix(i, j) = r;
      g.matrix(j, i) = r;
    }
  }
  return g;
}

CollapsedGraph mb_edges(const BipartiteData& b, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("mb_edges needs lambda > 0");
  const int n = b.n();
  Eigen::MatrixXd coef(n, n);
  coef.setZero();
  if (b.family() == ModelFamily::kIsing) {
    const PenaltyWeights w = PenaltyWeights::uniform(n);
    for (int j = 0; j < n; ++j) {
      coef.col(j) = lasso_logistic_node(b, j, w, lambda).theta_col;
    }
  } else {
    const Eigen::VectorXd mu = b.matrix().rowwise().mean();
    const Eigen::MatrixXd centered = b.matrix().colwise() - mu;
    for (int j = 0; j < n; ++j) {
      coef.col(j) = lasso_linear_node(centered, j, lambda);
    }
  }
  CollapsedGraph g;
  g.method = CollapseMethod::kMb;
  g.matrix.resize(n, n);
  g.matrix.setZero();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      // OR rule: an edge if either nodewise coefficient is selected
      if (coef(i, j) != 0.0 || coef(j, i) != 0.0) {
        g.matrix(i, j) = 1.0;
        g.matrix(j, i) = 1.0;
      }
    }
  }
  return g;
}

CollapsedGraph glasso_edges(const BipartiteData& b, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("glasso_edges needs lambda > 0");
  const CovarianceEstimate cov = sample_covariance(b);
  const PrecisionEstimate est =
      weighted_graphical_lasso(cov, PenaltyWeights::uniform(b.n()), lambda);
  CollapsedGraph g;
  g.method = CollapseMethod::kGlasso;
  g.matrix = est.theta_hat.cwiseAbs();
  return g;
}

namespace {

int upper_edge_count(const Eigen::MatrixXi& e) {
  int c = 0;
  for (int i = 0; i < e.rows(); ++i) {
    for (int j = i + 1; j < e.cols(); ++j) {
      if (e(i, j) != 0) ++c;
    }
  }
  return c;
}

}  // namespace

EdgeSelection glasso_edges_auto(const BipartiteData& b, const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("empty lambda grid");
  const CovarianceEstimate cov = sample_covariance(b);
  const int m = b.m();
  std::optional<EdgeSelection> best;
  for (double lambda : grid) {
    const PrecisionEstimate est =
        weighted_graphical_lasso(cov, PenaltyWeights::uniform(b.n()), lambda);
    CollapsedGraph g;
    g.method = CollapseMethod::kGlasso;
    g.matrix = est.theta_hat.cwiseAbs();
    // BIC-style: total Gaussian loglik minus log(m) * edges / 2
    const double loglik = 0.5 * m * gaussian_profile_loss(est.theta_hat, cov);
    const double score =
        loglik - std::log(static_cast<double>(m)) * upper_edge_count(g.edges()) / 2.0;
    if (!best || score > best->score) {
      best = EdgeSelection{std::move(g), lambda, score};
    }
  }
  return *best;
}

EdgeSelection mb_edges_auto(const BipartiteData& b, const std::vector<double>& grid) {
  if (grid.empty()) throw DomainError("empty lambda grid");
  const int n = b.n();
  const int m = b.m();
  const bool ising = b.family() == ModelFamily::kIsing;
  const PenaltyWeights w = PenaltyWeights::uniform(n);
  Eigen::VectorXd mu;
  Eigen::MatrixXd centered;
  if (!ising) {
    mu = b.matrix().rowwise().mean();
    centered = b.matrix().colwise() - mu;
  }
  std::optional<EdgeSelection> best;
  for (double lambda : grid) {
    Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(n, n);
    double loglik = 0.0;  // nodewise pseudo log-likelihood, total over columns
    for (int j = 0; j < n; ++j) {
      if (ising) {
        const NodewiseFit fit = lasso_logistic_node(b, j, w, lambda);
        coef.col(j) = fit.theta_col;
        loglik += m * (fit.objective + lambda * fit.theta_col.cwiseAbs().sum());
      } else {
        const Eigen::VectorXd beta = lasso_linear_node(centered, j, lambda);
        coef.col(j) = beta;
        const Eigen::VectorXd resid =
            centered.row(j).transpose() - centered.transpose() * beta;
        loglik += -0.5 * m * std::log(std::max(resid.squaredNorm() / m, 1e-300));
      }
    }
    CollapsedGraph g;
    g.method = CollapseMethod::kMb;
    g.matrix = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (coef(i, j) != 0.0 || coef(j, i) != 0.0) {
          g.matrix(i, j) = 1.0;
          g.matrix(j, i) = 1.0;
        }
      }
    }
    const double score =
        loglik - std::log(static_cast<double>(m)) * upper_edge_count(g.edges()) / 2.0;
    if (!best || score > best->score) {
      best = EdgeSelection{std::move(g), lambda, score};
    }
  }
  return *best;
}

Permutation collapse_and_match(const UnipartiteGraph& a, const CollapsedGraph& collapsed,
                               const std::optional<SeedSet>& seeds) {
  if (collapsed.matrix.rows() != a.n() || collapsed.matrix.cols() != a.n()) {
    throw DimensionError("graph and collapsed matrix sizes differ");
  }
  if (seeds.has_value() && !seeds->empty()) {
    const int n2 = a.n() - seeds->size();
    if (n2 == 0) {
      std::vector<int> map(a.n(), -1);
      for (const auto& [x, y] : seeds->pairs) map[x] = y;
      return Permutation(map);
    }
    return seeded_faq_step(a, collapsed.matrix, *seeds, barycenter(n2)).projected;
  }
  return faq_step(a, collapsed.matrix, barycenter(a.n())).projected;
}

BruteForceQap brute_force_qap(const UnipartiteGraph& a, const Eigen::MatrixXd& m, LapSense sense) {
  const int n = a.n();
  if (m.rows() != n || m.cols() != n) throw DimensionError("graph and matrix sizes differ");
  if (n > kMaxBruteForceN) {
    throw CapacityError("brute_force_qap enumerates n! permutations; n=" + std::to_string(n) +
                        " exceeds the cap of " + std::to_string(kMaxBruteForceN));
  }
  std::vector<int> map(n);
  for (int i = 0; i < n; ++i) map[i] = i;
  std::optional<BruteForceQap> best;
  do {
    const Permutation p(map);
    const Eigen::MatrixXd w = permute_graph(a, p).adj();
    const double obj = (w.array() * m.array()).sum();
    const bool better = !best || (sense == LapSense::kMax ? obj > best->objective
                                                          : obj < best->objective);
    if (better) best = BruteForceQap{p, obj};
  } while (std::next_permutation(map.begin(), map.end()));
  return *best;
}

CounterexampleInstance fig2_beta_instance() {
  // Path on three vertices with equal interactions; the endpoints get large
  // node effects, so their co-occurrence dominates the one-mode projection
  // even though they are not adjacent.
  const UnipartiteGraph a = chain_graph(3);
  const double theta0 = 0.8;
  Eigen::MatrixXd theta = theta0 * a.adj();
  Eigen::VectorXd beta(3);
  beta << 1.5, -2.0, 1.5;
  return {a, MrfParams(ModelFamily::kIsing, std::move(theta), std::move(beta))};
}

CounterexampleInstance fig2_theta_instance() {
  // Two disconnected blocks: a weakly coupled triangle and a strongly coupled
  // path; the collapsed graph ranks the path block's pairs (including its
  // non-edge) above every triangle pair, so classical matching swaps the
  // blocks.
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(6, 6);
  auto edge = [&adj](int i, int j) {
    adj(i, j) = 1.0;
    adj(j, i) = 1.0;
  };
  edge(0, 1);
  edge(1, 2);
  edge(3, 4);
  edge(3, 5);
  edge(4, 5);
  const double theta_path = 1.4;
  const double theta_triangle = 0.25;
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(6, 6);
  theta(0, 1) = theta(1, 0) = theta_path;
  theta(1, 2) = theta(2, 1) = theta_path;
  theta(3, 4) = theta(4, 3) = theta_triangle;
  theta(3, 5) = theta(5, 3) = theta_triangle;
  theta(4, 5) = theta(5, 4) = theta_triangle;
  // centering rule: beta_i = -1/2 sum_j theta_ij
  Eigen::VectorXd beta = -0.5 * theta.rowwise().sum();
  return {UnipartiteGraph(std::move(adj)),
          MrfParams(ModelFamily::kIsing, std::move(theta), std::move(beta))};
}

}  // namespace bipmatch
