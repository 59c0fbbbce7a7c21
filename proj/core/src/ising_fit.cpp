#include "bipmatch/ising_fit.hpp"

#include <algorithm>
#include <cmath>

#include "bipmatch/detail/math.hpp"

namespace bipmatch {

namespace {

constexpr double kCoeffCap = 50.0;

void require_binary(const BipartiteData& b) {
  if (!((b.matrix().array() == 0.0) || (b.matrix().array() == 1.0)).all()) {
    throw DomainError("pseudolikelihood machinery requires binary data");
  }
}

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// One node's coordinate-descent state. Predictors are binary, so the columns
// where a row is nonzero are precomputed once and the logistic values are
// cached alongside the linear predictor.
struct NodeState {
  const Eigen::MatrixXd& b;
  int j, n, m;
  Eigen::VectorXd y;       // response row
  Eigen::VectorXd eta, p;  // linear predictor and logistic(eta) per column
  std::vector<std::vector<int>> nz;

  NodeState(const BipartiteData& data, int node, const std::vector<int>& coords)
      : b(data.matrix()), j(node), n(data.n()), m(data.m()), y(b.row(node)) {
    nz.resize(n);
    for (int i : coords) {
      for (int k = 0; k < m; ++k) {
        if (b(i, k) != 0.0) nz[i].push_back(k);
      }
    }
  }

  void reset_eta(const Eigen::VectorXd& theta_col, double beta) {
    eta = (b.transpose() * theta_col).array() + beta;
    p.resize(m);
    for (int k = 0; k < m; ++k) p[k] = detail::logistic(eta[k]);
  }

  double mean_loglik() const {
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
      s -= detail::log1pexp((y[k] != 0.0 ? -1.0 : 1.0) * eta[k]);
    }
    return s / m;
  }

  // gradient of the mean loglik for coordinate i (i == j: intercept)
  double gradient(int i) const {
    double g = 0.0;
    if (i == j) {
      for (int k = 0; k < m; ++k) g += y[k] - p[k];
    } else {
      for (int k : nz[i]) g += y[k] - p[k];
    }
    return g / m;
  }

  double curvature(int i) const {
    double c = 0.0;
    if (i == j) {
      for (int k = 0; k < m; ++k) c += p[k] * (1.0 - p[k]);
    } else {
      for (int k : nz[i]) c += p[k] * (1.0 - p[k]);
    }
    return c / m;
  }

  // loglik change (mean scale) if coordinate i moves by delta
  double loglik_delta(int i, double delta) const {
    double d = 0.0;
    auto term = [&](int k) {
      const double s = y[k] != 0.0 ? -1.0 : 1.0;
      d += detail::log1pexp(s * eta[k]) - detail::log1pexp(s * (eta[k] + delta));
    };
    if (i == j) {
      for (int k = 0; k < m; ++k) term(k);
    } else {
      for (int k : nz[i]) term(k);
    }
    return d / m;
  }

  void shift(int i, double delta) {
    if (i == j) {
      for (int k = 0; k < m; ++k) {
        eta[k] += delta;
        p[k] = detail::logistic(eta[k]);
      }
    } else {
      for (int k : nz[i]) {
        eta[k] += delta;
        p[k] = detail::logistic(eta[k]);
      }
    }
  }
};

NodewiseFit fit_node(const BipartiteData& data, int j, const Eigen::VectorXd& rho, double tol,
                     const Eigen::VectorXd& theta_init, double beta_init,
                     const std::vector<int>* coord_subset) {
  const int n = data.n();
  const int m = data.m();

  std::vector<int> coords;
  if (coord_subset) {
    coords = *coord_subset;
  } else {
    for (int i = 0; i < n; ++i) {
      if (i != j) coords.push_back(i);
    }
  }

  NodeState st(data, j, coords);
  NodewiseFit fit;
  fit.theta_col = theta_init;
  fit.theta_col[j] = 0.0;  // no self term
  fit.beta_j = beta_init;
  st.reset_eta(fit.theta_col, fit.beta_j);

  // 1/4 curvature bound of the logistic loss; binary predictors
  Eigen::VectorXd curv_bound = Eigen::VectorXd::Zero(n);
  for (int i : coords) curv_bound[i] = st.nz[i].size() / (4.0 * m);
  const double curv0 = 0.25;

  auto objective = [&]() {
    double pen = 0.0;
    for (int i : coords) pen += rho[i] * std::abs(fit.theta_col[i]);
    return st.mean_loglik() - pen;
  };

  auto write_value = [&](int i, double value) {
    if (i == j) {
      st.shift(i, value - fit.beta_j);
      fit.beta_j = value;
    } else {
      st.shift(i, value - fit.theta_col[i]);
      fit.theta_col[i] = value;
    }
  };

  // Unpenalized coefficients take a curvature (Newton) step when it gains at
  // least as much as the guaranteed 1/4-bound step; on separable data a flat
  // loglik with a persistent gradient jumps straight to the cap instead of
  // crawling towards it.
  auto update_unpenalized = [&](int i) {
    const double g = st.gradient(i);
    const double c = st.curvature(i);
    const double cur = i == j ? fit.beta_j : fit.theta_col[i];
    if (c <= 1e-10 && g != 0.0) {
      const double leap = g > 0.0 ? kCoeffCap : -kCoeffCap;
      if (leap != cur && st.loglik_delta(i, leap - cur) >= -1e-15) {
        write_value(i, leap);
        return std::abs(leap - cur);
      }
    }
    const double bound = i == j ? curv0 : curv_bound[i];
    const double mm_value = std::clamp(cur + g / bound, -kCoeffCap, kCoeffCap);
    const double nt_value = std::clamp(cur + g / std::max(c, 1e-12), -kCoeffCap, kCoeffCap);
    double value = mm_value;
    if (nt_value != mm_value && st.loglik_delta(i, nt_value - cur) >= 0.0) {
      value = nt_value;  // any non-decreasing Newton step beats the bound step
    }
    if (value != cur) write_value(i, value);
    return std::abs(value - cur);
  };

  auto update_coord = [&](int i) {
    if (curv_bound[i] <= 0.0) return 0.0;  // predictor row is all zero
    if (rho[i] == 0.0) return update_unpenalized(i);
    const double g = st.gradient(i);
    double nv = soft_threshold(curv_bound[i] * fit.theta_col[i] + g, rho[i]) / curv_bound[i];
    nv = std::clamp(nv, -kCoeffCap, kCoeffCap);
    const double delta = nv - fit.theta_col[i];
    if (delta != 0.0) write_value(i, nv);
    return std::abs(delta);
  };

  // full passes over every coordinate, with inner sweeps restricted to the
  // currently active (nonzero) set between them
  const int max_passes = 2000;
  int passes = 0;
  bool done = false;
  while (!done && passes < max_passes) {
    double full_delta = update_unpenalized(j);
    for (int i : coords) full_delta = std::max(full_delta, update_coord(i));
    ++passes;
    fit.objective_trace.push_back(objective());
    if (full_delta <= tol) {
      done = true;
      break;
    }
    std::vector<int> working;
    for (int i : coords) {
      if (fit.theta_col[i] != 0.0) working.push_back(i);
    }
    while (passes < max_passes) {
      double delta = update_unpenalized(j);
      for (int i : working) delta = std::max(delta, update_coord(i));
      ++passes;
      fit.objective_trace.push_back(objective());
      if (delta <= tol) break;
    }
  }
  fit.passes = passes;
  fit.objective = fit.objective_trace.empty() ? objective() : fit.objective_trace.back();

  // KKT residual over the coordinates plus the intercept
  double res = std::abs(st.gradient(j));
  bool capped = std::abs(fit.beta_j) >= kCoeffCap;
  for (int i : coords) {
    if (curv_bound[i] <= 0.0) continue;
    const double g = st.gradient(i);
    if (fit.theta_col[i] != 0.0) {
      res = std::max(res, std::abs(g - rho[i] * (fit.theta_col[i] > 0 ? 1.0 : -1.0)));
      capped = capped || std::abs(fit.theta_col[i]) >= kCoeffCap;
    } else {
      res = std::max(res, std::max(0.0, std::abs(g) - rho[i]));
    }
  }
  fit.kkt_residual = res;
  fit.separable_warning = capped;
  return fit;
}

Eigen::VectorXd node_penalties(const PenaltyWeights& weights, int j, double lambda) {
  Eigen::VectorXd rho = lambda * weights.omega().col(j);
  rho[j] = 0.0;
  return rho;
}

}  // namespace

double pseudo_loglik(const BipartiteData& b, const PseudoParams& params) {
  require_binary(b);
  if (params.theta.rows() != b.n() || params.theta.cols() != b.n() ||
      params.beta.size() != b.n()) {
    throw DimensionError("parameter and data sizes differ");
  }
  if (params.theta.diagonal().cwiseAbs().maxCoeff() != 0.0) {
    throw DomainError("pseudolikelihood theta must have a zero diagonal");
  }
  const Eigen::MatrixXd eta =
      (params.theta.transpose() * b.matrix()).colwise() + params.beta;
  double total = 0.0;
  for (int j = 0; j < b.n(); ++j) {
    for (int k = 0; k < b.m(); ++k) {
      const double sign = b.matrix()(j, k) != 0.0 ? 1.0 : -1.0;
      total -= detail::log1pexp(-sign * eta(j, k));
    }
  }
  return total;
}

NodewiseFit lasso_logistic_node(const BipartiteData& b, int j, const PenaltyWeights& weights,
                                double lambda, double tol) {
  return lasso_logistic_node(b, j, weights, lambda, tol, Eigen::VectorXd::Zero(b.n()), 0.0);
}

NodewiseFit lasso_logistic_node(const BipartiteData& b, int j, const PenaltyWeights& weights,
                                double lambda, double tol, const Eigen::VectorXd& theta_init,
                                double beta_init) {
  require_binary(b);
  if (j < 0 || j >= b.n()) throw DomainError("node index out of range");
  if (weights.n() != b.n()) throw DimensionError("weights and data sizes differ");
  if (lambda < 0.0) throw DomainError("lambda must be nonnegative");
  if (theta_init.size() != b.n()) throw DimensionError("theta_init has the wrong length");
  return fit_node(b, j, node_penalties(weights, j, lambda), tol, theta_init, beta_init, nullptr);
}

PseudoParams fit_pseudo_all_nodes(const BipartiteData& b, const PenaltyWeights& weights,
                                  double lambda) {
  PseudoParams init;
  init.theta = Eigen::MatrixXd::Zero(b.n(), b.n());
  init.beta = Eigen::VectorXd::Zero(b.n());
  return fit_pseudo_all_nodes(b, weights, lambda, init);
}

PseudoParams fit_pseudo_all_nodes(const BipartiteData& b, const PenaltyWeights& weights,
                                  double lambda, const PseudoParams& init) {
  const int n = b.n();
  PseudoParams out;
  out.theta = Eigen::MatrixXd::Zero(n, n);
  out.beta = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    try {
      const NodewiseFit fit = lasso_logistic_node(b, j, weights, lambda, 1e-7,
                                                  init.theta.col(j), init.beta[j]);
      out.theta.col(j) = fit.theta_col;
      out.beta[j] = fit.beta_j;
    } catch (const Error& e) {
      throw SolverError("nodewise fit failed at node " + std::to_string(j) + ": " + e.what());
    }
  }
  out.theta = ((out.theta + out.theta.transpose()) / 2.0).eval();
  out.theta.diagonal().setZero();
  return out;
}

PseudoParams constrained_pseudo_mle(const BipartiteData& b, const Eigen::MatrixXi& support) {
  require_binary(b);
  const int n = b.n();
  if (support.rows() != n || support.cols() != n) throw DimensionError("support size mismatch");
  if (support != support.transpose().eval()) throw DomainError("support must be symmetric");

  PseudoParams out;
  out.theta = Eigen::MatrixXd::Zero(n, n);
  out.beta = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd rho = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    std::vector<int> coords;
    for (int i = 0; i < n; ++i) {
      if (i != j && support(i, j) != 0) coords.push_back(i);
    }
    try {
      const NodewiseFit fit =
          fit_node(b, j, rho, 1e-7, Eigen::VectorXd::Zero(n), 0.0, &coords);
      out.theta.col(j) = fit.theta_col;
      out.beta[j] = fit.beta_j;
    } catch (const Error& e) {
      throw SolverError("nodewise fit failed at node " + std::to_string(j) + ": " + e.what());
    }
  }
  out.theta = ((out.theta + out.theta.transpose()) / 2.0).eval();
  out.theta.diagonal().setZero();
  return out;
}

}  // namespace bipmatch
