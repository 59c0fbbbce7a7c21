#include "bipmatch/gauss_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bipmatch/detail/linalg.hpp"

namespace bipmatch {

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double penalized_objective(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& sigma,
                           const Eigen::MatrixXd& rho) {
  Eigen::MatrixXd l;
  if (detail::cholesky_lower(theta, l)) return -std::numeric_limits<double>::infinity();
  double pen = 0.0;
  for (int i = 0; i < theta.rows(); ++i) {
    for (int j = 0; j < theta.cols(); ++j) {
      if (i != j) pen += rho(i, j) * std::abs(theta(i, j));
    }
  }
  return detail::logdet_from_cholesky(l) - (sigma.array() * theta.array()).sum() - pen;
}

// KKT residual of the entrywise-weighted problem; w_exact must be theta^{-1}.
double kkt_residual(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& w_exact,
                    const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& rho) {
  double res = 0.0;
  const int n = static_cast<int>(theta.rows());
  for (int i = 0; i < n; ++i) {
    res = std::max(res, std::abs(w_exact(i, i) - sigma(i, i)));
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double gap = sigma(i, j) - w_exact(i, j);
      if (theta(i, j) != 0.0) {
        res = std::max(res, std::abs(gap + rho(i, j) * (theta(i, j) > 0 ? 1.0 : -1.0)));
      } else {
        res = std::max(res, std::max(0.0, std::abs(gap) - rho(i, j)));
      }
    }
  }
  return res;
}

}  // namespace

CovarianceEstimate sample_covariance(const BipartiteData& b) {
  if (b.m() < 2) {
    throw DomainError("sample covariance needs m >= 2 columns, got " + std::to_string(b.m()));
  }
  CovarianceEstimate cov;
  cov.m = b.m();
  cov.mu_hat = b.matrix().rowwise().mean();
  const Eigen::MatrixXd centered = b.matrix().colwise() - cov.mu_hat;
  cov.sigma_hat = (centered * centered.transpose()) / b.m();
  cov.sigma_hat = ((cov.sigma_hat + cov.sigma_hat.transpose()) / 2.0).eval();
  return cov;
}

PenaltyWeights::PenaltyWeights(Eigen::MatrixXd omega) : omega_(std::move(omega)) {
  if (omega_.rows() != omega_.cols()) throw DimensionError("penalty weights must be square");
  if (!detail::is_symmetric(omega_)) throw DomainError("penalty weights must be symmetric");
  if ((omega_.array() < 0.0).any()) throw DomainError("penalty weights must be nonnegative");
  if (omega_.diagonal().cwiseAbs().maxCoeff() != 0.0) {
    throw DomainError("penalty weights must have a zero diagonal");
  }
}

PenaltyWeights PenaltyWeights::uniform(int n) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Ones(n, n);
  w.diagonal().setZero();
  return PenaltyWeights(std::move(w));
}

PenaltyWeights PenaltyWeights::from_doubly_stochastic(const UnipartiteGraph& a,
                                                      const DoublyStochastic& d) {
  if (a.n() != d.n()) throw DimensionError("graph and doubly stochastic sizes differ");
  Eigen::MatrixXd dad = d.matrix().transpose() * a.adj() * d.matrix();
  dad = ((dad + dad.transpose()) / 2.0).eval();
  Eigen::MatrixXd w = (1.0 - dad.array()).cwiseMax(0.0).matrix();
  w.diagonal().setZero();
  return PenaltyWeights(std::move(w));
}

double gaussian_profile_loss(const Eigen::MatrixXd& theta, const CovarianceEstimate& cov) {
  if (theta.rows() != cov.n() || theta.cols() != cov.n()) {
    throw DimensionError("theta and covariance sizes differ");
  }
  Eigen::MatrixXd l;
  if (detail::cholesky_lower(theta, l)) {
    throw DomainError("profile loss requires a positive definite theta");
  }
  return detail::logdet_from_cholesky(l) - (cov.sigma_hat.array() * theta.array()).sum();
}

double gaussian_profile_loss(const PrecisionEstimate& est, const CovarianceEstimate& cov) {
  return gaussian_profile_loss(est.theta_hat, cov);
}

PrecisionEstimate weighted_graphical_lasso(const CovarianceEstimate& cov,
                                           const PenaltyWeights& weights, double lambda,
                                           double tol, int max_sweeps) {
  const int n = cov.n();
  if (weights.n() != n) throw DimensionError("weights and covariance sizes differ");
  if (lambda < 0.0) throw DomainError("lambda must be nonnegative");
  const Eigen::MatrixXd& s = cov.sigma_hat;
  const Eigen::MatrixXd rho = lambda * weights.omega();

  for (int i = 0; i < n; ++i) {
    if (!(s(i, i) > 0.0)) {
      throw SolverError("covariance has a zero-variance coordinate at index " + std::to_string(i));
    }
  }
  if (!detail::is_positive_definite(s)) {
    double min_rho = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) min_rho = std::min(min_rho, rho(i, j));
      }
    }
    if (n > 1 && !(min_rho > 0.0)) {
      throw SolverError(
          "covariance is singular and some off-diagonal is unpenalized; objective is unbounded");
    }
  }

  PrecisionEstimate est;
  if (n == 1) {
    est.theta_hat = Eigen::MatrixXd::Constant(1, 1, 1.0 / s(0, 0));
    est.objective = penalized_objective(est.theta_hat, s, rho);
    est.iterations = 0;
    est.kkt_residual = 0.0;
    est.converged = true;
    return est;
  }

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    theta(i, i) = 1.0 / s(i, i);
    w(i, i) = s(i, i);
  }

  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  const double inner_tol = 1e-9 * scale;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  int sweeps = 0;

  std::vector<int> others(n - 1);
  Eigen::VectorXd th(n - 1), r(n - 1), s12(n - 1), rho_col(n - 1), v(n - 1);
  Eigen::MatrixXd m11(n - 1, n - 1);

  while (sweeps < max_sweeps) {
    ++sweeps;
    for (int j = 0; j < n; ++j) {
      int idx = 0;
      for (int i = 0; i < n; ++i) {
        if (i != j) others[idx++] = i;
      }
      const double s22 = s(j, j);
      for (int a = 0; a < n - 1; ++a) {
        s12[a] = s(others[a], j);
        rho_col[a] = rho(others[a], j);
        th[a] = theta(others[a], j);
        for (int c = 0; c < n - 1; ++c) {
          m11(a, c) = w(others[a], others[c]) - w(others[a], j) * w(j, others[c]) / w(j, j);
        }
      }
      // inner lasso: min 1/2 th' (s22 m11) th + s12' th + sum rho |th|,
      // warm-started from the current column so every pass is an ascent step
      r = m11 * th;
      for (int pass = 0; pass < 1000; ++pass) {
        double max_delta = 0.0;
        for (int a = 0; a < n - 1; ++a) {
          const double quad = s22 * m11(a, a);
          if (!(quad > 0.0)) continue;
          const double lin = s22 * (r[a] - m11(a, a) * th[a]) + s12[a];
          const double nv = soft_threshold(-lin, rho_col[a]) / quad;
          const double delta = nv - th[a];
          if (delta != 0.0) {
            r += delta * m11.col(a);
            th[a] = nv;
            max_delta = std::max(max_delta, std::abs(delta));
          }
        }
        if (max_delta <= inner_tol) break;
      }
      v = m11 * th;
      theta(j, j) = 1.0 / s22 + th.dot(v);
      for (int a = 0; a < n - 1; ++a) {
        theta(others[a], j) = th[a];
        theta(j, others[a]) = th[a];
      }
      // block-inverse update keeps w = theta^{-1}
      for (int a = 0; a < n - 1; ++a) {
        for (int c = 0; c < n - 1; ++c) {
          w(others[a], others[c]) = m11(a, c) + s22 * v[a] * v[c];
        }
        w(others[a], j) = -s22 * v[a];
        w(j, others[a]) = -s22 * v[a];
      }
      w(j, j) = s22;
    }

    est.objective_trace.push_back(penalized_objective(theta, s, rho));

    // refresh the inverse and test stationarity
    Eigen::MatrixXd l;
    if (!detail::cholesky_lower(theta, l)) {
      Eigen::MatrixXd w_exact =
          l.transpose().triangularView<Eigen::Upper>().solve(
              l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n)));
      w_exact = ((w_exact + w_exact.transpose()) / 2.0).eval();
      w = w_exact;
      residual = kkt_residual(theta, w_exact, s, rho);
      if (residual <= tol) {
        converged = true;
        break;
      }
    }
  }

  est.theta_hat = ((theta + theta.transpose()) / 2.0).eval();
  est.objective = penalized_objective(est.theta_hat, s, rho);
  est.iterations = sweeps;
  est.kkt_residual = residual;
  est.converged = converged;
  return est;
}

PrecisionEstimate constrained_gaussian_mle(const CovarianceEstimate& cov,
                                           const Eigen::MatrixXi& support, double tol) {
  const int n = cov.n();
  if (support.rows() != n || support.cols() != n) throw DimensionError("support size mismatch");
  if (support != support.transpose().eval()) throw DomainError("support must be symmetric");

  Eigen::MatrixXd omega = Eigen::MatrixXd::Ones(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || support(i, j) != 0) omega(i, j) = 0.0;
    }
  }
  const double lambda = 1e6 * std::max(cov.sigma_hat.cwiseAbs().maxCoeff(), 1e-12);
  PrecisionEstimate est = weighted_graphical_lasso(cov, PenaltyWeights(omega), lambda, tol, 200);

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && support(i, j) == 0) est.theta_hat(i, j) = 0.0;
    }
  }
  Eigen::MatrixXd l;
  double delta = 1e-8;
  while (detail::cholesky_lower(est.theta_hat, l)) {
    est.theta_hat.diagonal().array() += delta;
    delta *= 10.0;
    if (delta > 1e-2) {
      throw SolverError("constrained MLE repair failed: theta is not positive definite");
    }
  }

  // stationarity on the free entries: (theta^{-1})_ij = sigma_ij
  Eigen::MatrixXd w_exact = l.transpose().triangularView<Eigen::Upper>().solve(
      l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n)));
  double res = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || support(i, j) != 0) {
        res = std::max(res, std::abs(w_exact(i, j) - cov.sigma_hat(i, j)));
      }
    }
  }
  est.kkt_residual = res;
  est.converged = res <= tol;
  est.objective = gaussian_profile_loss(est.theta_hat, cov);
  return est;
}

}  // namespace bipmatch
