#pragma once

// Test-only reference implementations, deliberately independent of the
// library's solver paths: exhaustive assignment search, a proximal-gradient
// graphical lasso, and a proximal-gradient lasso logistic regression.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracles {

struct BruteLap {
  std::vector<int> map;
  double value = 0.0;
};

// Exhaustive linear assignment (minimization) over all n! permutations.
inline BruteLap brute_force_lap_min(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  BruteLap best;
  best.value = std::numeric_limits<double>::infinity();
  do {
    double v = 0.0;
    for (int i = 0; i < n; ++i) v += cost(i, perm[i]);
    if (v < best.value) {
      best.value = v;
      best.map = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Proximal-gradient ascent for
//   max log det(theta) - tr(sigma theta) - sum_{i != j} rho_ij |theta_ij|
// with positive-definiteness kept by backtracking. Slow but simple.
inline Eigen::MatrixXd prox_gradient_glasso(const Eigen::MatrixXd& sigma,
                                            const Eigen::MatrixXd& rho, int max_iter = 200000,
                                            double tol = 1e-12) {
  const int n = static_cast<int>(sigma.rows());
  Eigen::MatrixXd theta = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) theta(i, i) = 1.0 / std::max(sigma(i, i), 1e-8);

  auto objective = [&](const Eigen::MatrixXd& t) {
    const Eigen::LLT<Eigen::MatrixXd> llt(t);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    double logdet = 0.0;
    const Eigen::MatrixXd l = llt.matrixL();
    for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(l(i, i));
    double pen = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) pen += rho(i, j) * std::abs(t(i, j));
      }
    }
    return logdet - (sigma.array() * t.array()).sum() - pen;
  };

  double step = 1.0;
  double obj = objective(theta);
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::MatrixXd grad = theta.inverse() - sigma;
    bool accepted = false;
    for (int bt = 0; bt < 60 && !accepted; ++bt) {
      Eigen::MatrixXd cand = theta + step * grad;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (i == j) continue;
          const double t = step * rho(i, j);
          cand(i, j) = cand(i, j) > t ? cand(i, j) - t : (cand(i, j) < -t ? cand(i, j) + t : 0.0);
        }
      }
      cand = ((cand + cand.transpose()) / 2.0).eval();
      const double cand_obj = objective(cand);
      if (cand_obj > -std::numeric_limits<double>::infinity() && cand_obj >= obj - 1e-16) {
        const double gain = cand_obj - obj;
        theta = cand;
        obj = cand_obj;
        accepted = true;
        if (gain < tol && step < 1e-4) return theta;
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) break;
    step = std::min(step * 1.25, 1.0);
  }
  return theta;
}

// Proximal-gradient for the lasso logistic node problem:
//   max (1/m) sum_k [y_k eta_k - log(1 + exp(eta_k))] - sum_i rho_i |w_i|
// where eta = X' w + b. Returns (w, b).
inline std::pair<Eigen::VectorXd, double> prox_gradient_logistic(
    const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& rho,
    int max_iter = 500000, double tol = 1e-9) {
  const int p = static_cast<int>(x.rows());
  const int m = static_cast<int>(x.cols());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  double b = 0.0;
  // Lipschitz bound for the mean logistic loss gradient
  const double lip = 0.25 * (x.colwise().squaredNorm().maxCoeff() + 1.0);
  const double step = 1.0 / lip;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd eta = x.transpose() * w;
    eta.array() += b;
    Eigen::VectorXd r(m);
    for (int k = 0; k < m; ++k) r[k] = y[k] - 1.0 / (1.0 + std::exp(-eta[k]));
    const Eigen::VectorXd gw = (x * r) / m;
    const double gb = r.mean();
    Eigen::VectorXd w_new = w + step * gw;
    for (int i = 0; i < p; ++i) {
      const double t = step * rho[i];
      w_new[i] = w_new[i] > t ? w_new[i] - t : (w_new[i] < -t ? w_new[i] + t : 0.0);
    }
    const double b_new = b + step * gb;
    const double delta =
        std::max((w_new - w).lpNorm<Eigen::Infinity>(), std::abs(b_new - b)) / step;
    w = w_new;
    b = b_new;
    if (delta <= tol) break;
  }
  return {w, b};
}

}  // namespace oracles
