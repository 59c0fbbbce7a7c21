#include <doctest.h>

#include <cmath>

#include "bipmatch/gauss_fit.hpp"
#include "bipmatch/graphs.hpp"
#include "bipmatch/models.hpp"
#include "bipmatch/rng.hpp"
#include "helpers/oracles.hpp"

using namespace bipmatch;

namespace {

Eigen::MatrixXd random_pd(int n, Rng& rng) {
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  }
  return g * g.transpose() / n + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

CovarianceEstimate cov_of(const Eigen::MatrixXd& sigma, int m = 100) {
  return CovarianceEstimate{sigma, Eigen::VectorXd::Zero(sigma.rows()), m};
}

}  // namespace

TEST_CASE("sample covariance") {
  // identical columns collapse to a zero matrix
  Eigen::MatrixXd same(3, 4);
  same.colwise() = Eigen::Vector3d(1.0, -2.0, 0.5);
  CHECK(sample_covariance(BipartiteData(same, ModelFamily::kGaussian)).sigma_hat.cwiseAbs().maxCoeff() ==
        0.0);

  // 2x2 identity data
  const BipartiteData eye(Eigen::MatrixXd::Identity(2, 2), ModelFamily::kGaussian);
  const CovarianceEstimate c = sample_covariance(eye);
  CHECK(c.sigma_hat(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(c.sigma_hat(0, 1) == doctest::Approx(-0.25).epsilon(1e-15));
  CHECK(c.sigma_hat(1, 1) == doctest::Approx(0.25).epsilon(1e-15));

  // double-loop oracle
  Rng rng(31);
  Eigen::MatrixXd data(4, 25);
  for (int i = 0; i < data.size(); ++i) data(i / 25, i % 25) = rng.normal();
  const CovarianceEstimate est = sample_covariance(BipartiteData(data, ModelFamily::kGaussian));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double mi = 0, mj = 0;
      for (int k = 0; k < 25; ++k) {
        mi += data(i, k) / 25;
        mj += data(j, k) / 25;
      }
      double s = 0;
      for (int k = 0; k < 25; ++k) s += (data(i, k) - mi) * (data(j, k) - mj);
      CHECK(est.sigma_hat(i, j) == doctest::Approx(s / 25).epsilon(1e-12));
    }
  }

  CHECK_THROWS_AS(sample_covariance(BipartiteData(Eigen::MatrixXd::Zero(2, 1),
                                                  ModelFamily::kGaussian)),
                  DomainError);
}

TEST_CASE("gaussian profile loss") {
  const int n = 3;
  const CovarianceEstimate eye = cov_of(Eigen::MatrixXd::Identity(n, n));
  CHECK(gaussian_profile_loss(Eigen::MatrixXd::Identity(n, n), eye) ==
        doctest::Approx(-n).epsilon(1e-14));

  Rng rng(7);
  const Eigen::MatrixXd sigma = random_pd(n, rng);
  const CovarianceEstimate cov = cov_of(sigma);
  const Eigen::MatrixXd inv = sigma.inverse();
  const double logdet_sigma = std::log(sigma.determinant());
  CHECK(gaussian_profile_loss(inv, cov) == doctest::Approx(-logdet_sigma - n).epsilon(1e-10));

  // scaling identity: loss(c theta) - loss(theta) = n log c - (c-1) tr(sigma theta)
  const Eigen::MatrixXd theta = random_pd(n, rng);
  const double c = 1.7;
  const double lhs = gaussian_profile_loss(c * theta, cov) - gaussian_profile_loss(theta, cov);
  const double rhs = n * std::log(c) - (c - 1.0) * (sigma.array() * theta.array()).sum();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

  CHECK_THROWS_AS(gaussian_profile_loss(-Eigen::MatrixXd::Identity(n, n), cov), DomainError);
}

TEST_CASE("weighted glasso shrinks to the diagonal") {
  Eigen::MatrixXd sigma(3, 3);
  sigma.setZero();
  sigma.diagonal() << 2.0, 0.5, 1.25;
  const PrecisionEstimate est =
      weighted_graphical_lasso(cov_of(sigma), PenaltyWeights::uniform(3), 0.3);
  CHECK(est.converged);
  for (int i = 0; i < 3; ++i) {
    CHECK(est.theta_hat(i, i) == doctest::Approx(1.0 / sigma(i, i)).epsilon(1e-8));
  }
  CHECK(est.theta_hat(0, 1) == 0.0);
  CHECK(est.theta_hat(0, 2) == 0.0);
  CHECK(est.theta_hat(1, 2) == 0.0);

  // full shrinkage for lambda above every |sigma_ij|
  Rng rng(3);
  const Eigen::MatrixXd full = random_pd(3, rng);
  const double big = 10.0 * full.cwiseAbs().maxCoeff();
  const PrecisionEstimate shrunk =
      weighted_graphical_lasso(cov_of(full), PenaltyWeights::uniform(3), big);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) CHECK(shrunk.theta_hat(i, j) == 0.0);
    }
    CHECK(shrunk.theta_hat(i, i) == doctest::Approx(1.0 / full(i, i)).epsilon(1e-8));
  }
}

TEST_CASE("weighted glasso matches the slow first-order reference") {
  Rng rng(11);
  const Eigen::MatrixXd sigma = random_pd(3, rng);
  const double lambda = 0.1;
  const PrecisionEstimate est =
      weighted_graphical_lasso(cov_of(sigma), PenaltyWeights::uniform(3), lambda, 1e-8);
  Eigen::MatrixXd rho = Eigen::MatrixXd::Constant(3, 3, lambda);
  rho.diagonal().setZero();
  const Eigen::MatrixXd ref = oracles::prox_gradient_glasso(sigma, rho);

  auto objective = [&](const Eigen::MatrixXd& t) {
    double pen = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i != j) pen += rho(i, j) * std::abs(t(i, j));
      }
    }
    return std::log(t.determinant()) - (sigma.array() * t.array()).sum() - pen;
  };
  CHECK(std::abs(objective(est.theta_hat) - objective(ref)) <= 1e-5);
  CHECK(est.kkt_residual <= 1e-8);
}

TEST_CASE("weighted glasso invariants") {
  Rng rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + rng.uniform_int(6);
    const Eigen::MatrixXd sigma = random_pd(n, rng);
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        omega(i, j) = omega(j, i) = rng.uniform01();
      }
    }
    const double lambda = 0.05 + 0.2 * rng.uniform01();
    const PrecisionEstimate est =
        weighted_graphical_lasso(cov_of(sigma), PenaltyWeights(omega), lambda);

    // objective is non-decreasing across sweeps
    for (std::size_t s = 1; s < est.objective_trace.size(); ++s) {
      CHECK(est.objective_trace[s] >= est.objective_trace[s - 1] - 1e-9);
    }
    // PD certificate
    CHECK(Eigen::LLT<Eigen::MatrixXd>(est.theta_hat).info() == Eigen::Success);
    CHECK(est.kkt_residual <= 1e-6);
  }
}

TEST_CASE("lambda zero recovers the inverse covariance") {
  Rng rng(23);
  for (int n : {3, 6, 10}) {
    const Eigen::MatrixXd sigma = random_pd(n, rng);
    const PrecisionEstimate est =
        weighted_graphical_lasso(cov_of(sigma), PenaltyWeights::uniform(n), 0.0, 1e-9, 500);
    CHECK((est.theta_hat - sigma.inverse()).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("unbounded objective guard") {
  Eigen::MatrixXd singular(3, 3);
  singular.setOnes();
  singular.diagonal().array() = 1.0;  // rank-1 plus nothing: singular
  CHECK_THROWS_AS(
      weighted_graphical_lasso(cov_of(singular), PenaltyWeights::uniform(3), 0.0),
      SolverError);
}

TEST_CASE("constrained gaussian mle") {
  Rng rng(41);
  const int n = 4;
  const Eigen::MatrixXd sigma = random_pd(n, rng);
  const CovarianceEstimate cov = cov_of(sigma);

  // full support: the unconstrained MLE
  Eigen::MatrixXi full = Eigen::MatrixXi::Ones(n, n);
  full.diagonal().setZero();
  const PrecisionEstimate mle = constrained_gaussian_mle(cov, full);
  CHECK((mle.theta_hat - sigma.inverse()).cwiseAbs().maxCoeff() <= 1e-5);

  // empty support: the independence model
  const Eigen::MatrixXi none = Eigen::MatrixXi::Zero(n, n);
  const PrecisionEstimate ind = constrained_gaussian_mle(cov, none);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        CHECK(ind.theta_hat(i, i) == doctest::Approx(1.0 / sigma(i, i)).epsilon(1e-8));
      } else {
        CHECK(ind.theta_hat(i, j) == 0.0);
      }
    }
  }

  // chain support equals the huge-penalty weighted glasso limit
  const UnipartiteGraph chain = chain_graph(n);
  const PrecisionEstimate con = constrained_gaussian_mle(cov, chain.support());
  Eigen::MatrixXd omega = Eigen::MatrixXd::Ones(n, n);
  omega.diagonal().setZero();
  for (int i = 0; i + 1 < n; ++i) omega(i, i + 1) = omega(i + 1, i) = 0.0;
  const PrecisionEstimate lim =
      weighted_graphical_lasso(cov, PenaltyWeights(omega), 1e6 * sigma.cwiseAbs().maxCoeff());
  CHECK((con.theta_hat - lim.theta_hat).cwiseAbs().maxCoeff() <= 1e-4);
  CHECK(con.converged);
  // stationarity on the free entries
  const Eigen::MatrixXd w = con.theta_hat.inverse();
  for (int i = 0; i < n; ++i) {
    CHECK(std::abs(w(i, i) - sigma(i, i)) <= 1e-5);
  }
  for (int i = 0; i + 1 < n; ++i) {
    CHECK(std::abs(w(i, i + 1) - sigma(i, i + 1)) <= 1e-5);
  }
}

TEST_CASE("constrained mle consistency from samples") {
  const UnipartiteGraph chain = chain_graph(5);
  Eigen::MatrixXd theta_true = 0.4 * chain.adj();
  theta_true.diagonal().array() = 1.5;
  const MrfParams truth(ModelFamily::kGaussian, theta_true, Eigen::VectorXd::Zero(5));
  const BipartiteData b = gaussian_sample(truth, 100000, 71);
  const PrecisionEstimate est =
      constrained_gaussian_mle(sample_covariance(b), chain.support());
  CHECK((est.theta_hat - theta_true).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("penalty weights from doubly stochastic iterates") {
  const UnipartiteGraph a = chain_graph(4);
  const PenaltyWeights w = PenaltyWeights::from_doubly_stochastic(a, barycenter(4));
  CHECK(w.omega().diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((w.omega().array() >= 0.0).all());
  CHECK((w.omega().array() <= 1.0 + 1e-12).all());
  // at the barycenter every off-diagonal weight is 1 - sum(A)/n^2
  const double expect = 1.0 - a.adj().sum() / 16.0;
  CHECK(w.omega()(0, 1) == doctest::Approx(expect).epsilon(1e-12));

  // a permutation iterate leaves exactly the permuted support unpenalized
  Eigen::MatrixXd pm = Permutation({1, 0, 3, 2}).matrix();
  const PenaltyWeights wp = PenaltyWeights::from_doubly_stochastic(a, DoublyStochastic(pm));
  const Eigen::MatrixXd w_perm = permute_graph(a, Permutation({1, 0, 3, 2})).adj();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i != j) CHECK(wp.omega()(i, j) == doctest::Approx(1.0 - w_perm(i, j)).epsilon(1e-12));
    }
  }
}
