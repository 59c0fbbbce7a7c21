#include <doctest.h>

#include <cmath>

#include "bipmatch/baselines.hpp"
#include "bipmatch/metrics.hpp"
#include "bipmatch/models.hpp"
#include "bipmatch/rng.hpp"

using namespace bipmatch;

TEST_CASE("one mode projection") {
  const BipartiteData eye(Eigen::MatrixXd::Identity(2, 2), ModelFamily::kIsing);
  CHECK(one_mode_projection(eye).matrix == 0.5 * Eigen::MatrixXd::Identity(2, 2));

  const BipartiteData ones(Eigen::MatrixXd::Ones(3, 5), ModelFamily::kIsing);
  CHECK(one_mode_projection(ones).matrix == Eigen::MatrixXd::Ones(3, 3));

  Rng rng(5);
  Eigen::MatrixXd data(4, 30);
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 30; ++k) data(i, k) = rng.bernoulli(0.4) ? 1.0 : 0.0;
  }
  const CollapsedGraph g = one_mode_projection(BipartiteData(data, ModelFamily::kIsing));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 30; ++k) s += data(i, k) * data(j, k);
      CHECK(g.matrix(i, j) == doctest::Approx(s / 30).epsilon(1e-12));
    }
  }
  // Gram matrices are positive semidefinite
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.matrix).eigenvalues().minCoeff() >=
        -1e-12);
}

TEST_CASE("correlation matrix") {
  Eigen::MatrixXd data(3, 6);
  data << 1, 0, 1, 0, 1, 1,  // row 0
      1, 0, 1, 0, 1, 1,      // identical to row 0
      0, 1, 0, 1, 0, 0;      // complement of row 0
  const CollapsedGraph g = correlation_matrix(BipartiteData(data, ModelFamily::kIsing));
  CHECK(g.matrix(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.matrix(0, 2) == doctest::Approx(-1.0).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) CHECK(g.matrix(i, i) == 1.0);

  Eigen::MatrixXd constant(2, 4);
  constant << 1, 1, 1, 1, 0, 1, 0, 1;
  CHECK_THROWS_WITH_AS(correlation_matrix(BipartiteData(constant, ModelFamily::kIsing)),
                       doctest::Contains("0"), DomainError);
}

TEST_CASE("mb edges") {
  Rng rng(9);
  Eigen::MatrixXd noise(5, 400);
  for (int i = 0; i < noise.size(); ++i) noise(i / 400, i % 400) = rng.normal();
  const BipartiteData nb(noise, ModelFamily::kGaussian);
  CHECK(mb_edges(nb, 1e6).edges().sum() == 0);
  CHECK_THROWS_AS(mb_edges(nb, 0.0), DomainError);

  // null data: few selected edges at moderate lambda
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Rng r2(seed);
    Eigen::MatrixXd z(8, 5000);
    for (int i = 0; i < z.size(); ++i) z(i / 5000, i % 5000) = r2.normal();
    const CollapsedGraph g = mb_edges(BipartiteData(z, ModelFamily::kGaussian), 0.2);
    CHECK(g.edges().sum() / 2 <= 8);
  }

  // chain signal: most edges recovered
  const UnipartiteGraph chain = chain_graph(10);
  Eigen::MatrixXd theta = 0.4 * chain.adj();
  theta.diagonal().array() = 1.0;
  const MrfParams truth(ModelFamily::kGaussian, theta, Eigen::VectorXd::Zero(10));
  for (std::uint64_t seed : {4ull, 5ull, 6ull}) {
    const BipartiteData b = gaussian_sample(truth, 10000, seed);
    const CollapsedGraph g = mb_edges(b, 0.1);
    int hit = 0;
    for (int i = 0; i + 1 < 10; ++i) {
      if (g.matrix(i, i + 1) != 0.0) ++hit;
    }
    CHECK(hit >= 8);  // at least 80% of the 9 chain edges
  }
}

TEST_CASE("glasso edges") {
  const UnipartiteGraph chain = chain_graph(10);
  Eigen::MatrixXd theta = 0.4 * chain.adj();
  theta.diagonal().array() = 1.0;
  const MrfParams truth(ModelFamily::kGaussian, theta, Eigen::VectorXd::Zero(10));
  const BipartiteData sig = gaussian_sample(truth, 10000, 17);

  CHECK(glasso_edges(sig, 1e3).edges().sum() == 0);

  for (std::uint64_t seed : {21ull, 22ull, 23ull}) {
    Rng r2(seed);
    Eigen::MatrixXd z(8, 5000);
    for (int i = 0; i < z.size(); ++i) z(i / 5000, i % 5000) = r2.normal();
    const CollapsedGraph g = glasso_edges(BipartiteData(z, ModelFamily::kGaussian), 0.2);
    const double fp_fraction = g.edges().sum() / 2.0 / (8.0 * 7.0 / 2.0);
    CHECK(fp_fraction <= 0.05);
  }

  for (std::uint64_t seed : {24ull, 25ull, 26ull}) {
    const BipartiteData b = gaussian_sample(truth, 10000, seed);
    const CollapsedGraph g = glasso_edges(b, 0.1);
    int hit = 0;
    for (int i = 0; i + 1 < 10; ++i) {
      if (g.matrix(i, i + 1) != 0.0) ++hit;
    }
    CHECK(hit >= 8);
  }
}

TEST_CASE("collapse and match") {
  // collapsed equal to A: the FW projection reaches the exhaustive optimum
  for (int n : {4, 5, 6}) {
    const UnipartiteGraph a = chain_graph(n);
    CollapsedGraph g{a.adj(), CollapseMethod::kOmp};
    const Permutation p = collapse_and_match(a, g);
    const double got = (permute_graph(a, p).adj().array() * a.adj().array()).sum();
    const BruteForceQap ref = brute_force_qap(a, a.adj(), LapSense::kMax);
    CHECK(got == doctest::Approx(ref.objective).epsilon(1e-12));
  }

  // all-ones collapsed: every permutation ties, lexicographic winner
  const UnipartiteGraph a = chain_graph(5);
  CollapsedGraph flat{Eigen::MatrixXd::Ones(5, 5), CollapseMethod::kOmp};
  CHECK(collapse_and_match(a, flat) == Permutation::identity(5));

  CHECK_THROWS_AS(collapse_and_match(chain_graph(4), flat), DimensionError);
}

TEST_CASE("collapse equivalence in the restricted regime") {
  const UnipartiteGraph a = chain_graph(5);
  for (std::uint64_t seed : {31ull, 32ull, 33ull}) {
    Rng rng(seed);
    const Permutation p_star = Permutation::uniform_random(5, rng);
    const UnipartiteGraph w = permute_graph(a, p_star);
    const MrfParams truth(ModelFamily::kIsing, Eigen::MatrixXd(0.6 * w.adj()),
                          Eigen::VectorXd::Zero(5));
    const BipartiteData b = ising_gibbs_sample(truth, 5000, 500, 5, seed);

    const BruteForceResult mle = brute_force_match_scored(a, b, MatchObjective::kIsingRestricted);
    if (!(restricted_profile_theta(a, mle.p, b) > 0.0)) continue;
    const Eigen::MatrixXd btilde = (b.matrix() * b.matrix().transpose()) / b.m();
    const BruteForceQap frob = brute_force_qap(a, btilde, LapSense::kMax);
    const double frob_at_mle = (permute_graph(a, mle.p).adj().array() * btilde.array()).sum();
    CHECK(frob_at_mle == doctest::Approx(frob.objective).epsilon(1e-9));
  }
}

TEST_CASE("vertex error") {
  CHECK(vertex_error(Permutation::identity(5), Permutation::identity(5)) == 0.0);
  CHECK(vertex_error(Permutation({1, 0, 2, 3, 4, 5, 6, 7, 8, 9}), Permutation::identity(10)) ==
        doctest::Approx(0.2));
  CHECK(vertex_error(Permutation({1, 2, 3, 4, 0}), Permutation::identity(5)) == 1.0);
}

TEST_CASE("edge error") {
  const UnipartiteGraph a = chain_graph(3);
  CHECK(edge_error(a, Permutation({2, 1, 0}), Permutation::identity(3)) == 0.0);
  CHECK(edge_error(a, Permutation({1, 0, 2}), Permutation::identity(3)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(edge_error(UnipartiteGraph(Eigen::MatrixXd::Zero(3, 3)),
                             Permutation::identity(3), Permutation::identity(3)),
                  DomainError);
}

TEST_CASE("metrics are invariant to common relabeling") {
  Rng rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + rng.uniform_int(4);
    UnipartiteGraph a = er_graph(n, 0.5, rng.next_u64());
    if (a.empty()) continue;
    const Permutation p_hat = Permutation::uniform_random(n, rng);
    const Permutation p_star = Permutation::uniform_random(n, rng);
    const Permutation common = Permutation::uniform_random(n, rng);
    CHECK(vertex_error(p_hat, p_star) ==
          doctest::Approx(vertex_error(p_hat.compose(common), p_star.compose(common))));
    CHECK(edge_error(a, p_hat, p_star) ==
          doctest::Approx(edge_error(a, p_hat.compose(common), p_star.compose(common)))
              .epsilon(1e-12));
    // zero vertex error implies zero edge error
    CHECK(edge_error(a, p_star, p_star) == 0.0);
  }
}

TEST_CASE("edge confusion") {
  const Eigen::MatrixXi truth = chain_graph(4).support();
  CHECK(edge_confusion(truth, truth).fpr == 0.0);
  CHECK(edge_confusion(truth, truth).fnr == 0.0);

  const Eigen::MatrixXi none = Eigen::MatrixXi::Zero(4, 4);
  const EdgeConfusion miss = edge_confusion(none, truth);
  CHECK(miss.fpr == 0.0);
  CHECK(miss.fnr == 1.0);

  Eigen::MatrixXi full = Eigen::MatrixXi::Ones(4, 4);
  full.diagonal().setZero();
  const EdgeConfusion over = edge_confusion(full, truth);
  CHECK(over.fpr == 1.0);
  CHECK(over.fnr == 0.0);

  // undefined denominators are reported absent
  CHECK_FALSE(edge_confusion(none, none).fnr.has_value());
  CHECK(edge_confusion(none, none).fpr == 0.0);
  CHECK_FALSE(edge_confusion(full, full).fpr.has_value());
}

TEST_CASE("fig2 beta instance defeats the one-mode projection in population") {
  const CounterexampleInstance inst = fig2_beta_instance();
  const IsingTable table = exact_ising_distribution(inst.params);
  const int n = inst.a.n();
  Eigen::MatrixXd moment = Eigen::MatrixXd::Zero(n, n);
  for (std::uint32_t s = 0; s < (1u << n); ++s) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if ((s >> i & 1) && (s >> j & 1)) moment(i, j) += table.prob[s];
      }
    }
  }
  // the non-edge pair (endpoints) co-occurs more than the true edges
  CHECK(moment(0, 2) > moment(0, 1));
  CHECK(moment(0, 2) > moment(1, 2));

  // consequently the population collapse matcher misses the edge structure
  const BruteForceQap pop = brute_force_qap(inst.a, moment, LapSense::kMax);
  CHECK(edge_error(inst.a, pop.p, Permutation::identity(n)) > 0.0);
}

TEST_CASE("fig2 theta instance swaps the blocks in population") {
  const CounterexampleInstance inst = fig2_theta_instance();
  const IsingTable table = exact_ising_distribution(inst.params);
  const int n = inst.a.n();
  Eigen::MatrixXd moment = Eigen::MatrixXd::Zero(n, n);
  for (std::uint32_t s = 0; s < (1u << n); ++s) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if ((s >> i & 1) && (s >> j & 1)) moment(i, j) += table.prob[s];
      }
    }
  }
  // every pair within the strongly coupled path block (vertices 0,1,2) beats
  // every pair within the weak triangle block (3,4,5)
  double min_path = 1e9, max_tri = -1e9;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) min_path = std::min(min_path, moment(i, j));
  }
  for (int i = 3; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) max_tri = std::max(max_tri, moment(i, j));
  }
  CHECK(min_path > max_tri);

  const BruteForceQap pop = brute_force_qap(inst.a, moment, LapSense::kMax);
  CHECK(edge_error(inst.a, pop.p, Permutation::identity(n)) > 0.0);
}
