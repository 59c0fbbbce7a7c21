#include "bipmatch/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "bipmatch/detail/format.hpp"
#include "bipmatch/detail/linalg.hpp"
#include "bipmatch/detail/math.hpp"
#include "bipmatch/gauss_fit.hpp"
#include "bipmatch/rng.hpp"

namespace bipmatch {

namespace {
constexpr double kCoeffCap = 50.0;
constexpr int kMaxBruteForceN = 7;
}  // namespace

std::string to_string(ModelFamily family) {
  return family == ModelFamily::kIsing ? "ising" : "gaussian";
}

ModelFamily family_from_string(const std::string& s) {
  if (s == "ising") return ModelFamily::kIsing;
  if (s == "gaussian") return ModelFamily::kGaussian;
  throw DomainError("unknown model family '" + s + "'");
}

MrfParams::MrfParams(ModelFamily family, Eigen::MatrixXd theta, Eigen::VectorXd beta)
    : family_(family), theta_(std::move(theta)), beta_(std::move(beta)) {
  if (theta_.rows() != theta_.cols()) throw DimensionError("theta must be square");
  if (beta_.size() != theta_.rows()) throw DimensionError("beta length must match theta");
  if (!detail::is_symmetric(theta_)) throw ModelError("theta must be symmetric");
  if (family_ == ModelFamily::kIsing) {
    if (theta_.diagonal().cwiseAbs().maxCoeff() != 0.0) {
      throw ModelError("Ising theta must have a zero diagonal");
    }
  } else {
    Eigen::MatrixXd l;
    if (auto bad = detail::cholesky_lower(theta_, l)) {
      throw ModelError("Gaussian theta is not positive definite: leading minor of order " +
                       std::to_string(*bad + 1) + " is not positive");
    }
  }
}

Eigen::VectorXd MrfParams::mu() const {
  if (family_ != ModelFamily::kGaussian) throw ModelError("mu is defined for the Gaussian family");
  return theta_.llt().solve(beta_);
}

BipartiteData::BipartiteData(Eigen::MatrixXd b, ModelFamily family)
    : b_(std::move(b)), family_(family) {
  if (b_.cols() < 1) throw DomainError("bipartite data needs at least one column");
  if (family_ == ModelFamily::kIsing) {
    if (!((b_.array() == 0.0) || (b_.array() == 1.0)).all()) {
      throw DomainError("Ising bipartite data must be binary");
    }
  }
}

BipartiteData ising_gibbs_sample(const MrfParams& params, int m, int burn_in, int thin,
                                 std::uint64_t seed) {
  if (params.family() != ModelFamily::kIsing) {
    throw ModelError("ising_gibbs_sample requires Ising parameters");
  }
  if (m < 1 || burn_in < 0 || thin < 1) {
    throw DomainError("ising_gibbs_sample needs m >= 1, burn_in >= 0, thin >= 1");
  }
  if (burn_in == 0) {
    std::fprintf(stderr, "bipmatch: warning: Gibbs sampling with burn_in=0\n");
  }
  const int n = params.n();
  const Eigen::MatrixXd& theta = params.theta();
  const Eigen::VectorXd& beta = params.beta();
  Eigen::MatrixXd b(n, m);
  const int sweeps = burn_in + thin;
  for (int k = 0; k < m; ++k) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(k)));
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    // field h = theta * x, maintained incrementally across flips
    Eigen::VectorXd h = theta * x;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      for (int i = 0; i < n; ++i) {
        const double p1 = detail::logistic(beta[i] + 2.0 * h[i]);
        const double nv = rng.bernoulli(p1) ? 1.0 : 0.0;
        if (nv != x[i]) {
          h += (nv - x[i]) * theta.col(i);
          x[i] = nv;
        }
      }
    }
    b.col(k) = x;
  }
  return BipartiteData(std::move(b), ModelFamily::kIsing);
}

BipartiteData gaussian_sample(const MrfParams& params, int m, std::uint64_t seed) {
  if (params.family() != ModelFamily::kGaussian) {
    throw ModelError("gaussian_sample requires Gaussian parameters");
  }
  if (m < 1) throw DomainError("gaussian_sample needs m >= 1");
  const int n = params.n();
  Eigen::MatrixXd l;
  if (auto bad = detail::cholesky_lower(params.theta(), l)) {
    throw SolverError("theta factorization failed: leading minor of order " +
                      std::to_string(*bad + 1) + " is not positive");
  }
  const Eigen::VectorXd mu = params.mu();
  Eigen::MatrixXd b(n, m);
  for (int k = 0; k < m; ++k) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(k)));
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.normal();
    // theta = L L^T, so x = mu + L^{-T} z has covariance theta^{-1}
    b.col(k) = mu + l.transpose().triangularView<Eigen::Upper>().solve(z);
  }
  return BipartiteData(std::move(b), ModelFamily::kGaussian);
}

namespace {

// Quadratic forms x' M x for every state of {0,1}^n, built incrementally.
std::vector<double> enumerate_quadratic(const Eigen::MatrixXd& mat, const Eigen::VectorXd& lin) {
  const int n = static_cast<int>(mat.rows());
  const std::size_t states = std::size_t{1} << n;
  std::vector<double> val(states, 0.0);
  for (std::size_t s = 1; s < states; ++s) {
    const int k = 63 - __builtin_clzll(s);
    const std::size_t rest = s & ~(std::size_t{1} << k);
    double cross = 0.0;
    for (std::size_t r = rest; r != 0; r &= r - 1) {
      const int j = __builtin_ctzll(r);
      cross += mat(k, j);
    }
    val[s] = val[rest] + lin[k] + 2.0 * cross;
  }
  return val;
}

void check_exact_capacity(int n, const char* what) {
  if (n > kMaxExactIsingN) {
    throw CapacityError(std::string(what) + " enumerates 2^n states; n=" + std::to_string(n) +
                        " exceeds the cap of " + std::to_string(kMaxExactIsingN));
  }
}

}  // namespace

IsingTable exact_ising_distribution(const MrfParams& params) {
  if (params.family() != ModelFamily::kIsing) {
    throw ModelError("exact_ising_distribution requires Ising parameters");
  }
  check_exact_capacity(params.n(), "exact_ising_distribution");
  IsingTable table;
  table.n = params.n();
  table.energy = enumerate_quadratic(params.theta(), params.beta());
  table.log_z = detail::logsumexp(table.energy);
  table.prob.resize(table.energy.size());
  for (std::size_t s = 0; s < table.energy.size(); ++s) {
    table.prob[s] = std::exp(table.energy[s] - table.log_z);
  }
  return table;
}

double exact_loglik(const BipartiteData& b, const MrfParams& params) {
  if (b.n() != params.n()) throw DimensionError("data and parameter sizes differ");
  if (b.family() != params.family()) throw ModelError("data and parameter families differ");
  const int n = b.n();
  const int m = b.m();
  if (params.family() == ModelFamily::kIsing) {
    check_exact_capacity(n, "exact_loglik");
    const std::vector<double> energy = enumerate_quadratic(params.theta(), params.beta());
    const double log_z = detail::logsumexp(energy);
    double total = 0.0;
    for (int k = 0; k < m; ++k) {
      std::uint32_t s = 0;
      for (int i = 0; i < n; ++i) {
        if (b.matrix()(i, k) != 0.0) s |= (1u << i);
      }
      total += energy[s];
    }
    return total / m - log_z;
  }
  // Gaussian: mean of log N(x; mu, theta^{-1})
  Eigen::MatrixXd l;
  if (auto bad = detail::cholesky_lower(params.theta(), l)) {
    throw SolverError("theta factorization failed: leading minor of order " +
                      std::to_string(*bad + 1) + " is not positive");
  }
  const double logdet = detail::logdet_from_cholesky(l);
  const Eigen::VectorXd mu = params.mu();
  double quad = 0.0;
  for (int k = 0; k < m; ++k) {
    const Eigen::VectorXd r = b.matrix().col(k) - mu;
    quad += r.dot(params.theta() * r);
  }
  return 0.5 * logdet - 0.5 * n * std::log(2.0 * 3.14159265358979323846) - 0.5 * quad / m;
}

namespace {

struct PsiTable {
  std::vector<double> u;  // y' A y per state
  double u_min = 0.0;
  double u_max = 0.0;
};

PsiTable psi_table(const UnipartiteGraph& a) {
  PsiTable t;
  t.u = enumerate_quadratic(a.adj(), Eigen::VectorXd::Zero(a.n()));
  const auto [lo, hi] = std::minmax_element(t.u.begin(), t.u.end());
  t.u_min = *lo;
  t.u_max = *hi;
  return t;
}

double psi(const PsiTable& t, double theta) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double u : t.u) mx = std::max(mx, theta * u);
  double s = 0.0;
  for (double u : t.u) s += std::exp(theta * u - mx);
  return mx + std::log(s);
}

double psi_prime(const PsiTable& t, double theta) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double u : t.u) mx = std::max(mx, theta * u);
  double z = 0.0, zu = 0.0;
  for (double u : t.u) {
    const double w = std::exp(theta * u - mx);
    z += w;
    zu += w * u;
  }
  return zu / z;
}

}  // namespace

RestrictedProfile restricted_profile(const UnipartiteGraph& a, const Permutation& p,
                                     const BipartiteData& b) {
  if (a.n() != p.size() || a.n() != b.n()) {
    throw DimensionError("graph, permutation and data sizes differ");
  }
  if (a.empty()) throw ModelError("restricted profile is degenerate: the graph has no edges");
  check_exact_capacity(a.n(), "restricted_profile");

  const Eigen::MatrixXd w = permute_graph(a, p).adj();
  const Eigen::MatrixXd btilde = (b.matrix() * b.matrix().transpose()) / b.m();
  const double trace_stat = (w.array() * btilde.array()).sum();

  const PsiTable table = psi_table(a);
  const double inf = std::numeric_limits<double>::infinity();
  constexpr double kBoundaryTol = 1e-12;

  auto boundary_count = [&table](double level) {
    std::size_t c = 0;
    for (double u : table.u) {
      if (std::abs(u - level) <= 1e-9) ++c;
    }
    return static_cast<double>(c);
  };

  // At the boundary of the statistic range the supremum is attained in the
  // limit theta -> -+inf, where the tilted distribution concentrates on the
  // extreme states; the profile value is -log(#extreme states).
  if (trace_stat <= table.u_min + kBoundaryTol) {
    return {-inf, -std::log(boundary_count(table.u_min)), trace_stat};
  }
  if (trace_stat >= table.u_max - kBoundaryTol) {
    return {inf, -std::log(boundary_count(table.u_max)), trace_stat};
  }

  // Expand [-1, 1] until Psi' brackets the statistic, then bisect.
  double lo = -1.0, hi = 1.0;
  while (psi_prime(table, lo) > trace_stat && lo > -kCoeffCap) lo *= 2.0;
  while (psi_prime(table, hi) < trace_stat && hi < kCoeffCap) hi *= 2.0;
  lo = std::max(lo, -kCoeffCap);
  hi = std::min(hi, kCoeffCap);
  if (psi_prime(table, lo) > trace_stat) {
    return {-inf, lo * trace_stat - psi(table, lo), trace_stat};
  }
  if (psi_prime(table, hi) < trace_stat) {
    return {inf, hi * trace_stat - psi(table, hi), trace_stat};
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (psi_prime(table, mid) < trace_stat) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double theta_hat = 0.5 * (lo + hi);
  return {theta_hat, theta_hat * trace_stat - psi(table, theta_hat), trace_stat};
}

double restricted_profile_theta(const UnipartiteGraph& a, const Permutation& p,
                                const BipartiteData& b) {
  return restricted_profile(a, p, b).theta_hat;
}

IsingMleFit exact_ising_mle(const BipartiteData& b, const Eigen::MatrixXi& support) {
  if (b.family() != ModelFamily::kIsing) throw ModelError("exact_ising_mle requires Ising data");
  const int n = b.n();
  if (support.rows() != n || support.cols() != n) throw DimensionError("support size mismatch");
  if (support != support.transpose().eval()) throw DomainError("support must be symmetric");
  check_exact_capacity(n, "exact_ising_mle");

  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (support(i, j) != 0) edges.emplace_back(i, j);
    }
  }
  const int dim = n + static_cast<int>(edges.size());
  const int m = b.m();

  // Empirical mean sufficient statistics: t_i = y_i, t_e = 2 y_i y_j.
  Eigen::VectorXd sbar(dim);
  for (int i = 0; i < n; ++i) sbar[i] = b.matrix().row(i).mean();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    sbar[n + e] = 2.0 * b.matrix().row(i).dot(b.matrix().row(j)) / m;
  }

  const std::size_t states = std::size_t{1} << n;
  std::vector<Eigen::VectorXd> stats(states, Eigen::VectorXd::Zero(dim));
  for (std::size_t s = 0; s < states; ++s) {
    for (int i = 0; i < n; ++i) {
      if (s & (std::size_t{1} << i)) stats[s][i] = 1.0;
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto [i, j] = edges[e];
      if ((s >> i & 1) && (s >> j & 1)) stats[s][n + e] = 2.0;
    }
  }

  Eigen::VectorXd eta = Eigen::VectorXd::Zero(dim);
  auto log_partition = [&](const Eigen::VectorXd& par) {
    std::vector<double> en(states);
    for (std::size_t s = 0; s < states; ++s) en[s] = par.dot(stats[s]);
    return detail::logsumexp(en);
  };
  auto objective = [&](const Eigen::VectorXd& par) { return par.dot(sbar) - log_partition(par); };

  double obj = objective(eta);
  Eigen::VectorXd grad(dim);
  double grad_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<double> en(states);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < states; ++s) {
      en[s] = eta.dot(stats[s]);
      mx = std::max(mx, en[s]);
    }
    double z = 0.0;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t s = 0; s < states; ++s) {
      const double w = std::exp(en[s] - mx);
      z += w;
      mean += w * stats[s];
      second.selfadjointView<Eigen::Lower>().rankUpdate(stats[s], w);
    }
    mean /= z;
    second = second.selfadjointView<Eigen::Lower>();
    Eigen::MatrixXd cov = second / z - mean * mean.transpose();

    grad = sbar - mean;
    grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (grad_norm <= 1e-9) {
      converged = true;
      break;
    }
    cov.diagonal().array() += 1e-10;
    Eigen::VectorXd dir = cov.ldlt().solve(grad);
    double step = 1.0;
    bool moved = false;
    for (int h = 0; h < 40; ++h) {
      Eigen::VectorXd cand = eta + step * dir;
      cand = cand.cwiseMax(-kCoeffCap).cwiseMin(kCoeffCap);
      const double cand_obj = objective(cand);
      if (cand_obj >= obj) {
        eta = cand;
        obj = cand_obj;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // no further ascent at floating-point precision
  }

  IsingMleFit fit;
  fit.beta = eta.head(n);
  fit.theta = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    fit.theta(i, j) = eta[n + e];
    fit.theta(j, i) = eta[n + e];
  }
  fit.loglik = obj;
  fit.grad_norm = grad_norm;
  fit.converged = converged;
  return fit;
}

BruteForceResult brute_force_match_scored(const UnipartiteGraph& a, const BipartiteData& b,
                                          MatchObjective objective) {
  const int n = a.n();
  if (n != b.n()) throw DimensionError("graph and data sizes differ");
  if (n > kMaxBruteForceN) {
    throw CapacityError("brute_force_match enumerates n! permutations; n=" + std::to_string(n) +
                        " exceeds the cap of " + std::to_string(kMaxBruteForceN));
  }

  std::optional<CovarianceEstimate> cov;
  if (objective == MatchObjective::kGaussian) cov = sample_covariance(b);

  // Scores depend on the permuted graph only, so cache per relabeled matrix;
  // automorphic permutations then tie exactly and the lex-first map wins.
  std::map<std::string, double> cache;
  auto score_for = [&](const Permutation& p) {
    const Eigen::MatrixXd w = permute_graph(a, p).adj();
    std::string key(reinterpret_cast<const char*>(w.data()), sizeof(double) * w.size());
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    double score = 0.0;
    switch (objective) {
      case MatchObjective::kIsingRestricted:
        score = restricted_profile(a, p, b).loglik;
        break;
      case MatchObjective::kIsingExact: {
        const Eigen::MatrixXi supp = (w.array() != 0.0).cast<int>().matrix();
        score = exact_ising_mle(b, supp).loglik;
        break;
      }
      case MatchObjective::kGaussian: {
        const Eigen::MatrixXi supp = (w.array() != 0.0).cast<int>().matrix();
        const PrecisionEstimate est = constrained_gaussian_mle(*cov, supp);
        score = gaussian_profile_loss(est.theta_hat, *cov);
        break;
      }
    }
    cache.emplace(std::move(key), score);
    return score;
  };

  std::vector<int> map(n);
  for (int i = 0; i < n; ++i) map[i] = i;
  std::optional<BruteForceResult> best;
  do {
    Permutation p(map);
    const double s = score_for(p);
    if (!best || s > best->score) best = BruteForceResult{p, s};
  } while (std::next_permutation(map.begin(), map.end()));
  return *best;
}

Permutation brute_force_match(const UnipartiteGraph& a, const BipartiteData& b,
                              MatchObjective objective) {
  return brute_force_match_scored(a, b, objective).p;
}

BipartiteData read_bipartite_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open bipartite file " + path);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  ++line_no;
  ModelFamily family;
  if (line.rfind("# family=", 0) == 0) {
    try {
      family = family_from_string(line.substr(9));
    } catch (const DomainError& e) {
      throw DataError(path + ":1: " + e.what());
    }
  } else {
    throw DataError(path + ":1: expected sidecar line '# family=ising|gaussian'");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": inconsistent column count");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  Eigen::MatrixXd b(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) b(i, j) = rows[i][j];
  }
  try {
    return BipartiteData(std::move(b), family);
  } catch (const DomainError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_bipartite_csv(const BipartiteData& b, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write bipartite file " + path);
  out << "# family=" << to_string(b.family()) << "\n";
  for (int i = 0; i < b.n(); ++i) {
    for (int j = 0; j < b.m(); ++j) {
      if (j) out << ",";
      out << format_double(b.matrix()(i, j));
    }
    out << "\n";
  }
  if (!out) throw DataError("failed writing bipartite file " + path);
}

}  // namespace bipmatch
