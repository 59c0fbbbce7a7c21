#include "bipmatch/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "bipmatch/baselines.hpp"
#include "bipmatch/detail/format.hpp"
#include "bipmatch/gauss_fit.hpp"
#include "bipmatch/metrics.hpp"
#include "bipmatch/rng.hpp"

namespace bipmatch {

using nlohmann::json;

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kChain: return "chain";
    case Scenario::kEr: return "er";
    case Scenario::kThm2Check: return "thm2-check";
    case Scenario::kFig2Beta: return "fig2-beta";
    case Scenario::kFig2Theta: return "fig2-theta";
    case Scenario::kExternalData: return "external-data";
  }
  return "?";
}

std::string to_string(BetaRule r) { return r == BetaRule::kZero ? "zero" : "centering"; }

std::string to_string(Method m) {
  switch (m) {
    case Method::kBInvCov: return "b-invcov";
    case Method::kBPseudo: return "b-pseudo";
    case Method::kCOmp: return "c-omp";
    case Method::kCCov: return "c-cov";
    case Method::kCCorr: return "c-corr";
    case Method::kCGlasso: return "c-glasso";
    case Method::kCMb: return "c-mb";
    case Method::kCollapseBf: return "collapse-bf";
    case Method::kExactBf: return "exact-bf";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& s) {
  for (Scenario v : {Scenario::kChain, Scenario::kEr, Scenario::kThm2Check, Scenario::kFig2Beta,
                     Scenario::kFig2Theta, Scenario::kExternalData}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown scenario '" + s + "'");
}

BetaRule beta_rule_from_string(const std::string& s) {
  if (s == "zero") return BetaRule::kZero;
  if (s == "centering") return BetaRule::kCentering;
  throw ConfigError("unknown beta rule '" + s + "'");
}

Method method_from_string(const std::string& s) {
  for (Method v : {Method::kBInvCov, Method::kBPseudo, Method::kCOmp, Method::kCCov,
                   Method::kCCorr, Method::kCGlasso, Method::kCMb, Method::kCollapseBf,
                   Method::kExactBf}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown method '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (m_grid.empty()) throw ConfigError("m grid must be non-empty");
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    if (m_grid[i] < 1) throw ConfigError("m grid values must be positive");
    if (i > 0 && m_grid[i] <= m_grid[i - 1]) {
      throw ConfigError("m grid must be strictly increasing");
    }
  }
  if (seed_fractions.empty()) throw ConfigError("seed fraction grid must be non-empty");
  for (double f : seed_fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("seed fractions must lie in [0, 1]");
  }
  if (scenario == Scenario::kChain || scenario == Scenario::kEr) {
    if (n < 2) throw ConfigError("n must be at least 2");
    if (!(er_p >= 0.0 && er_p <= 1.0)) throw ConfigError("er_p must lie in [0, 1]");
  }
  if (scenario == Scenario::kThm2Check && (n < 2 || n > 7)) {
    throw ConfigError("thm2-check enumerates permutations; n must be in [2, 7]");
  }
  if (scenario == Scenario::kExternalData && (!graph_path || !bipartite_path)) {
    throw ConfigError("external-data scenario needs graph_path and bipartite_path");
  }
  if (burn_in < 0 || thin < 1) throw ConfigError("burn_in must be >= 0 and thin >= 1");
  for (Method m : methods) {
    if ((m == Method::kCollapseBf || m == Method::kExactBf) &&
        (scenario == Scenario::kChain || scenario == Scenario::kEr) && n > 7) {
      throw ConfigError("exhaustive methods need n <= 7");
    }
  }
}

std::vector<Method> ExperimentConfig::resolved_methods() const {
  if (!methods.empty()) return methods;
  switch (scenario) {
    case Scenario::kFig2Beta:
    case Scenario::kFig2Theta:
      return {Method::kCollapseBf, Method::kExactBf};
    case Scenario::kThm2Check:
      return {};
    default:
      return {Method::kBInvCov, Method::kBPseudo, Method::kCOmp, Method::kCCov, Method::kCCorr,
              Method::kCGlasso, Method::kCMb};
  }
}

bool ResultRow::operator==(const ResultRow& other) const {
  return scenario == other.scenario && method == other.method && n == other.n && m == other.m &&
         replicate == other.replicate && seed_fraction == other.seed_fraction &&
         vertex_error == other.vertex_error && edge_error == other.edge_error &&
         fpr == other.fpr && fnr == other.fnr && lambda_star == other.lambda_star &&
         error == other.error;
}

namespace {

struct Instance {
  UnipartiteGraph a;
  Permutation p_star;
  BipartiteData b;
  Eigen::MatrixXi w_support;  // support of the shuffled graph (the truth)
};

UnipartiteGraph draw_graph(const ExperimentConfig& cfg, std::uint64_t seed) {
  switch (cfg.scenario) {
    case Scenario::kChain:
      return chain_graph(cfg.n);
    case Scenario::kEr: {
      std::uint64_t s = seed;
      for (int attempt = 0; attempt < 10000; ++attempt) {
        UnipartiteGraph g = er_graph(cfg.n, cfg.er_p, s);
        if (!cfg.er_reject_automorphisms) return g;
        if (!g.empty() && !has_nontrivial_automorphism(g)) return g;
        s = Rng::derive(s, 7777);
      }
      throw SolverError("could not sample an asymmetric ER graph");
    }
    default:
      throw ConfigError("scenario has no random unipartite graph");
  }
}

MrfParams scenario_params(const ExperimentConfig& cfg, const UnipartiteGraph& w) {
  if (cfg.family == ModelFamily::kIsing) {
    Eigen::MatrixXd theta = cfg.theta_magnitude * w.adj();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(w.n());
    if (cfg.beta_rule == BetaRule::kCentering) beta = -0.5 * theta.rowwise().sum();
    return MrfParams(ModelFamily::kIsing, std::move(theta), std::move(beta));
  }
  Eigen::MatrixXd theta = cfg.theta_magnitude * w.adj();
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(theta).eigenvalues().minCoeff();
  theta.diagonal().array() += cfg.gaussian_min_eig - min_eig;
  return MrfParams(ModelFamily::kGaussian, std::move(theta), Eigen::VectorXd::Zero(w.n()));
}

SeedSet draw_seeds(const Permutation& p_star, double fraction, std::uint64_t seed) {
  const int n = p_star.size();
  const int k = static_cast<int>(std::ceil(fraction * n - 1e-12));
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < k; ++i) pairs.emplace_back(order[i], p_star(order[i]));
  std::sort(pairs.begin(), pairs.end());
  return SeedSet(std::move(pairs));
}

std::string sanitize_csv(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

ResultRow run_method(const ExperimentConfig& cfg, Method method, const Instance& inst,
                     const std::optional<SeedSet>& seeds) {
  ResultRow row;
  row.method = to_string(method);
  const auto start = std::chrono::steady_clock::now();
  try {
    Permutation p_hat = Permutation::identity(inst.a.n());
    std::optional<Eigen::MatrixXi> w_hat;
    switch (method) {
      case Method::kBInvCov: {
        MatchConfig mc = cfg.match;
        mc.seeds = seeds;
        const MatchResult res = match_invcov(inst.a, inst.b, mc);
        p_hat = res.p_hat;
        Eigen::MatrixXi supp = (res.theta_hat.array() != 0.0).cast<int>().matrix();
        supp.diagonal().setZero();
        w_hat = supp;
        row.lambda_star = res.lambda_star;
        break;
      }
      case Method::kBPseudo: {
        MatchConfig mc = cfg.match;
        mc.seeds = seeds;
        const MatchResult res = match_pseudo(inst.a, inst.b, mc);
        p_hat = res.p_hat;
        Eigen::MatrixXi supp = (res.theta_hat.array() != 0.0).cast<int>().matrix();
        supp.diagonal().setZero();
        w_hat = supp;
        row.lambda_star = res.lambda_star;
        break;
      }
      case Method::kCOmp:
        p_hat = collapse_and_match(inst.a, one_mode_projection(inst.b), seeds);
        break;
      case Method::kCCov:
        p_hat = collapse_and_match(inst.a, covariance_collapse(inst.b), seeds);
        break;
      case Method::kCCorr:
        p_hat = collapse_and_match(inst.a, correlation_matrix(inst.b), seeds);
        break;
      case Method::kCGlasso: {
        const EdgeSelection sel = glasso_edges_auto(inst.b, cfg.match.lambda_grid);
        p_hat = collapse_and_match(inst.a, sel.graph, seeds);
        w_hat = sel.graph.edges();
        row.lambda_star = sel.lambda_star;
        break;
      }
      case Method::kCMb: {
        const EdgeSelection sel = mb_edges_auto(inst.b, cfg.match.lambda_grid);
        p_hat = collapse_and_match(inst.a, sel.graph, seeds);
        w_hat = sel.graph.edges();
        row.lambda_star = sel.lambda_star;
        break;
      }
      case Method::kCollapseBf:
        p_hat = brute_force_qap(inst.a, one_mode_projection(inst.b).matrix, LapSense::kMax).p;
        break;
      case Method::kExactBf:
        p_hat = brute_force_match(inst.a, inst.b,
                                  inst.b.family() == ModelFamily::kIsing
                                      ? MatchObjective::kIsingExact
                                      : MatchObjective::kGaussian);
        break;
    }
    row.vertex_error = vertex_error(p_hat, inst.p_star);
    row.edge_error = edge_error(inst.a, p_hat, inst.p_star);
    if (w_hat) {
      const EdgeConfusion conf = edge_confusion(*w_hat, inst.w_support);
      row.fpr = conf.fpr;
      row.fnr = conf.fnr;
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

ResultRow run_thm2_check(const Instance& inst) {
  ResultRow row;
  row.method = "thm2-check";
  const auto start = std::chrono::steady_clock::now();
  try {
    const BruteForceResult mle =
        brute_force_match_scored(inst.a, inst.b, MatchObjective::kIsingRestricted);
    const Eigen::MatrixXd btilde =
        (inst.b.matrix() * inst.b.matrix().transpose()) / inst.b.m();
    const BruteForceQap frob = brute_force_qap(inst.a, btilde, LapSense::kMax);
    const RestrictedProfile at_mle = restricted_profile(inst.a, mle.p, inst.b);
    const RestrictedProfile at_frob = restricted_profile(inst.a, frob.p, inst.b);
    const double frob_of_mle = (permute_graph(inst.a, mle.p).adj().array() * btilde.array()).sum();

    const double tol = 1e-9 * std::max({1.0, std::abs(mle.score), std::abs(frob.objective)});
    const bool agree = std::abs(at_frob.loglik - mle.score) <= tol &&
                       std::abs(frob_of_mle - frob.objective) <= tol;
    row.vertex_error = agree ? 0.0 : 1.0;
    row.edge_error = std::abs(at_frob.loglik - mle.score);
    row.lambda_star = at_mle.theta_hat;  // fitted restricted theta
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

Instance make_instance(const ExperimentConfig& cfg, int replicate, int m,
                       const std::optional<std::pair<UnipartiteGraph, BipartiteData>>& external,
                       int m_index) {
  const std::uint64_t rep_seed = cfg.master_seed ^ static_cast<std::uint64_t>(replicate);
  if (cfg.scenario == Scenario::kExternalData) {
    const auto& [a, b] = *external;
    return Instance{a, Permutation::identity(a.n()), b, a.support()};
  }
  if (cfg.scenario == Scenario::kFig2Beta || cfg.scenario == Scenario::kFig2Theta) {
    const CounterexampleInstance ce =
        cfg.scenario == Scenario::kFig2Beta ? fig2_beta_instance() : fig2_theta_instance();
    Rng rng(Rng::derive(rep_seed, 1));
    const Permutation p_star = Permutation::uniform_random(ce.a.n(), rng);
    const UnipartiteGraph w = permute_graph(ce.a, p_star);
    // shuffle the parameters consistently with the hidden correspondence
    Eigen::MatrixXd theta_w = Eigen::MatrixXd::Zero(w.n(), w.n());
    Eigen::VectorXd beta_w = Eigen::VectorXd::Zero(w.n());
    for (int i = 0; i < w.n(); ++i) {
      beta_w[p_star(i)] = ce.params.beta()[i];
      for (int j = 0; j < w.n(); ++j) theta_w(p_star(i), p_star(j)) = ce.params.theta()(i, j);
    }
    const MrfParams params(ModelFamily::kIsing, std::move(theta_w), std::move(beta_w));
    const BipartiteData b = ising_gibbs_sample(params, m, cfg.burn_in, cfg.thin,
                                               Rng::derive(rep_seed, 100 + m_index));
    return Instance{ce.a, p_star, b, w.support()};
  }
  if (cfg.scenario == Scenario::kThm2Check) {
    const UnipartiteGraph a = chain_graph(cfg.n);
    Rng rng(Rng::derive(rep_seed, 1));
    const Permutation p_star = Permutation::uniform_random(cfg.n, rng);
    const UnipartiteGraph w = permute_graph(a, p_star);
    Eigen::MatrixXd theta = cfg.theta_magnitude * w.adj();
    const MrfParams params(ModelFamily::kIsing, std::move(theta), Eigen::VectorXd::Zero(cfg.n));
    const BipartiteData b =
        ising_gibbs_sample(params, m, cfg.burn_in, cfg.thin, Rng::derive(rep_seed, 100 + m_index));
    return Instance{a, p_star, b, w.support()};
  }

  const UnipartiteGraph a = draw_graph(cfg, Rng::derive(rep_seed, 0));
  Rng rng(Rng::derive(rep_seed, 1));
  const Permutation p_star = Permutation::uniform_random(cfg.n, rng);
  const UnipartiteGraph w = permute_graph(a, p_star);
  const MrfParams params = scenario_params(cfg, w);
  const std::uint64_t data_seed = Rng::derive(rep_seed, 100 + m_index);
  const BipartiteData b = cfg.family == ModelFamily::kIsing
                              ? ising_gibbs_sample(params, m, cfg.burn_in, cfg.thin, data_seed)
                              : gaussian_sample(params, m, data_seed);
  return Instance{a, p_star, b, w.support()};
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<Method> methods = cfg.resolved_methods();

  std::optional<std::pair<UnipartiteGraph, BipartiteData>> external;
  if (cfg.scenario == Scenario::kExternalData) {
    external = load_external(*cfg.graph_path, *cfg.bipartite_path);
  }

  struct Task {
    int replicate;
    int m_index;
    int fraction_index;
  };
  std::vector<Task> tasks;
  const int m_points =
      cfg.scenario == Scenario::kExternalData ? 1 : static_cast<int>(cfg.m_grid.size());
  for (int r = 0; r < cfg.replicates; ++r) {
    for (int mi = 0; mi < m_points; ++mi) {
      for (int fi = 0; fi < static_cast<int>(cfg.seed_fractions.size()); ++fi) {
        tasks.push_back({r, mi, fi});
      }
    }
  }

  std::vector<std::vector<ResultRow>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure_message;
  std::mutex failure_mutex;

  auto worker = [&]() {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks.size() || failed.load()) return;
      const Task& task = tasks[idx];
      try {
        const int m = cfg.scenario == Scenario::kExternalData
                          ? external->second.m()
                          : cfg.m_grid[task.m_index];
        const Instance inst = make_instance(cfg, task.replicate, m, external, task.m_index);
        const double fraction = cfg.seed_fractions[task.fraction_index];
        std::optional<SeedSet> seeds;
        if (fraction > 0.0) {
          const std::uint64_t rep_seed =
              cfg.master_seed ^ static_cast<std::uint64_t>(task.replicate);
          seeds = draw_seeds(inst.p_star, fraction,
                             Rng::derive(rep_seed, 200 + task.fraction_index));
        }
        std::vector<ResultRow> rows;
        if (cfg.scenario == Scenario::kThm2Check) {
          rows.push_back(run_thm2_check(inst));
        }
        for (Method method : methods) {
          rows.push_back(run_method(cfg, method, inst, seeds));
        }
        for (ResultRow& row : rows) {
          row.scenario = to_string(cfg.scenario);
          row.n = inst.a.n();
          row.m = m;
          row.replicate = task.replicate;
          row.seed_fraction = fraction;
        }
        slots[idx] = std::move(rows);
      } catch (const std::exception& e) {
        std::scoped_lock lock(failure_mutex);
        failed = true;
        failure_message = e.what();
        return;
      }
    }
  };

  int n_threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::clamp<int>(n_threads, 1, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failed) throw SolverError("experiment task failed: " + failure_message);

  std::vector<ResultRow> rows;
  for (auto& slot : slots) {
    for (ResultRow& r : slot) rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw DomainError("cannot summarize an empty row set");
  struct Key {
    std::string scenario, method;
    int m;
    double fraction;
    std::string metric;
    bool operator<(const Key& o) const {
      return std::tie(scenario, method, m, fraction, metric) <
             std::tie(o.scenario, o.method, o.m, o.fraction, o.metric);
    }
  };
  std::map<Key, std::vector<double>> groups;
  std::vector<Key> order;
  auto add = [&](const ResultRow& r, const std::string& metric, std::optional<double> v) {
    if (!v) return;
    Key k{r.scenario, r.method, r.m, r.seed_fraction, metric};
    auto [it, fresh] = groups.try_emplace(k);
    if (fresh) order.push_back(k);
    it->second.push_back(*v);
  };
  for (const ResultRow& r : rows) {
    if (!r.error.empty()) continue;
    add(r, "vertex_error", r.vertex_error);
    add(r, "edge_error", r.edge_error);
    add(r, "fpr", r.fpr);
    add(r, "fnr", r.fnr);
  }
  std::sort(order.begin(), order.end());
  std::vector<SummaryRow> out;
  for (const Key& k : order) {
    const std::vector<double>& v = groups[k];
    SummaryRow s;
    s.scenario = k.scenario;
    s.method = k.method;
    s.m = k.m;
    s.seed_fraction = k.fraction;
    s.metric = k.metric;
    s.count = static_cast<int>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    s.mean = mean;
    if (v.size() >= 2) {
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      s.se = std::sqrt(ss / (v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

constexpr const char* kResultsHeader =
    "scenario,method,n,m,replicate,seed_fraction,vertex_error,edge_error,fpr,fnr,lambda_star,"
    "error";

void write_svg_chart(const std::string& path, const std::string& metric,
                     const std::vector<SummaryRow>& summary, bool x_is_fraction) {
  // collect series points: method -> (x, mean, se)
  struct Pt {
    double x, y, se;
  };
  std::map<std::string, std::vector<Pt>> series;
  double x_min = 1e300, x_max = -1e300, y_max = 1e-9;
  for (const SummaryRow& s : summary) {
    if (s.metric != metric) continue;
    const double x = x_is_fraction ? s.seed_fraction : static_cast<double>(s.m);
    const double se = s.se.value_or(0.0);
    series[s.method].push_back({x, s.mean, se});
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_max = std::max(y_max, s.mean + 2.0 * se);
  }
  if (series.empty()) return;
  if (x_max <= x_min) x_max = x_min + 1.0;
  y_max = std::max(y_max, 1e-9) * 1.05;

  const double w = 640, h = 420, ml = 70, mr = 160, mt = 30, mb = 50;
  auto sx = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (w - ml - mr); };
  auto sy = [&](double y) { return h - mb - y / y_max * (h - mt - mb); };

  static const char* palette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                                  "#66ccee", "#aa3377", "#bbbbbb", "#000000"};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write chart " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << (h - mb) << "\" x2=\"" << (w - mr) << "\" y2=\""
      << (h - mb) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << (h - mb)
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (ml + (w - ml - mr) / 2) << "\" y=\"" << (h - 12)
      << "\" text-anchor=\"middle\" font-size=\"13\">"
      << (x_is_fraction ? "seed fraction" : "m") << "</text>\n";
  out << "<text x=\"16\" y=\"" << (mt + (h - mt - mb) / 2)
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << (mt + (h - mt - mb) / 2) << ")\">" << metric << "</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double y = y_max * tick / 4.0;
    out << "<text x=\"" << (ml - 6) << "\" y=\"" << (sy(y) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << format_double(y) << "</text>\n";
    out << "<line x1=\"" << (ml - 4) << "\" y1=\"" << sy(y) << "\" x2=\"" << ml << "\" y2=\""
        << sy(y) << "\" stroke=\"black\"/>\n";
  }
  int color_index = 0;
  double legend_y = mt + 10;
  for (auto& [method, pts] : series) {
    auto sorted = pts;
    std::sort(sorted.begin(), sorted.end(), [](const Pt& a, const Pt& b) { return a.x < b.x; });
    const char* color = palette[color_index % 8];
    ++color_index;
    for (const Pt& p : sorted) {
      out << "<text x=\"" << sx(p.x) << "\" y=\"" << (h - mb + 16)
          << "\" text-anchor=\"middle\" font-size=\"11\">" << format_double(p.x) << "</text>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const Pt& p : sorted) out << sx(p.x) << "," << sy(p.y) << " ";
    out << "\"/>\n";
    for (const Pt& p : sorted) {
      if (p.se > 0.0) {
        out << "<line x1=\"" << sx(p.x) << "\" y1=\"" << sy(std::max(0.0, p.y - 2 * p.se))
            << "\" x2=\"" << sx(p.x) << "\" y2=\"" << sy(std::min(y_max, p.y + 2 * p.se))
            << "\" stroke=\"" << color << "\"/>\n";
      }
      out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    }
    out << "<text x=\"" << (w - mr + 12) << "\" y=\"" << legend_y << "\" font-size=\"12\" fill=\""
        << color << "\">" << method << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
}

}  // namespace

void emit_outputs(const std::vector<ResultRow>& rows, const std::vector<SummaryRow>& summary,
                  const std::string& dir, const ExperimentConfig* cfg) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  {
    std::ofstream out(base / "results.csv");
    if (!out) throw DataError("cannot write " + (base / "results.csv").string());
    out << kResultsHeader << "\n";
    for (const ResultRow& r : rows) {
      out << r.scenario << "," << r.method << "," << r.n << "," << r.m << "," << r.replicate
          << "," << format_double(r.seed_fraction) << "," << opt_field(r.vertex_error) << ","
          << opt_field(r.edge_error) << "," << opt_field(r.fpr) << "," << opt_field(r.fnr) << ","
          << opt_field(r.lambda_star) << "," << sanitize_csv(r.error) << "\n";
    }
  }
  {
    std::ofstream out(base / "timings.csv");
    out << "scenario,method,n,m,replicate,seed_fraction,wall_time\n";
    for (const ResultRow& r : rows) {
      out << r.scenario << "," << r.method << "," << r.n << "," << r.m << "," << r.replicate
          << "," << format_double(r.seed_fraction) << "," << format_double(r.wall_time) << "\n";
    }
  }
  {
    std::ofstream out(base / "summary.csv");
    out << "scenario,method,m,seed_fraction,metric,mean,se,count\n";
    for (const SummaryRow& s : summary) {
      out << s.scenario << "," << s.method << "," << s.m << "," << format_double(s.seed_fraction)
          << "," << s.metric << "," << format_double(s.mean) << ","
          << (s.se ? format_double(*s.se) : std::string()) << "," << s.count << "\n";
    }
  }
  if (cfg) {
    std::ofstream out(base / "config.json");
    out << config_to_json_text(*cfg) << "\n";
  }
  if (!rows.empty()) {
    // x axis: the m grid when it varies, else the seed fractions
    std::map<int, int> ms;
    std::map<double, int> fs;
    for (const ResultRow& r : rows) {
      ms[r.m]++;
      fs[r.seed_fraction]++;
    }
    const bool x_is_fraction = ms.size() <= 1 && fs.size() > 1;
    for (const char* metric : {"vertex_error", "edge_error", "fpr", "fnr"}) {
      bool present = false;
      for (const SummaryRow& s : summary) {
        if (s.metric == metric) present = true;
      }
      if (present) {
        write_svg_chart((base / (std::string(metric) + ".svg")).string(), metric, summary,
                        x_is_fraction);
      }
    }
  }
}

std::vector<ResultRow> parse_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (line != kResultsHeader) throw DataError(path + ": unexpected header");
  std::vector<ResultRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    while (cells.size() < 12) cells.emplace_back();
    if (cells.size() != 12) throw DataError(path + ":" + std::to_string(line_no) + ": bad row");
    auto opt = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return std::stod(s);
    };
    ResultRow r;
    r.scenario = cells[0];
    r.method = cells[1];
    r.n = std::stoi(cells[2]);
    r.m = std::stoi(cells[3]);
    r.replicate = std::stoi(cells[4]);
    r.seed_fraction = std::stod(cells[5]);
    r.vertex_error = opt(cells[6]);
    r.edge_error = opt(cells[7]);
    r.fpr = opt(cells[8]);
    r.fnr = opt(cells[9]);
    r.lambda_star = opt(cells[10]);
    r.error = cells[11];
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

void require_keys(const json& j, const std::vector<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError("unknown config key '" + it.key() + "'");
    }
  }
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_keys(j, {"scenario", "n", "m", "m_grid", "family", "theta", "beta_rule", "er_p",
                   "er_reject_automorphisms", "gaussian_min_eig", "replicates", "seed_fractions",
                   "methods", "master_seed", "out_dir", "threads", "burn_in", "thin",
                   "lambda_grid", "max_outer", "fw_max", "conv_tol", "graph_path",
                   "bipartite_path"});
  ExperimentConfig cfg;
  try {
    if (j.contains("scenario")) cfg.scenario = scenario_from_string(j["scenario"]);
    if (j.contains("n")) cfg.n = j["n"];
    if (j.contains("m")) cfg.m_grid = {j["m"].get<int>()};
    if (j.contains("m_grid")) cfg.m_grid = j["m_grid"].get<std::vector<int>>();
    if (j.contains("family")) cfg.family = family_from_string(j["family"]);
    if (j.contains("theta")) cfg.theta_magnitude = j["theta"];
    if (j.contains("beta_rule")) cfg.beta_rule = beta_rule_from_string(j["beta_rule"]);
    if (j.contains("er_p")) cfg.er_p = j["er_p"];
    if (j.contains("er_reject_automorphisms")) {
      cfg.er_reject_automorphisms = j["er_reject_automorphisms"];
    }
    if (j.contains("gaussian_min_eig")) cfg.gaussian_min_eig = j["gaussian_min_eig"];
    if (j.contains("replicates")) cfg.replicates = j["replicates"];
    if (j.contains("seed_fractions")) {
      cfg.seed_fractions = j["seed_fractions"].get<std::vector<double>>();
    }
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& m : j["methods"]) cfg.methods.push_back(method_from_string(m));
    }
    if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"];
    if (j.contains("threads")) cfg.threads = j["threads"];
    if (j.contains("burn_in")) cfg.burn_in = j["burn_in"];
    if (j.contains("thin")) cfg.thin = j["thin"];
    if (j.contains("lambda_grid")) {
      cfg.match.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
    }
    if (j.contains("max_outer")) cfg.match.max_outer = j["max_outer"];
    if (j.contains("fw_max")) cfg.match.fw_max = j["fw_max"];
    if (j.contains("conv_tol")) cfg.match.conv_tol = j["conv_tol"];
    if (j.contains("graph_path")) cfg.graph_path = j["graph_path"].get<std::string>();
    if (j.contains("bipartite_path")) cfg.bipartite_path = j["bipartite_path"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
  json j;
  j["scenario"] = to_string(cfg.scenario);
  j["n"] = cfg.n;
  j["m_grid"] = cfg.m_grid;
  j["family"] = to_string(cfg.family);
  j["theta"] = cfg.theta_magnitude;
  j["beta_rule"] = to_string(cfg.beta_rule);
  j["er_p"] = cfg.er_p;
  j["er_reject_automorphisms"] = cfg.er_reject_automorphisms;
  j["gaussian_min_eig"] = cfg.gaussian_min_eig;
  j["replicates"] = cfg.replicates;
  j["seed_fractions"] = cfg.seed_fractions;
  json methods = json::array();
  for (Method m : cfg.resolved_methods()) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["master_seed"] = cfg.master_seed;
  j["out_dir"] = cfg.out_dir;
  j["threads"] = cfg.threads;
  j["burn_in"] = cfg.burn_in;
  j["thin"] = cfg.thin;
  j["lambda_grid"] = cfg.match.lambda_grid;
  j["max_outer"] = cfg.match.max_outer;
  j["fw_max"] = cfg.match.fw_max;
  j["conv_tol"] = cfg.match.conv_tol;
  if (cfg.graph_path) j["graph_path"] = *cfg.graph_path;
  if (cfg.bipartite_path) j["bipartite_path"] = *cfg.bipartite_path;
  return j.dump(2);
}

std::pair<UnipartiteGraph, BipartiteData> load_external(const std::string& graph_path,
                                                        const std::string& bipartite_path) {
  UnipartiteGraph a = read_graph_tsv(graph_path);
  BipartiteData b = read_bipartite_csv(bipartite_path);
  if (a.n() != b.n()) {
    throw DataError("graph has " + std::to_string(a.n()) + " vertices but bipartite data has " +
                    std::to_string(b.n()) + " rows");
  }
  return {std::move(a), std::move(b)};
}

std::vector<int> degree_band_filter(const UnipartiteGraph& a, double min_deg, double max_deg) {
  const Eigen::VectorXd deg = a.degrees();
  std::vector<int> kept;
  for (int i = 0; i < a.n(); ++i) {
    if (deg[i] >= min_deg && deg[i] <= max_deg) kept.push_back(i);
  }
  return kept;
}

std::vector<int> bipartite_degree_band_filter(const BipartiteData& b, double min_sum,
                                              double max_sum) {
  std::vector<int> kept;
  for (int i = 0; i < b.n(); ++i) {
    const double s = b.matrix().row(i).sum();
    if (s >= min_sum && s <= max_sum) kept.push_back(i);
  }
  return kept;
}

std::vector<int> largest_component_filter(const UnipartiteGraph& a) {
  const int n = a.n();
  std::vector<int> comp(n, -1);
  int best_root = -1, best_size = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] != -1) continue;
    std::vector<int> stack{s};
    comp[s] = s;
    int size = 0;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      ++size;
      for (int u = 0; u < n; ++u) {
        if (a.adj()(v, u) != 0.0 && comp[u] == -1) {
          comp[u] = s;
          stack.push_back(u);
        }
      }
    }
    if (size > best_size) {  // ties keep the earlier root
      best_size = size;
      best_root = s;
    }
  }
  std::vector<int> kept;
  for (int i = 0; i < n; ++i) {
    if (comp[i] == best_root) kept.push_back(i);
  }
  return kept;
}

std::vector<int> collinear_rows_filter(const BipartiteData& b) {
  const int n = b.n();
  std::vector<int> kept;
  std::vector<char> dropped(n, 0);
  for (int i = 0; i < n; ++i) {
    const double ni = b.matrix().row(i).squaredNorm();
    if (ni == 0.0) {
      dropped[i] = 1;
      continue;
    }
    for (int j = 0; j < i; ++j) {
      if (dropped[j]) continue;
      const double nj = b.matrix().row(j).squaredNorm();
      const double dot = b.matrix().row(i).dot(b.matrix().row(j));
      if (std::abs(dot * dot - ni * nj) <= 1e-12 * ni * nj) {
        dropped[i] = 1;
        break;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!dropped[i]) kept.push_back(i);
  }
  return kept;
}

FilteredData subset_vertices(const UnipartiteGraph& a, const BipartiteData& b,
                             const std::vector<int>& kept) {
  if (a.n() != b.n()) throw DimensionError("graph and data sizes differ");
  for (int i : kept) {
    if (i < 0 || i >= a.n()) throw DomainError("kept index out of range");
  }
  const int k = static_cast<int>(kept.size());
  Eigen::MatrixXd adj(k, k);
  Eigen::MatrixXd rows(k, b.m());
  for (int i = 0; i < k; ++i) {
    rows.row(i) = b.matrix().row(kept[i]);
    for (int j = 0; j < k; ++j) adj(i, j) = a.adj()(kept[i], kept[j]);
  }
  return {UnipartiteGraph(std::move(adj)), BipartiteData(std::move(rows), b.family()), kept};
}

bool has_nontrivial_automorphism(const UnipartiteGraph& a) {
  const int n = a.n();
  if (n > 12) throw CapacityError("automorphism search is exhaustive; n must be <= 12");
  std::vector<int> map(n, -1);
  std::vector<char> used(n, 0);
  const Eigen::MatrixXd& adj = a.adj();
  // DFS over candidate images with incremental edge-consistency checks
  auto dfs = [&](auto&& self, int v) -> bool {
    if (v == n) {
      for (int i = 0; i < n; ++i) {
        if (map[i] != i) return true;
      }
      return false;
    }
    for (int c = 0; c < n; ++c) {
      if (used[c]) continue;
      bool ok = true;
      for (int u = 0; u < v; ++u) {
        if (adj(u, v) != adj(map[u], c)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      map[v] = c;
      used[c] = 1;
      if (self(self, v + 1)) return true;
      used[c] = 0;
      map[v] = -1;
    }
    return false;
  };
  return dfs(dfs, 0);
}

}  // namespace bipmatch
