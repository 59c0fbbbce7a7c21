// bipmatch: matching a unipartite graph to the shared side of a bipartite
// network, plus the simulation harness around it.
//
//   bipmatch run      --config cfg.json
//   bipmatch match    --graph g.tsv --bipartite b.csv --method b-invcov [...]
//   bipmatch simulate --scenario chain --n 20 --m 500,2000 [...]
//
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bipmatch/baselines.hpp"
#include "bipmatch/detail/format.hpp"
#include "bipmatch/experiment.hpp"
#include "bipmatch/gauss_fit.hpp"
#include "bipmatch/matcher.hpp"
#include "bipmatch/metrics.hpp"

namespace {

using namespace bipmatch;

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stoi(cell));
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

int run_rows(const ExperimentConfig& cfg) {
  const std::vector<ResultRow> rows = run_experiment(cfg);
  const std::vector<SummaryRow> summary =
      rows.empty() ? std::vector<SummaryRow>{} : summarize(rows);
  emit_outputs(rows, summary, cfg.out_dir, &cfg);
  std::cout << "wrote " << rows.size() << " rows to " << cfg.out_dir << "/results.csv\n";
  return 0;
}

int cmd_run(const std::string& config_path) {
  return run_rows(config_from_json_file(config_path));
}

int cmd_match(const std::string& graph_path, const std::string& bipartite_path,
              const std::string& method_name, const std::string& seeds_path,
              const std::string& out_dir) {
  auto [a, b] = load_external(graph_path, bipartite_path);
  std::optional<SeedSet> seeds;
  if (!seeds_path.empty()) seeds = read_seeds_tsv(seeds_path);

  const Method method = method_from_string(method_name);
  Permutation p_hat = Permutation::identity(a.n());
  std::optional<double> lambda_star;
  Eigen::MatrixXd theta_hat;
  bool have_theta = false;

  switch (method) {
    case Method::kBInvCov: {
      MatchConfig mc;
      mc.seeds = seeds;
      const MatchResult res = match_invcov(a, b, mc);
      p_hat = res.p_hat;
      lambda_star = res.lambda_star;
      theta_hat = res.theta_hat;
      have_theta = true;
      break;
    }
    case Method::kBPseudo: {
      MatchConfig mc;
      mc.seeds = seeds;
      const MatchResult res = match_pseudo(a, b, mc);
      p_hat = res.p_hat;
      lambda_star = res.lambda_star;
      theta_hat = res.theta_hat;
      have_theta = true;
      break;
    }
    case Method::kCOmp:
      p_hat = collapse_and_match(a, one_mode_projection(b), seeds);
      break;
    case Method::kCCov:
      p_hat = collapse_and_match(a, covariance_collapse(b), seeds);
      break;
    case Method::kCCorr:
      p_hat = collapse_and_match(a, correlation_matrix(b), seeds);
      break;
    case Method::kCGlasso: {
      const EdgeSelection sel = glasso_edges_auto(b, default_lambda_grid());
      p_hat = collapse_and_match(a, sel.graph, seeds);
      lambda_star = sel.lambda_star;
      break;
    }
    case Method::kCMb: {
      const EdgeSelection sel = mb_edges_auto(b, default_lambda_grid());
      p_hat = collapse_and_match(a, sel.graph, seeds);
      lambda_star = sel.lambda_star;
      break;
    }
    default:
      throw ConfigError("method '" + method_name + "' is not available from the match command");
  }

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path base(out_dir);
  {
    std::ofstream out(base / "permutation.tsv");
    for (int i = 0; i < p_hat.size(); ++i) out << i << "\t" << p_hat(i) << "\n";
  }
  if (have_theta) {
    std::ofstream out(base / "theta_hat.csv");
    for (int i = 0; i < theta_hat.rows(); ++i) {
      for (int j = 0; j < theta_hat.cols(); ++j) {
        if (j) out << ",";
        out << format_double(theta_hat(i, j));
      }
      out << "\n";
    }
  }
  {
    nlohmann::json meta;
    meta["method"] = method_name;
    meta["n"] = a.n();
    meta["m"] = b.m();
    meta["family"] = to_string(b.family());
    if (lambda_star) meta["lambda_star"] = *lambda_star;
    std::ofstream out(base / "match.json");
    out << meta.dump(2) << "\n";
  }
  std::cout << "wrote " << (base / "permutation.tsv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unipartite-to-bipartite graph matching"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "path to the config JSON")->required();

  std::string graph_path, bipartite_path, method = "b-invcov", seeds_path, match_out = "match-out";
  CLI::App* match = app.add_subcommand("match", "match an external graph/bipartite pair");
  match->add_option("--graph", graph_path, "edge-list TSV")->required();
  match->add_option("--bipartite", bipartite_path, "bipartite CSV")->required();
  match->add_option("--method", method,
                    "b-invcov|b-pseudo|c-omp|c-cov|c-corr|c-glasso|c-mb");
  match->add_option("--seeds", seeds_path, "seed pair TSV");
  match->add_option("--out", match_out, "output directory");

  std::string scenario = "chain", m_list = "2000", fractions = "0", methods_list, family;
  int n = 20, replicates = 1, threads = 0;
  double theta = 0.4;
  std::uint64_t seed = 1;
  std::string sim_out = "sim-out";
  bool reject_autom = false;
  double er_p = 0.05;
  CLI::App* sim = app.add_subcommand("simulate", "run a synthetic scenario");
  sim->add_option("--scenario", scenario, "chain|er|thm2-check|fig2-beta|fig2-theta");
  sim->add_option("--n", n, "shared vertex count");
  sim->add_option("--m", m_list, "bipartite sizes, comma separated");
  sim->add_option("--replicates", replicates, "Monte Carlo replicates");
  sim->add_option("--theta", theta, "interaction magnitude");
  sim->add_option("--family", family, "ising|gaussian");
  sim->add_option("--methods", methods_list, "comma separated method names");
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--seed-fractions", fractions, "seed fractions, comma separated");
  sim->add_option("--er-p", er_p, "ER edge probability");
  sim->add_flag("--er-asymmetric", reject_autom, "rejection-sample automorphism-free ER graphs");
  sim->add_option("--threads", threads, "worker threads (0 = hardware)");
  sim->add_option("--out", sim_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (match->parsed()) return cmd_match(graph_path, bipartite_path, method, seeds_path,
                                          match_out);
    ExperimentConfig cfg;
    cfg.scenario = scenario_from_string(scenario);
    cfg.n = n;
    cfg.m_grid = parse_int_list(m_list);
    cfg.replicates = replicates;
    cfg.theta_magnitude = theta;
    if (!family.empty()) cfg.family = family_from_string(family);
    if (!methods_list.empty()) {
      std::stringstream ss(methods_list);
      std::string cell;
      while (std::getline(ss, cell, ',')) cfg.methods.push_back(method_from_string(cell));
    }
    cfg.master_seed = seed;
    cfg.seed_fractions = parse_double_list(fractions);
    cfg.er_p = er_p;
    cfg.er_reject_automorphisms = reject_autom;
    cfg.threads = threads;
    cfg.out_dir = sim_out;
    cfg.validate();
    return run_rows(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
