#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bipmatch/errors.hpp"
#include "bipmatch/graphs.hpp"
#include "bipmatch/matcher.hpp"
#include "bipmatch/models.hpp"

namespace bipmatch {

enum class Scenario { kChain, kEr, kThm2Check, kFig2Beta, kFig2Theta, kExternalData };
enum class BetaRule { kZero, kCentering };
enum class Method {
  kBInvCov,
  kBPseudo,
  kCOmp,
  kCCov,
  kCCorr,
  kCGlasso,
  kCMb,
  kCollapseBf,  // exhaustive matching against the one-mode projection
  kExactBf      // exhaustive matching by the exact profile likelihood
};

std::string to_string(Scenario s);
std::string to_string(BetaRule r);
std::string to_string(Method m);
Scenario scenario_from_string(const std::string& s);
BetaRule beta_rule_from_string(const std::string& s);
Method method_from_string(const std::string& s);

struct ExperimentConfig {
  Scenario scenario = Scenario::kChain;
  int n = 20;
  std::vector<int> m_grid = {2000};
  ModelFamily family = ModelFamily::kIsing;
  double theta_magnitude = 0.4;
  BetaRule beta_rule = BetaRule::kCentering;
  double er_p = 0.05;
  bool er_reject_automorphisms = false;
  double gaussian_min_eig = 0.5;  // smallest eigenvalue of theta* after the ridge shift
  int replicates = 1;
  std::vector<double> seed_fractions = {0.0};
  std::vector<Method> methods;  // empty selects the scenario default
  std::uint64_t master_seed = 1;
  std::string out_dir = "results";
  int threads = 0;  // 0 = hardware concurrency
  int burn_in = 500;
  int thin = 5;
  MatchConfig match;
  std::optional<std::string> graph_path;      // external-data
  std::optional<std::string> bipartite_path;  // external-data

  void validate() const;
  std::vector<Method> resolved_methods() const;
};

// One evaluated (method x replicate x grid point). For the thm2-check
// scenario, vertex_error carries the disagreement flag (0 = the two
// exhaustive matchers are objective-equivalent), edge_error the profile
// objective gap, and lambda_star the fitted restricted theta.
struct ResultRow {
  std::string scenario;
  std::string method;
  int n = 0;
  int m = 0;
  int replicate = 0;
  double seed_fraction = 0.0;
  std::optional<double> vertex_error;
  std::optional<double> edge_error;
  std::optional<double> fpr;
  std::optional<double> fnr;
  std::optional<double> lambda_star;
  std::string error;       // empty on success
  double wall_time = 0.0;  // seconds; written to timings.csv only

  bool operator==(const ResultRow& other) const;
};

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

struct SummaryRow {
  std::string scenario;
  std::string method;
  int m = 0;
  double seed_fraction = 0.0;
  std::string metric;
  double mean = 0.0;
  std::optional<double> se;
  int count = 0;
};

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

// Writes results.csv, timings.csv, summary.csv, config.json (when a config is
// supplied) and one SVG line chart per metric into dir. results.csv is
// deterministic; wall times live in timings.csv.
void emit_outputs(const std::vector<ResultRow>& rows, const std::vector<SummaryRow>& summary,
                  const std::string& dir, const ExperimentConfig* cfg);

std::vector<ResultRow> parse_results_csv(const std::string& path);

ExperimentConfig config_from_json_file(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);

// --- external data -----------------------------------------------------

std::pair<UnipartiteGraph, BipartiteData> load_external(const std::string& graph_path,
                                                        const std::string& bipartite_path);

// Vertices with min_deg <= degree <= max_deg in the unipartite graph.
std::vector<int> degree_band_filter(const UnipartiteGraph& a, double min_deg, double max_deg);
// Vertices whose bipartite row sum lies in [min_sum, max_sum].
std::vector<int> bipartite_degree_band_filter(const BipartiteData& b, double min_sum,
                                              double max_sum);
// Vertices of the largest connected component (the one containing the
// smallest vertex index on ties).
std::vector<int> largest_component_filter(const UnipartiteGraph& a);
// Drops rows of B that are collinear with an earlier row (zero rows count as
// collinear with everything).
std::vector<int> collinear_rows_filter(const BipartiteData& b);

struct FilteredData {
  UnipartiteGraph a;
  BipartiteData b;
  std::vector<int> kept;  // original indices, ascending
};

FilteredData subset_vertices(const UnipartiteGraph& a, const BipartiteData& b,
                             const std::vector<int>& kept);

// Exhaustive automorphism test (n <= 12).
bool has_nontrivial_automorphism(const UnipartiteGraph& a);

}  // namespace bipmatch
