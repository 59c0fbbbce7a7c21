#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bipmatch/experiment.hpp"
#include "bipmatch/rng.hpp"

using namespace bipmatch;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("bipmatch_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  cfg.replicates = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.replicates = 1;
  cfg.m_grid = {100, 100};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.m_grid = {100};
  cfg.seed_fractions = {1.5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.seed_fractions = {0.0};
  cfg.validate();
}

TEST_CASE("config json round trip and unknown keys") {
  CHECK_THROWS_AS(config_from_json_text("{\"bogus\": 1}"), ConfigError);
  CHECK_THROWS_AS(config_from_json_text("not json"), ConfigError);

  ExperimentConfig cfg;
  cfg.scenario = Scenario::kEr;
  cfg.n = 9;
  cfg.m_grid = {50, 150};
  cfg.family = ModelFamily::kGaussian;
  cfg.methods = {Method::kBInvCov, Method::kCOmp};
  cfg.master_seed = 42;
  const ExperimentConfig back = config_from_json_text(config_to_json_text(cfg));
  CHECK(back.scenario == Scenario::kEr);
  CHECK(back.n == 9);
  CHECK(back.m_grid == cfg.m_grid);
  CHECK(back.family == ModelFamily::kGaussian);
  CHECK(back.methods == cfg.methods);
  CHECK(back.master_seed == 42);
}

TEST_CASE("run experiment shape contract") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::kChain;
  cfg.n = 6;
  cfg.m_grid = {2000};
  cfg.family = ModelFamily::kGaussian;
  cfg.replicates = 1;
  cfg.methods = {Method::kBInvCov};
  cfg.master_seed = 7;
  cfg.threads = 1;
  const std::vector<ResultRow> rows = run_experiment(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].method == "b-invcov");
  CHECK(rows[0].error.empty());
  REQUIRE(rows[0].vertex_error.has_value());
  CHECK(*rows[0].vertex_error >= 0.0);
  CHECK(*rows[0].vertex_error <= 1.0);
  CHECK(rows[0].m == 2000);
  CHECK(rows[0].n == 6);
}

TEST_CASE("every configured method appears per replicate") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::kChain;
  cfg.n = 5;
  cfg.m_grid = {200};
  cfg.family = ModelFamily::kGaussian;
  cfg.replicates = 2;
  // b-pseudo fails on gaussian data and must still produce tagged rows
  cfg.methods = {Method::kCOmp, Method::kBPseudo};
  cfg.master_seed = 3;
  const std::vector<ResultRow> rows = run_experiment(cfg);
  REQUIRE(rows.size() == 4);
  int tagged = 0;
  for (const ResultRow& r : rows) {
    if (r.method == "b-pseudo") {
      CHECK_FALSE(r.error.empty());
      CHECK_FALSE(r.vertex_error.has_value());
      ++tagged;
    } else {
      CHECK(r.error.empty());
    }
  }
  CHECK(tagged == 2);
}

TEST_CASE("full seeding gives exact recovery") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::kChain;
  cfg.n = 6;
  cfg.m_grid = {500};
  cfg.family = ModelFamily::kGaussian;
  cfg.replicates = 2;
  cfg.seed_fractions = {1.0};
  cfg.methods = {Method::kBInvCov, Method::kCOmp};
  cfg.master_seed = 11;
  for (const ResultRow& r : run_experiment(cfg)) {
    REQUIRE(r.error.empty());
    CHECK(*r.vertex_error == 0.0);
  }
}

TEST_CASE("determinism of results csv") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::kChain;
  cfg.n = 5;
  cfg.m_grid = {150, 300};
  cfg.family = ModelFamily::kGaussian;
  cfg.replicates = 2;
  cfg.methods = {Method::kCOmp, Method::kCCov};
  cfg.master_seed = 5;

  const auto dir1 = temp_dir("det1");
  const auto dir2 = temp_dir("det2");
  const std::vector<ResultRow> r1 = run_experiment(cfg);
  emit_outputs(r1, summarize(r1), dir1.string(), &cfg);
  const std::vector<ResultRow> r2 = run_experiment(cfg);
  emit_outputs(r2, summarize(r2), dir2.string(), &cfg);
  CHECK(slurp(dir1 / "results.csv") == slurp(dir2 / "results.csv"));
  CHECK(!slurp(dir1 / "results.csv").empty());
}

TEST_CASE("summarize statistics") {
  ResultRow base;
  base.scenario = "chain";
  base.method = "c-omp";
  base.n = 5;
  base.m = 100;

  // single row: se absent
  {
    ResultRow r = base;
    r.vertex_error = 0.4;
    const std::vector<SummaryRow> s = summarize({r});
    REQUIRE(s.size() == 1);
    CHECK(s[0].mean == 0.4);
    CHECK_FALSE(s[0].se.has_value());
    CHECK(s[0].count == 1);
  }
  // two identical rows: se = 0
  {
    ResultRow r = base;
    r.vertex_error = 0.4;
    ResultRow r2 = r;
    r2.replicate = 1;
    const std::vector<SummaryRow> s = summarize({r, r2});
    REQUIRE(s.size() == 1);
    CHECK(*s[0].se == 0.0);
  }
  // thirty known values against the direct formulas
  {
    std::vector<ResultRow> rows;
    double mean = 0.0;
    Rng rng(9);
    std::vector<double> vals;
    for (int i = 0; i < 30; ++i) {
      ResultRow r = base;
      r.replicate = i;
      const double v = rng.uniform01();
      vals.push_back(v);
      mean += v;
      r.vertex_error = v;
      rows.push_back(r);
    }
    mean /= 30;
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / 29.0 / 30.0);
    const std::vector<SummaryRow> s = summarize(rows);
    REQUIRE(s.size() == 1);
    CHECK(s[0].mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(*s[0].se == doctest::Approx(se).epsilon(1e-12));
    CHECK(s[0].count == 30);
  }
}

TEST_CASE("emit outputs and the csv round trip") {
  const auto dir = temp_dir("emit");

  // empty rows: header-only results.csv, no SVG
  emit_outputs({}, {}, dir.string(), nullptr);
  CHECK(slurp(dir / "results.csv") ==
        "scenario,method,n,m,replicate,seed_fraction,vertex_error,edge_error,fpr,fnr,"
        "lambda_star,error\n");
  CHECK_FALSE(std::filesystem::exists(dir / "vertex_error.svg"));

  ExperimentConfig cfg;
  cfg.scenario = Scenario::kChain;
  cfg.n = 5;
  cfg.m_grid = {100, 400};
  cfg.family = ModelFamily::kGaussian;
  cfg.replicates = 2;
  cfg.methods = {Method::kCOmp, Method::kCCov};
  cfg.master_seed = 13;
  const std::vector<ResultRow> rows = run_experiment(cfg);
  emit_outputs(rows, summarize(rows), dir.string(), &cfg);

  const std::vector<ResultRow> parsed = parse_results_csv((dir / "results.csv").string());
  REQUIRE(parsed.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(parsed[i] == rows[i]);

  // chart structure: one polyline per method, well-formed XML framing
  const std::string svg = slurp(dir / "vertex_error.svg");
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  std::size_t polylines = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
       pos = svg.find("<polyline", pos + 1)) {
    ++polylines;
  }
  CHECK(polylines == 2);
  CHECK(std::filesystem::exists(dir / "config.json"));
  CHECK(std::filesystem::exists(dir / "timings.csv"));
}

TEST_CASE("external data round trip and filters") {
  const auto dir = temp_dir("external");
  const UnipartiteGraph a = er_graph(10, 0.4, 3);
  Eigen::MatrixXd data(10, 8);
  Rng rng(4);
  for (int i = 0; i < data.size(); ++i) data(i / 8, i % 8) = rng.bernoulli(0.5) ? 1.0 : 0.0;
  const BipartiteData b(data, ModelFamily::kIsing);
  write_graph_tsv(a, (dir / "g.tsv").string());
  write_bipartite_csv(b, (dir / "b.csv").string());

  const auto [a2, b2] = load_external((dir / "g.tsv").string(), (dir / "b.csv").string());
  CHECK(a2.adj() == a.adj());
  CHECK(b2.matrix() == b.matrix());

  // degree band on a star: the hub is removed
  Eigen::MatrixXd star = Eigen::MatrixXd::Zero(13, 13);
  for (int leaf = 1; leaf < 13; ++leaf) star(0, leaf) = star(leaf, 0) = 1.0;
  const UnipartiteGraph k112{star};
  const std::vector<int> kept = degree_band_filter(k112, 2, 9);
  for (int i : kept) CHECK(i != 0);
  // leaves have degree 1 and fall below the band as well
  CHECK(kept.empty());

  // largest component: two triangles and an isolated vertex
  Eigen::MatrixXd two = Eigen::MatrixXd::Zero(7, 7);
  auto edge = [&two](int i, int j) { two(i, j) = two(j, i) = 1.0; };
  edge(0, 1);
  edge(1, 2);
  edge(0, 2);
  edge(3, 4);
  edge(4, 5);
  edge(3, 5);
  const std::vector<int> comp = largest_component_filter(UnipartiteGraph(two));
  CHECK(comp == std::vector<int>({0, 1, 2}));

  // collinear rows: a duplicated and a scaled row are dropped
  Eigen::MatrixXd lin(4, 3);
  lin << 1, 2, 3, 2, 4, 6, 1, 0, 0, 1, 2, 3.5;
  const std::vector<int> rows_kept =
      collinear_rows_filter(BipartiteData(lin, ModelFamily::kGaussian));
  CHECK(rows_kept == std::vector<int>({0, 2, 3}));

  // subsetting keeps graph and data aligned
  const FilteredData sub = subset_vertices(a, b, {0, 2, 5, 7});
  CHECK(sub.a.n() == 4);
  CHECK(sub.b.n() == 4);
  CHECK(sub.a.adj()(0, 1) == a.adj()(0, 2));
  CHECK(sub.b.matrix().row(1) == b.matrix().row(2));
}

TEST_CASE("thm2 check scenario emits agreement rows") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::kThm2Check;
  cfg.n = 5;
  cfg.m_grid = {2000};
  cfg.theta_magnitude = 0.6;
  cfg.replicates = 3;
  cfg.master_seed = 21;
  const std::vector<ResultRow> rows = run_experiment(cfg);
  REQUIRE(rows.size() == 3);
  for (const ResultRow& r : rows) {
    REQUIRE(r.error.empty());
    REQUIRE(r.lambda_star.has_value());
    if (*r.lambda_star > 0.0) CHECK(*r.vertex_error == 0.0);
  }
}

TEST_CASE("automorphism detector agrees with exhaustive enumeration") {
  CHECK(has_nontrivial_automorphism(chain_graph(4)));
  Rng rng(31);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 4 + rng.uniform_int(3);
    const UnipartiteGraph g = er_graph(n, 0.4, rng.next_u64());
    bool expected = false;
    std::vector<int> map(n);
    for (int i = 0; i < n; ++i) map[i] = i;
    while (std::next_permutation(map.begin(), map.end())) {
      bool is_auto = true;
      for (int i = 0; i < n && is_auto; ++i) {
        for (int j = 0; j < n; ++j) {
          if (g.adj()(i, j) != g.adj()(map[i], map[j])) {
            is_auto = false;
            break;
          }
        }
      }
      if (is_auto) {
        expected = true;
        break;
      }
    }
    CHECK(has_nontrivial_automorphism(g) == expected);
  }
}
