#include "bipmatch/graphs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bipmatch/detail/format.hpp"

namespace bipmatch {

namespace {
constexpr double kSymTol = 1e-12;
constexpr double kDsEntryTol = 1e-10;
constexpr double kDsSumTol = 1e-8;
}  // namespace

Permutation::Permutation(std::vector<int> map) : map_(std::move(map)) {
  const int n = static_cast<int>(map_.size());
  std::vector<char> seen(n, 0);
  for (int v : map_) {
    if (v < 0 || v >= n || seen[v]) {
      throw DomainError("permutation map is not a bijection on [0, " + std::to_string(n) + ")");
    }
    seen[v] = 1;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> m(n);
  for (int i = 0; i < n; ++i) m[i] = i;
  return Permutation(std::move(m));
}

Permutation Permutation::uniform_random(int n, Rng& rng) {
  std::vector<int> m(n);
  for (int i = 0; i < n; ++i) m[i] = i;
  for (int i = n - 1; i > 0; --i) {
    std::swap(m[i], m[rng.uniform_int(i + 1)]);
  }
  return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(map_.size());
  for (int i = 0; i < size(); ++i) inv[map_[i]] = i;
  return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& other) const {
  if (size() != other.size()) throw DimensionError("cannot compose permutations of different sizes");
  std::vector<int> m(map_.size());
  for (int i = 0; i < size(); ++i) m[i] = other.map_[map_[i]];
  return Permutation(std::move(m));
}

Eigen::MatrixXd Permutation::matrix() const {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(size(), size());
  for (int i = 0; i < size(); ++i) p(i, map_[i]) = 1.0;
  return p;
}

bool Permutation::is_identity() const {
  for (int i = 0; i < size(); ++i) {
    if (map_[i] != i) return false;
  }
  return true;
}

UnipartiteGraph::UnipartiteGraph(Eigen::MatrixXd adj) : adj_(std::move(adj)) {
  if (adj_.rows() != adj_.cols()) throw DimensionError("adjacency matrix must be square");
  const int n = static_cast<int>(adj_.rows());
  for (int i = 0; i < n; ++i) {
    if (adj_(i, i) != 0.0) throw DomainError("adjacency diagonal must be zero");
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(adj_(i, j) - adj_(j, i)) > kSymTol) {
        throw DomainError("adjacency matrix must be symmetric");
      }
      const double w = adj_(i, j);
      if (!(w >= 0.0 && w <= 1.0)) {
        throw DomainError("edge weights must lie in [0, 1], got " + format_double(w));
      }
      adj_(j, i) = w;  // store exactly symmetric
    }
  }
}

bool UnipartiteGraph::is_binary() const {
  return ((adj_.array() == 0.0) || (adj_.array() == 1.0)).all();
}

bool UnipartiteGraph::empty() const { return adj_.cwiseAbs().sum() == 0.0; }

double UnipartiteGraph::edge_count() const { return adj_.sum() / 2.0; }

Eigen::VectorXd UnipartiteGraph::degrees() const { return adj_.rowwise().sum(); }

double UnipartiteGraph::frobenius_sq() const { return adj_.squaredNorm(); }

Eigen::MatrixXi UnipartiteGraph::support() const {
  return (adj_.array() != 0.0).cast<int>().matrix();
}

DoublyStochastic::DoublyStochastic(Eigen::MatrixXd d) : d_(std::move(d)) {
  if (d_.rows() != d_.cols()) throw DimensionError("doubly stochastic matrix must be square");
  if ((d_.array() < -kDsEntryTol).any()) {
    throw DomainError("doubly stochastic matrix has a negative entry");
  }
  const Eigen::VectorXd rs = d_.rowwise().sum();
  const Eigen::VectorXd cs = d_.colwise().sum();
  if (((rs.array() - 1.0).abs() > kDsSumTol).any() || ((cs.array() - 1.0).abs() > kDsSumTol).any()) {
    throw DomainError("doubly stochastic matrix has a row or column sum away from 1");
  }
}

SeedSet::SeedSet(std::vector<std::pair<int, int>> p) : pairs(std::move(p)) {
  std::vector<int> a, b;
  for (const auto& [i, j] : pairs) {
    a.push_back(i);
    b.push_back(j);
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (std::adjacent_find(a.begin(), a.end()) != a.end() ||
      std::adjacent_find(b.begin(), b.end()) != b.end()) {
    throw SeedError("seed pairs contain a duplicated vertex");
  }
}

UnipartiteGraph chain_graph(int n) {
  if (n < 2) throw DomainError("chain graph needs at least 2 vertices, got " + std::to_string(n));
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    a(i, i + 1) = 1.0;
    a(i + 1, i) = 1.0;
  }
  return UnipartiteGraph(std::move(a));
}

UnipartiteGraph er_graph(int n, double p, std::uint64_t seed) {
  if (n < 1) throw DomainError("graph needs at least 1 vertex");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError("edge probability must lie in [0, 1], got " + format_double(p));
  }
  Rng rng(seed);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.bernoulli(p)) {
        a(i, j) = 1.0;
        a(j, i) = 1.0;
      }
    }
  }
  return UnipartiteGraph(std::move(a));
}

UnipartiteGraph permute_graph(const UnipartiteGraph& a, const Permutation& p) {
  if (a.n() != p.size()) {
    throw DimensionError("graph has " + std::to_string(a.n()) + " vertices but permutation has " +
                         std::to_string(p.size()));
  }
  const int n = a.n();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      w(p(i), p(j)) = a.adj()(i, j);
    }
  }
  return UnipartiteGraph(std::move(w));
}

Permutation direct_sum(const Permutation& r, const Permutation& q) {
  std::vector<int> m;
  m.reserve(r.size() + q.size());
  for (int i = 0; i < r.size(); ++i) m.push_back(r(i));
  for (int i = 0; i < q.size(); ++i) m.push_back(r.size() + q(i));
  return Permutation(std::move(m));
}

DoublyStochastic barycenter(int n) {
  if (n < 1) throw DomainError("barycenter needs n >= 1");
  return DoublyStochastic(Eigen::MatrixXd::Constant(n, n, 1.0 / n));
}

namespace {

[[noreturn]] void bad_line(const std::string& path, int line_no, const std::string& what) {
  throw DataError(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

UnipartiteGraph read_graph_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open graph file " + path);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  ++line_no;
  int n = -1;
  if (std::sscanf(line.c_str(), "# n=%d", &n) != 1 || n < 1) {
    bad_line(path, line_no, "expected header '# n=<count>'");
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int i, j;
    double w;
    if (!(ss >> i >> j >> w)) bad_line(path, line_no, "expected 'i<TAB>j<TAB>weight'");
    if (i < 0 || j < 0 || i >= n || j >= n) bad_line(path, line_no, "vertex index out of range");
    if (i >= j) bad_line(path, line_no, "expected upper-triangle edge (i < j)");
    if (!(w > 0.0 && w <= 1.0)) bad_line(path, line_no, "edge weight outside (0, 1]");
    a(i, j) = w;
    a(j, i) = w;
  }
  return UnipartiteGraph(std::move(a));
}

void write_graph_tsv(const UnipartiteGraph& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write graph file " + path);
  out << "# n=" << a.n() << "\n";
  for (int i = 0; i < a.n(); ++i) {
    for (int j = i + 1; j < a.n(); ++j) {
      if (a.adj()(i, j) != 0.0) {
        out << i << "\t" << j << "\t" << format_double(a.adj()(i, j)) << "\n";
      }
    }
  }
  if (!out) throw DataError("failed writing graph file " + path);
}

SeedSet read_seeds_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open seed file " + path);
  std::vector<std::pair<int, int>> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int i, j;
    if (!(ss >> i >> j)) bad_line(path, line_no, "expected 'i<TAB>j'");
    if (i < 0 || j < 0) bad_line(path, line_no, "seed index negative");
    pairs.emplace_back(i, j);
  }
  return SeedSet(std::move(pairs));
}

void write_seeds_tsv(const SeedSet& seeds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write seed file " + path);
  for (const auto& [i, j] : seeds.pairs) out << i << "\t" << j << "\n";
}

}  // namespace bipmatch
