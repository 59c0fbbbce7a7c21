#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bipmatch/errors.hpp"
#include "bipmatch/rng.hpp"

namespace bipmatch {

class Rng;

// Vertex bijection stored as an index array; map(i) is the image of vertex i.
// As a matrix, P(i, map(i)) = 1.
class Permutation {
 public:
  explicit Permutation(std::vector<int> map);

  static Permutation identity(int n);
  static Permutation uniform_random(int n, Rng& rng);

  int size() const { return static_cast<int>(map_.size()); }
  int operator()(int i) const { return map_[i]; }
  const std::vector<int>& map() const { return map_; }

  Permutation inverse() const;
  // compose(P, Q).map(i) = Q(P(i)), so matrix(compose) = matrix(P) * matrix(Q).
  Permutation compose(const Permutation& other) const;
  Eigen::MatrixXd matrix() const;

  bool is_identity() const;
  bool operator==(const Permutation& other) const { return map_ == other.map_; }
  bool operator!=(const Permutation& other) const { return map_ != other.map_; }
  bool operator<(const Permutation& other) const { return map_ < other.map_; }

 private:
  std::vector<int> map_;
};

// Symmetric hollow adjacency matrix with weights in [0, 1] (binary in the base
// model; weighted graphs arise from averaging binary ones).
class UnipartiteGraph {
 public:
  explicit UnipartiteGraph(Eigen::MatrixXd adj);

  int n() const { return static_cast<int>(adj_.rows()); }
  const Eigen::MatrixXd& adj() const { return adj_; }

  bool is_binary() const;
  bool empty() const;  // no edges
  double edge_count() const;
  Eigen::VectorXd degrees() const;
  double frobenius_sq() const;
  // 0/1 support of the nonzero entries.
  Eigen::MatrixXi support() const;

 private:
  Eigen::MatrixXd adj_;
};

// Element of the Birkhoff polytope: entries >= -1e-10, row and column sums
// within 1e-8 of 1.
class DoublyStochastic {
 public:
  explicit DoublyStochastic(Eigen::MatrixXd d);

  int n() const { return static_cast<int>(d_.rows()); }
  const Eigen::MatrixXd& matrix() const { return d_; }

 private:
  Eigen::MatrixXd d_;
};

// Known vertex correspondences (index in A, index in B), fixed during matching.
struct SeedSet {
  std::vector<std::pair<int, int>> pairs;

  SeedSet() = default;
  explicit SeedSet(std::vector<std::pair<int, int>> p);

  int size() const { return static_cast<int>(pairs.size()); }
  bool empty() const { return pairs.empty(); }
};

// Path graph: vertex i adjacent to i+1.
UnipartiteGraph chain_graph(int n);

// Erdos-Renyi graph; upper-triangle entries are independent Bernoulli(p) draws.
UnipartiteGraph er_graph(int n, double p, std::uint64_t seed);

// Returns P^T A P, the relabeling of A sending vertex i to P(i).
UnipartiteGraph permute_graph(const UnipartiteGraph& a, const Permutation& p);

// Block-diagonal permutation R on the first size(R) indices, Q shifted after.
Permutation direct_sum(const Permutation& r, const Permutation& q);

// The doubly stochastic matrix with every entry 1/n.
DoublyStochastic barycenter(int n);

// Edge-list TSV: header line "# n=<count>", then one "i\tj\tweight" line per
// upper-triangle edge, 0-based indices.
UnipartiteGraph read_graph_tsv(const std::string& path);
void write_graph_tsv(const UnipartiteGraph& a, const std::string& path);

// Seed pair TSV: one "i\tj" line per pair, 0-based.
SeedSet read_seeds_tsv(const std::string& path);
void write_seeds_tsv(const SeedSet& seeds, const std::string& path);

}  // namespace bipmatch
