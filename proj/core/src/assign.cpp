#include "bipmatch/assign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bipmatch/detail/linalg.hpp"

namespace bipmatch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LapSolution {
  std::vector<int> row_to_col;
  std::vector<double> u, v;  // dual potentials, c_ij - u_i - v_j >= 0
};

// Shortest augmenting path assignment (Jonker-Volgenant family).
LapSolution lap_min(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  LapSolution sol;
  sol.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j) sol.row_to_col[p[j] - 1] = j - 1;
  sol.u.assign(u.begin() + 1, u.end());
  sol.v.assign(v.begin() + 1, v.end());
  return sol;
}

// Lexicographically smallest perfect matching within the tight-edge graph.
// Every optimal assignment is supported on tight edges (complementary
// slackness), and any perfect matching of tight edges is optimal.
std::vector<int> lex_min_on_tight(const Eigen::MatrixXd& c, const LapSolution& sol, double eps) {
  const int n = static_cast<int>(c.rows());
  std::vector<std::vector<int>> tight(n);
  bool any_choice = false;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (c(i, j) - sol.u[i] - sol.v[j] <= eps) tight[i].push_back(j);
    }
    if (tight[i].size() > 1) any_choice = true;
  }
  std::vector<int> row_match = sol.row_to_col;
  if (!any_choice) return row_match;

  std::vector<int> col_match(n, -1);
  for (int i = 0; i < n; ++i) col_match[row_match[i]] = i;
  std::vector<char> fixed_row(n, 0), fixed_col(n, 0);

  // Kuhn augmenting search from an unmatched row, avoiding fixed columns.
  std::vector<char> visited(n, 0);
  auto augment = [&](auto&& self, int row) -> bool {
    for (int j : tight[row]) {
      if (fixed_col[j] || visited[j]) continue;
      visited[j] = 1;
      if (col_match[j] == -1 || self(self, col_match[j])) {
        col_match[j] = row;
        row_match[row] = j;
        return true;
      }
    }
    return false;
  };

  for (int i = 0; i < n; ++i) {
    for (int j : tight[i]) {
      if (fixed_col[j]) continue;
      if (row_match[i] == j) break;  // already the smallest feasible choice
      if (j > row_match[i]) break;   // candidates are ascending
      // try forcing i -> j and re-augmenting the displaced row
      const int displaced = col_match[j];
      const int old_col = row_match[i];
      col_match[old_col] = -1;
      col_match[j] = i;
      row_match[i] = j;
      bool ok = true;
      if (displaced != -1 && displaced != i) {
        row_match[displaced] = -1;
        std::fill(visited.begin(), visited.end(), 0);
        visited[j] = 1;
        ok = augment(augment, displaced);
        if (!ok) {
          row_match[displaced] = j;  // restore
        }
      }
      if (ok) break;
      col_match[j] = displaced;
      col_match[old_col] = i;
      row_match[i] = old_col;
    }
    fixed_row[i] = 1;
    fixed_col[row_match[i]] = 1;
  }
  return row_match;
}

double trace_objective(const Eigen::MatrixXd& a, const Eigen::MatrixXd& d,
                       const Eigen::MatrixXd& m) {
  return (d.array() * (a * d * m).array()).sum();
}

// Maximizer of a*g^2 + b*g on [0, 1]; smaller step preferred on ties.
double quadratic_step(double a, double b) {
  double best_g = 0.0, best_v = 0.0;
  auto consider = [&](double g) {
    const double v = a * g * g + b * g;
    if (v > best_v) {
      best_v = v;
      best_g = g;
    }
  };
  consider(1.0);
  if (a < 0.0) consider(std::clamp(-b / (2.0 * a), 0.0, 1.0));
  return best_g;
}

}  // namespace

Permutation lap_solve(const Eigen::MatrixXd& cost, LapSense sense) {
  if (cost.rows() != cost.cols()) throw DimensionError("cost matrix must be square");
  if (cost.rows() < 1) throw DimensionError("cost matrix must be non-empty");
  if (!cost.allFinite()) throw DomainError("cost matrix has NaN or infinite entries");
  const Eigen::MatrixXd c = sense == LapSense::kMin ? cost : (-cost).eval();
  const LapSolution sol = lap_min(c);
  const double eps = 1e-9 * std::max(1.0, c.cwiseAbs().maxCoeff());
  return Permutation(lex_min_on_tight(c, sol, eps));
}

Permutation project_to_permutation(const DoublyStochastic& d) {
  return lap_solve(d.matrix(), LapSense::kMax);
}

QapStepResult faq_step(const UnipartiteGraph& a, const Eigen::MatrixXd& m,
                       const DoublyStochastic& d0, int max_fw, double tol) {
  const int n = a.n();
  if (m.rows() != n || m.cols() != n) throw DimensionError("M and graph sizes differ");
  if (d0.n() != n) throw DimensionError("initialization and graph sizes differ");
  if (!detail::is_symmetric(m)) throw DomainError("M must be symmetric");
  if (max_fw < 1) throw DomainError("max_fw must be at least 1");

  const Eigen::MatrixXd& adj = a.adj();
  Eigen::MatrixXd d = d0.matrix();
  QapStepResult out{DoublyStochastic(d), Permutation::identity(n), {}, 0};
  double obj = trace_objective(adj, d, m);
  out.objective_trace.push_back(obj);

  for (int it = 0; it < max_fw; ++it) {
    const Eigen::MatrixXd grad = 2.0 * adj * d * m;
    const Permutation dir = lap_solve(grad, LapSense::kMax);
    const Eigen::MatrixXd delta = dir.matrix() - d;
    const double qa = (delta.array() * (adj * delta * m).array()).sum();
    const double qb = (delta.array() * grad.array()).sum();
    const double gamma = quadratic_step(qa, qb);
    if (gamma > 0.0) d += gamma * delta;
    const double new_obj = trace_objective(adj, d, m);
    out.objective_trace.push_back(new_obj);
    out.fw_iterations = it + 1;
    const double improvement = new_obj - obj;
    obj = new_obj;
    if (improvement <= tol * std::max(1.0, std::abs(new_obj))) break;
  }
  out.d = DoublyStochastic(d);
  out.projected = project_to_permutation(out.d);
  return out;
}

QapStepResult seeded_faq_step(const UnipartiteGraph& a, const Eigen::MatrixXd& m,
                              const SeedSet& seeds, const DoublyStochastic& j0, int max_fw,
                              double tol) {
  const int n = a.n();
  if (m.rows() != n || m.cols() != n) throw DimensionError("M and graph sizes differ");
  if (!detail::is_symmetric(m)) throw DomainError("M must be symmetric");
  const int n1 = seeds.size();
  for (const auto& [x, y] : seeds.pairs) {
    if (x < 0 || x >= n || y < 0 || y >= n) throw SeedError("seed index out of range");
  }
  if (n1 == 0) return faq_step(a, m, j0, max_fw, tol);

  // Relabel so the seeded vertices occupy the leading block on both sides.
  std::vector<int> row_order, col_order;
  std::vector<char> row_seeded(n, 0), col_seeded(n, 0);
  for (const auto& [x, y] : seeds.pairs) {
    row_order.push_back(x);
    col_order.push_back(y);
    row_seeded[x] = 1;
    col_seeded[y] = 1;
  }
  for (int i = 0; i < n; ++i) {
    if (!row_seeded[i]) row_order.push_back(i);
    if (!col_seeded[i]) col_order.push_back(i);
  }
  const int n2 = n - n1;

  Eigen::MatrixXd ar(n, n), mr(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      ar(i, j) = a.adj()(row_order[i], row_order[j]);
      mr(i, j) = m(col_order[i], col_order[j]);
    }
  }

  auto full_map = [&](const std::vector<int>& free_map) {
    std::vector<int> map(n, -1);
    for (int s = 0; s < n1; ++s) map[row_order[s]] = col_order[s];
    for (int r = 0; r < n2; ++r) map[row_order[n1 + r]] = col_order[n1 + free_map[r]];
    return Permutation(map);
  };
  auto full_ds = [&](const Eigen::MatrixXd& j_block) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n1; ++s) d(row_order[s], col_order[s]) = 1.0;
    for (int r = 0; r < n2; ++r) {
      for (int c = 0; c < n2; ++c) {
        d(row_order[n1 + r], col_order[n1 + c]) = j_block(r, c);
      }
    }
    return DoublyStochastic(d);
  };

  if (n2 == 0) {
    std::vector<int> empty;
    QapStepResult out{full_ds(Eigen::MatrixXd(0, 0)), full_map(empty), {}, 0};
    out.objective_trace.push_back(
        trace_objective(a.adj(), out.d.matrix(), m));
    return out;
  }
  if (j0.n() != n2) throw DimensionError("free-block initialization has the wrong size");

  const Eigen::MatrixXd a11 = ar.topLeftCorner(n1, n1);
  const Eigen::MatrixXd a21 = ar.bottomLeftCorner(n2, n1);
  const Eigen::MatrixXd a22 = ar.bottomRightCorner(n2, n2);
  const Eigen::MatrixXd m11 = mr.topLeftCorner(n1, n1);
  const Eigen::MatrixXd m12 = mr.topRightCorner(n1, n2);
  const Eigen::MatrixXd m22 = mr.bottomRightCorner(n2, n2);

  const double constant = (a11.array() * m11.array()).sum();
  const Eigen::MatrixXd cross = a21 * m12;  // linear coefficient block

  auto block_objective = [&](const Eigen::MatrixXd& jm) {
    return constant + 2.0 * (jm.array() * cross.array()).sum() +
           (jm.array() * (a22 * jm * m22).array()).sum();
  };

  Eigen::MatrixXd jb = j0.matrix();
  QapStepResult out{full_ds(jb), Permutation::identity(n), {}, 0};
  double obj = block_objective(jb);
  out.objective_trace.push_back(obj);

  for (int it = 0; it < max_fw; ++it) {
    const Eigen::MatrixXd grad = 2.0 * (cross + a22 * jb * m22);
    const Permutation dir = lap_solve(grad, LapSense::kMax);
    const Eigen::MatrixXd delta = dir.matrix() - jb;
    const double qa = (delta.array() * (a22 * delta * m22).array()).sum();
    const double qb = (delta.array() * grad.array()).sum();
    const double gamma = quadratic_step(qa, qb);
    if (gamma > 0.0) jb += gamma * delta;
    const double new_obj = block_objective(jb);
    out.objective_trace.push_back(new_obj);
    out.fw_iterations = it + 1;
    const double improvement = new_obj - obj;
    obj = new_obj;
    if (improvement <= tol * std::max(1.0, std::abs(new_obj))) break;
  }

  out.d = full_ds(jb);
  const Permutation q = project_to_permutation(DoublyStochastic(jb));
  out.projected = full_map(q.map());
  return out;
}

}  // namespace bipmatch
