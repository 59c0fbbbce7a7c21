#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bipmatch/errors.hpp"
#include "bipmatch/graphs.hpp"

namespace bipmatch {

enum class LapSense { kMin, kMax };

// Exact linear assignment optimum of sum_i cost(i, P(i)), by the shortest
// augmenting path method with dual potentials, O(n^3). Among optimal
// assignments the lexicographically smallest index map is returned.
Permutation lap_solve(const Eigen::MatrixXd& cost, LapSense sense);

// argmax_P <D, P>: the permutation closest to D in the trace sense.
Permutation project_to_permutation(const DoublyStochastic& d);

struct QapStepResult {
  DoublyStochastic d;
  Permutation projected;
  std::vector<double> objective_trace;  // f(d0), then after each FW iteration
  int fw_iterations = 0;
};

// Frank-Wolfe ascent on f(D) = Tr(D' A D M) over the doubly stochastic
// polytope from d0: gradient 2 A D M, linear subproblem by lap_solve(max),
// exact line search on the quadratic segment objective. Stops when the
// relative improvement drops below tol or max_fw iterations are reached.
QapStepResult faq_step(const UnipartiteGraph& a, const Eigen::MatrixXd& m,
                       const DoublyStochastic& d0, int max_fw = 30, double tol = 1e-6);

// Seeded variant: seed pairs are held fixed and only the free block J of
// D = R (+) J is optimized; the free-block gradient carries the cross terms
// from the seed rows and columns. j0 initializes the free block.
QapStepResult seeded_faq_step(const UnipartiteGraph& a, const Eigen::MatrixXd& m,
                              const SeedSet& seeds, const DoublyStochastic& j0, int max_fw = 30,
                              double tol = 1e-6);

}  // namespace bipmatch
