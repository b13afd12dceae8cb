#pragma once

// Joint (alpha, p) maximization of the moderate-assignment success rate by
// block-coordinate ascent: branch-and-bound over alpha with p fixed, then over
// p with alpha fixed, until the utility stops improving.

#include <cstddef>
#include <span>
#include <vector>

#include "exhaust/branch_and_bound.hpp"
#include "exhaust/worker_model.hpp"

namespace exhaust {

enum class PBlockMethod {
  kSeparable,  ///< one 1-D search per worker
  kSimplex,    ///< one n-dimensional search over a simplex covering [0, 1]^n
};

struct ModerateOptions {
  double rho = 1e-4;
  double eps = 1e-6;
  std::size_t max_outer = 50;
  std::size_t node_cap = 1'000'000;
  NodeSelection selection = NodeSelection::kLongestEdge;
  PBlockMethod p_block = PBlockMethod::kSeparable;
  /// Starting assignment probability for every worker.
  double initial_p = 1.0;
};

SumOfRatiosProblem alpha_block_problem(std::span<const WorkerParams> workers,
                                       std::span<const double> p, double budget);

SumOfRatiosProblem p_block_problem(std::span<const WorkerParams> workers,
                                   std::span<const double> alpha);

double moderate_total_utility(std::span<const WorkerParams> workers, const Policy& policy);

struct PBlockResult {
  std::vector<double> p;
  double utility = 0.0;
  bool converged = true;
  std::size_t nodes_explored = 0;
};

/// Maximizes over p in [0, 1]^n at fixed alpha. A coordinate only moves away
/// from `current_p` when that strictly improves its term.
PBlockResult optimize_p_given_alpha(std::span<const WorkerParams> workers,
                                    std::span<const double> alpha,
                                    std::span<const double> current_p,
                                    const ModerateOptions& options = {});

struct AlternatingReport {
  /// Utility after each completed outer iteration (alpha step then p step).
  std::vector<double> utility_trace;
  std::size_t outer_iterations = 0;
  bool converged = false;
  bool all_blocks_converged = true;
  std::size_t nodes_explored = 0;
  double initial_p = 1.0;
};

struct ModerateSolution {
  Policy policy;
  double utility = 0.0;
  AlternatingReport report;
};

/// Throws ValidationError on an empty worker list or budget <= 0.
ModerateSolution alternating_solve(std::span<const WorkerParams> workers, double budget,
                                   const ModerateOptions& options = {});

/// As above but starting from an explicit p vector.
ModerateSolution alternating_solve_from(std::span<const WorkerParams> workers, double budget,
                                        std::vector<double> initial_p,
                                        const ModerateOptions& options = {});

}  // namespace exhaust
