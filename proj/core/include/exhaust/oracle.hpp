#pragma once

// Brute-force reference solvers. Both allocation problems are separable
// across workers, so the best grid allocation under the budget is found
// exactly by dynamic programming over (worker, budget units used).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "exhaust/branch_and_bound.hpp"
#include "exhaust/strict_solver.hpp"
#include "exhaust/worker_model.hpp"

namespace exhaust {

struct GridSpec {
  std::size_t alpha_steps = 401;  ///< points on [0, C], endpoints included
  std::size_t p_steps = 101;      ///< points on [0, 1], endpoints included

  void validate() const;
};

struct OracleResult {
  Policy policy;
  /// Objective summed from the grid value tables.
  double grid_utility = 0.0;
  /// The same grid point re-evaluated through the balance equations.
  double continuous_utility = 0.0;
  double delta_alpha = 0.0;
  /// Largest per-worker slope bound on [0, C].
  double lipschitz = 0.0;
  /// Upper bound on (continuous optimum - grid optimum): sum of per-worker
  /// slope bounds times delta_alpha.
  double grid_error = 0.0;
};

OracleResult oracle_strict(std::span<const WorkerParams> workers, double budget,
                           const GridSpec& grid);

/// Also maximizes each worker's p over the p grid at every alpha grid point.
OracleResult oracle_moderate(std::span<const WorkerParams> workers, double budget,
                             const GridSpec& grid);

/// Grid optimum of an alpha-block sum-of-ratios problem (p held fixed).
/// The problem's region must be { x >= 0, sum x <= budget }.
OracleResult oracle_ratio_sum(const SumOfRatiosProblem& problem, std::size_t alpha_steps);

/// Separable budget DP: values[j][k] is worker j's payoff for k budget units.
/// Returns the units per worker maximizing the total with sum(units) <= K.
std::vector<std::size_t> budget_dp(const std::vector<std::vector<double>>& values,
                                   std::size_t total_units);

struct KktCheck {
  std::string name;
  bool passed = false;
  double residual = 0.0;
};

struct KktReport {
  std::vector<KktCheck> checks;
  bool all_passed() const;
  const KktCheck* find(const std::string& name) const;
};

/// Checks primal feasibility, the binding budget, stationarity on the active
/// set, the sign condition off it, and active-set consistency. Never throws
/// on a bad certificate; it reports.
KktReport verify_kkt(const StrictSolution& solution, std::span<const WorkerParams> workers,
                     double budget);

}  // namespace exhaust
