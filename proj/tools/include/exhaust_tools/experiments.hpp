#pragma once

// The three reference studies: strict allocations for a geometric population,
// a p_s sweep of the moderate policy for two workers, and a budget sweep
// comparing the alternating solver with the grid oracle.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exhaust/moderate_solver.hpp"
#include "exhaust/oracle.hpp"
#include "exhaust/strict_solver.hpp"
#include "exhaust/worker_model.hpp"

namespace exhaust::tools {

// fig4 ----------------------------------------------------------------------

struct Fig4Options {
  std::size_t n = 10;
  double mu = 1.0;
  double budget = 10.0;
  double lambda_sum = 20.0;
  std::vector<double> qs = {1.0, 0.9};
};

struct Fig4Case {
  double q = 1.0;
  std::vector<WorkerParams> workers;
  StrictSolution solution;
  std::size_t zero_entries = 0;
};

struct Fig4Result {
  Fig4Options options;
  std::vector<Fig4Case> cases;
};

Fig4Result run_fig4(const Fig4Options& options = {});

// fig5 ----------------------------------------------------------------------

struct Fig5Options {
  std::vector<double> lambda = {10.0, 20.0};
  std::vector<double> mu = {5.0, 1.0};
  double budget = 10.0;
  /// p_s takes the values k / steps for k = 0..steps.
  std::size_t steps = 100;
  ModerateOptions solver;
  std::size_t threads = 0;
};

struct Fig5Row {
  double ps = 0.0;
  Policy policy;
  double utility = 0.0;
  bool converged = true;
  /// Starting p that produced the kept solution.
  std::vector<double> start;
};

struct Fig5Jump {
  std::size_t worker = 0;
  /// Changes of the rounded p (0 or 1) between consecutive sweep points.
  std::size_t transitions = 0;
  /// Midpoint between the last p = 0 point and the first p = 1 point, when
  /// there is exactly one 0 -> 1 transition.
  std::optional<double> location;
};

struct Fig5Result {
  Fig5Options options;
  std::vector<Fig5Row> rows;
  std::vector<Fig5Jump> jumps;
  /// Every p within 1e-6 of 0 or 1.
  bool binary = true;
};

/// Alternating solves from every corner of {0, 1}^2 at each p_s; the best
/// utility wins, ties going to the earlier start.
Fig5Result run_fig5(const Fig5Options& options = {});

std::vector<Fig5Jump> detect_jumps(const std::vector<Fig5Row>& rows, std::size_t workers);

// fig6 ----------------------------------------------------------------------

struct Fig6Options {
  std::vector<double> lambda = {2.5, 3.0, 3.5};
  std::vector<double> mu = {1.0, 1.0, 1.0};
  double ps = 0.7;
  std::vector<double> budgets = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  ModerateOptions solver;
  GridSpec grid;
  std::size_t threads = 0;
};

struct Fig6Row {
  double budget = 0.0;
  double utility_bnb = 0.0;
  double utility_oracle = 0.0;
  double oracle_grid_error = 0.0;
  Policy policy;
  Policy oracle_policy;
  bool converged = true;
  std::size_t outer_iterations = 0;
  std::size_t nodes_explored = 0;
};

struct Fig6Result {
  Fig6Options options;
  std::vector<Fig6Row> rows;
  /// max |bnb - oracle| / oracle over the sweep.
  double max_relative_gap = 0.0;
};

Fig6Result run_fig6(const Fig6Options& options = {});

// persistence ---------------------------------------------------------------

/// Each writer emits <name>.csv, <name>.json and <name>.svg in `dir` and
/// returns the paths written.
std::vector<std::filesystem::path> write_fig4(const Fig4Result& r, const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_fig5(const Fig5Result& r, const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_fig6(const Fig6Result& r, const std::filesystem::path& dir);

nlohmann::json fig4_json(const Fig4Result& r);
nlohmann::json fig5_json(const Fig5Result& r);
nlohmann::json fig6_json(const Fig6Result& r);

std::string fig4_csv(const Fig4Result& r);
std::string fig5_csv(const Fig5Result& r);
std::string fig6_csv(const Fig6Result& r);

}  // namespace exhaust::tools
