#pragma once

// JSON experiment configuration.
//
//   {
//     "schema_version": 1,
//     "workers": [{"lambda": 2, "mu": 1, "ps": 0.7}, ...],   // or "population"
//     "population": {"n": 10, "q": 0.9, "lambda_sum": 20, "mu": 1, "ps": 0},
//     "budget": 10,
//     "mode": "strict" | "moderate",
//     "allow_unstable": false,
//     "solver": {"rho", "eps", "max_outer", "node_cap", "node_selection",
//                "p_block", "initial_p"},
//     "grid": {"alpha_steps", "p_steps"},
//     "sim": {"horizon", "seed", "warmup_fraction", "batches"}
//   }
//
// Everything except the worker source and the budget has a default.
// Unknown keys are rejected so that typos do not silently fall back.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exhaust/errors.hpp"
#include "exhaust/moderate_solver.hpp"
#include "exhaust/oracle.hpp"
#include "exhaust/simulator.hpp"
#include "exhaust/worker_model.hpp"

namespace exhaust::tools {

inline constexpr int kSchemaVersion = 1;

/// Malformed JSON. what() carries "line L, column C".
class ConfigParseError : public ValidationError {
 public:
  ConfigParseError(const std::string& message, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed JSON that violates the schema. field() is a dotted path such
/// as "workers[2].mu".
class ConfigFieldError : public ValidationError {
 public:
  ConfigFieldError(std::string field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct PopulationSpec {
  std::size_t n = 0;
  /// Geometric decay factor in (0, 1].
  double q = 1.0;
  double lambda_sum = 0.0;
  double mu = 0.0;
  double ps = 0.0;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::vector<WorkerParams> workers;
  std::optional<PopulationSpec> population;
  double budget = 0.0;
  AssignmentMode mode = AssignmentMode::kStrict;
  bool allow_unstable = false;
  ModerateOptions solver;
  GridSpec grid;
  SimConfig sim;
};

/// lambda_i = b q^(i-1) with b chosen so that the rates sum to lambda_sum.
std::vector<double> geometric_lambdas(std::size_t n, double q, double lambda_sum);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Every field with defaults filled in; parse_config(dump) round-trips.
nlohmann::json config_to_json(const ExperimentConfig& config);

nlohmann::json workers_to_json(const std::vector<WorkerParams>& workers);
/// Reads [{lambda, mu, ps}, ...]; `field` prefixes error messages.
std::vector<WorkerParams> workers_from_json(const nlohmann::json& j, const std::string& field,
                                            bool allow_unstable);

std::string_view selection_name(NodeSelection s);
std::string_view p_block_name(PBlockMethod m);

}  // namespace exhaust::tools
