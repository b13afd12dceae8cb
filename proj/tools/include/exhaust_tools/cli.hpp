#pragma once

#include <iosfwd>

#include <nlohmann/json.hpp>

#include "exhaust_tools/config.hpp"

namespace exhaust::tools {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitNotConverged = 2;

/// Entry point behind the `exhaust` binary. Never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Solves the configured problem and returns the persisted solution record.
/// `converged` is set false when a moderate solve stopped at a cap.
nlohmann::json solve_to_json(const ExperimentConfig& config, bool& converged);

struct VerifyCheck {
  std::string name;
  bool passed = false;
  double residual = 0.0;
};

/// Re-derives every certificate of a stored solution record.
std::vector<VerifyCheck> verify_solution(const nlohmann::json& solution);

}  // namespace exhaust::tools
