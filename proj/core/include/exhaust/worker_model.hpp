#pragma once

// Five-state worker chain: efficiency levels 1, 2, 3 plus exhausted levels
// 1* and 2*. A Poisson probe at rate alpha finds the worker; a probe in state 3
// assigns a task (always successful) and drops the worker into 1*. In moderate
// mode a probe in 2 or 2* assigns with probability p, succeeds with
// probability ps, and also drops the worker into 1*.

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "exhaust/polynomial.hpp"

namespace exhaust {

enum class State : std::size_t { kS1 = 0, kS2 = 1, kS3 = 2, kS1x = 3, kS2x = 4 };

inline constexpr std::size_t kStateCount = 5;
inline constexpr std::array<State, kStateCount> kAllStates = {State::kS1, State::kS2, State::kS3,
                                                             State::kS1x, State::kS2x};

constexpr std::size_t index(State s) { return static_cast<std::size_t>(s); }

/// Serialized name: "s1", "s2", "s3", "s1x", "s2x".
std::string_view state_name(State s);

enum class AssignmentMode { kStrict, kModerate };

std::string_view mode_name(AssignmentMode mode);
std::optional<AssignmentMode> parse_mode(std::string_view text);

enum class StabilityCheck { kEnforce, kAllowUnstable };

class WorkerParams {
 public:
  /// Rejects lambda <= 0, mu <= 0, ps outside [0, 1], and (unless
  /// allow-unstable) lambda < mu.
  WorkerParams(double lambda, double mu, double ps = 0.0,
               StabilityCheck check = StabilityCheck::kEnforce);

  double lambda() const { return lambda_; }
  double mu() const { return mu_; }
  double ps() const { return ps_; }

  /// Recovery slower than exhaustion; outside the regime the model assumes.
  bool unstable() const { return lambda_ < mu_; }

  WorkerParams with_ps(double ps) const;

 private:
  double lambda_;
  double mu_;
  double ps_;
  StabilityCheck check_;
};

class StationaryDistribution {
 public:
  /// Entries in [-1e-14, 0) are clamped to zero; anything more negative, or
  /// a total farther than 1e-12 from one, is rejected.
  explicit StationaryDistribution(const std::array<double, kStateCount>& probs);

  double operator[](State s) const { return probs_[index(s)]; }
  const std::array<double, kStateCount>& probs() const { return probs_; }

 private:
  std::array<double, kStateCount> probs_;
};

class GeneratorMatrix {
 public:
  using Rates = std::array<std::array<double, kStateCount>, kStateCount>;

  /// Off-diagonals must be >= 0 and each row must sum to zero.
  explicit GeneratorMatrix(const Rates& rates);

  double rate(State from, State to) const { return rates_[index(from)][index(to)]; }
  const Rates& rates() const { return rates_; }

  /// Sum of off-diagonal rates leaving `from`.
  double exit_rate(State from) const { return -rates_[index(from)][index(from)]; }

 private:
  Rates rates_;
};

/// Sampling rates and moderate-state assignment probabilities, one per worker.
struct Policy {
  std::vector<double> alpha;
  std::vector<double> p;

  static Policy strict(std::vector<double> alpha);

  /// Throws ValidationError on length mismatch, negative rates, p outside
  /// [0, 1], or sum(alpha) > budget + 1e-9.
  void validate(std::size_t workers, double budget) const;
};

struct StationaryDiagnostics {
  double condition_estimate = 0.0;
  double residual = 0.0;  // max |(pi Q)_j|
  bool ill_conditioned = false;
};

inline constexpr double kConditionWarning = 1e12;

GeneratorMatrix build_generator(const WorkerParams& w, double alpha, double p,
                                AssignmentMode mode);

/// Solves pi Q = 0, sum(pi) = 1 by partial-pivot elimination with the
/// normalization row replacing one balance row. Throws DegenerateChainError
/// when the system is singular.
StationaryDistribution stationary_generic(const GeneratorMatrix& q,
                                          StationaryDiagnostics* diagnostics = nullptr);

StationaryDistribution stationary_strict_closed_form(const WorkerParams& w, double alpha);

/// alpha * pi_3 for the strict chain, evaluated as alpha l^2 m^2 / (A + B alpha)
/// so that alpha = 0 gives 0 without dividing by zero.
double strict_utility(const WorkerParams& w, double alpha);

StationaryDistribution moderate_stationary(const WorkerParams& w, double alpha, double p);

/// alpha pi_3 + ps alpha p (pi_2 + pi_2*) from the balance-equation solve.
double moderate_utility(const WorkerParams& w, double alpha, double p);

/// Numerator f(alpha) and denominator g(alpha) of the per-worker success rate
/// at fixed p. g(0) = 1 + l/m + l^2/m^2.
RatioTerm ratio_coefficients(const WorkerParams& w, double p);

/// The same ratio regarded as a function of p at fixed alpha.
RatioTerm ratio_coefficients_in_p(const WorkerParams& w, double alpha);

/// |f/g - moderate_utility|; the balance-equation value is authoritative.
double ratio_discrepancy(const WorkerParams& w, double alpha, double p);

}  // namespace exhaust
