#pragma once

// Water-filling solution of
//
//   max  sum_i alpha_i l_i^2 m_i^2 / (A_i + B_i alpha_i)   s.t. sum alpha_i <= C, alpha >= 0
//
// with A = l^2 m^2 + l m^3 + m^4 and B = l^3 + 2 l^2 m. The objective is
// concave and strictly increasing, so the budget binds and every active
// worker's marginal equals a common level beta.

#include <cstddef>
#include <span>
#include <vector>

#include "exhaust/worker_model.hpp"

namespace exhaust {

struct AbCoefficients {
  double a;
  double b;
};

AbCoefficients ab_coefficients(const WorkerParams& w);

/// d/dalpha of the strict utility: l^2 m^2 A / (A + alpha B)^2.
double marginal_derivative(const WorkerParams& w, double alpha);

/// Level beta at which the unclipped allocations over `active` sum to C.
/// Closed form: beta^{-1/2} = (C + sum A/B) / sum(l m sqrt(A) / B).
double water_level(std::span<const WorkerParams> workers, std::span<const std::size_t> active,
                   double budget);

/// Unclipped allocation (A/B)(l m / sqrt(A beta) - 1); may be negative.
double unclipped_allocation(const WorkerParams& w, double beta);

struct StrictSolution {
  std::vector<double> alpha;
  double water_level = 0.0;
  std::vector<std::size_t> active_set;
  double utility = 0.0;
  std::size_t iterations = 0;
  /// Workers in the order they were deactivated.
  std::vector<std::size_t> deactivated;
};

/// Throws ValidationError on an empty worker list or budget <= 0.
StrictSolution solve_strict(std::span<const WorkerParams> workers, double budget);

double strict_total_utility(std::span<const WorkerParams> workers, std::span<const double> alpha);

}  // namespace exhaust
