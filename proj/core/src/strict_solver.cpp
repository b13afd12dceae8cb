#include "exhaust/strict_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "exhaust/errors.hpp"

namespace exhaust {

namespace {

constexpr double kSnapToZero = 1e-12;

// 1 + m/l + m^2/l^2; larger means the worker is switched off first.
double deactivation_key(const WorkerParams& w) {
  const double r = w.mu() / w.lambda();
  return 1.0 + r + r * r;
}

}  // namespace

AbCoefficients ab_coefficients(const WorkerParams& w) {
  const double l = w.lambda();
  const double m = w.mu();
  return {l * l * m * m + l * m * m * m + m * m * m * m, l * l * l + 2.0 * l * l * m};
}

double marginal_derivative(const WorkerParams& w, double alpha) {
  if (!(alpha >= 0.0)) throw ValidationError("alpha must be >= 0");
  const auto [a, b] = ab_coefficients(w);
  const double l = w.lambda();
  const double m = w.mu();
  const double d = a + alpha * b;
  return l * l * m * m * a / (d * d);
}

double water_level(std::span<const WorkerParams> workers, std::span<const std::size_t> active,
                   double budget) {
  if (active.empty()) throw ValidationError("water level needs a nonempty active set");
  if (!(budget > 0.0)) throw ValidationError("budget must be > 0");
  double offset = budget;
  double weight = 0.0;
  for (std::size_t i : active) {
    const auto [a, b] = ab_coefficients(workers[i]);
    offset += a / b;
    weight += workers[i].lambda() * workers[i].mu() * std::sqrt(a) / b;
  }
  const double inv_sqrt_beta = offset / weight;
  return 1.0 / (inv_sqrt_beta * inv_sqrt_beta);
}

double unclipped_allocation(const WorkerParams& w, double beta) {
  const auto [a, b] = ab_coefficients(w);
  return a / b * (w.lambda() * w.mu() / std::sqrt(a * beta) - 1.0);
}

double strict_total_utility(std::span<const WorkerParams> workers, std::span<const double> alpha) {
  double total = 0.0;
  for (std::size_t i = 0; i < workers.size(); ++i) total += strict_utility(workers[i], alpha[i]);
  return total;
}

StrictSolution solve_strict(std::span<const WorkerParams> workers, double budget) {
  if (workers.empty()) throw ValidationError("solve_strict needs at least one worker");
  if (!(budget > 0.0) || !std::isfinite(budget)) throw ValidationError("budget must be > 0");

  const std::size_t n = workers.size();
  StrictSolution sol;
  sol.alpha.assign(n, 0.0);

  // Deactivation order: largest key first, lowest index among ties.
  std::vector<std::size_t> order(n);
  std::vector<double> key(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
    key[i] = deactivation_key(workers[i]);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });

  // Running water-level sums over the active set.
  long double offset = budget;
  long double weight = 0.0L;
  for (const auto& w : workers) {
    const auto [a, b] = ab_coefficients(w);
    offset += a / b;
    weight += w.lambda() * w.mu() * std::sqrt(a) / b;
  }

  // The unclipped allocation is negative exactly when 1 / key < beta, so only
  // the next worker in the order needs checking.
  std::size_t removed = 0;
  for (; removed < n; ++removed) {
    ++sol.iterations;
    const long double inv_sqrt_beta = offset / weight;
    const double beta = static_cast<double>(1.0L / (inv_sqrt_beta * inv_sqrt_beta));
    const std::size_t next = order[removed];
    if (removed + 1 == n || unclipped_allocation(workers[next], beta) >= 0.0) break;
    const auto [a, b] = ab_coefficients(workers[next]);
    offset -= a / b;
    weight -= workers[next].lambda() * workers[next].mu() * std::sqrt(a) / b;
    sol.deactivated.push_back(next);
  }

  std::vector<std::size_t> active(order.begin() + static_cast<std::ptrdiff_t>(removed), order.end());
  std::sort(active.begin(), active.end());
  sol.water_level = water_level(workers, active, budget);
  std::vector<double> trial(n, 0.0);
  for (std::size_t i : active) trial[i] = unclipped_allocation(workers[i], sol.water_level);
  sol.active_set = std::move(active);

  std::vector<std::size_t> positive;
  for (std::size_t i : sol.active_set) {
    sol.alpha[i] = trial[i] < kSnapToZero ? 0.0 : trial[i];
    if (sol.alpha[i] > 0.0) positive.push_back(i);
  }
  sol.active_set = std::move(positive);
  sol.utility = strict_total_utility(workers, sol.alpha);
  return sol;
}

}  // namespace exhaust
