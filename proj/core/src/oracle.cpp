#include "exhaust/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "exhaust/errors.hpp"

namespace exhaust {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kSlopeSamples = 2001;
// Sampled slope maxima are inflated by this factor to cover the gaps.
constexpr double kSlopeMargin = 1.05;

double sampled_slope(const RatioTerm& term, double hi) {
  double best = 0.0;
  for (std::size_t s = 0; s < kSlopeSamples; ++s) {
    const double x = hi * static_cast<double>(s) / static_cast<double>(kSlopeSamples - 1);
    best = std::max(best, std::abs(term.derivative(x)));
  }
  return best * kSlopeMargin;
}

double grid_point(std::size_t k, std::size_t steps, double hi) {
  // Exact endpoints: k = steps - 1 maps to hi, not hi * (1 - ulp).
  return k + 1 == steps ? hi : hi * static_cast<double>(k) / static_cast<double>(steps - 1);
}

void require_budget(double budget) {
  if (!(budget > 0.0) || !std::isfinite(budget)) throw ValidationError("budget must be > 0");
}

}  // namespace

void GridSpec::validate() const {
  if (alpha_steps < 2) throw ValidationError("grid needs alpha_steps >= 2");
  if (p_steps < 2) throw ValidationError("grid needs p_steps >= 2");
}

std::vector<std::size_t> budget_dp(const std::vector<std::vector<double>>& values,
                                   std::size_t total_units) {
  const std::size_t n = values.size();
  const std::size_t width = total_units + 1;
  // best[k]: best total of the workers so far using exactly k units.
  std::vector<double> best(width, kNegInf);
  best[0] = 0.0;
  std::vector<std::vector<std::size_t>> choice(n, std::vector<std::size_t>(width, 0));

  for (std::size_t j = 0; j < n; ++j) {
    if (values[j].size() < width) throw ValidationError("value table shorter than the budget");
    std::vector<double> next(width, kNegInf);
    for (std::size_t k = 0; k < width; ++k) {
      for (std::size_t t = 0; t <= k; ++t) {
        if (best[k - t] == kNegInf) continue;
        const double v = best[k - t] + values[j][t];
        if (v > next[k]) {
          next[k] = v;
          choice[j][k] = t;
        }
      }
    }
    best = std::move(next);
  }

  std::size_t used = 0;
  for (std::size_t k = 1; k < width; ++k) {
    if (best[k] > best[used]) used = k;
  }
  std::vector<std::size_t> units(n, 0);
  for (std::size_t j = n; j-- > 0;) {
    units[j] = choice[j][used];
    used -= units[j];
  }
  return units;
}

OracleResult oracle_strict(std::span<const WorkerParams> workers, double budget,
                           const GridSpec& grid) {
  require_budget(budget);
  grid.validate();
  if (workers.empty()) throw ValidationError("oracle needs at least one worker");
  const std::size_t steps = grid.alpha_steps;
  std::vector<std::vector<double>> values(workers.size(), std::vector<double>(steps));
  for (std::size_t j = 0; j < workers.size(); ++j) {
    for (std::size_t k = 0; k < steps; ++k) {
      values[j][k] = strict_utility(workers[j], grid_point(k, steps, budget));
    }
  }
  const auto units = budget_dp(values, steps - 1);

  OracleResult r;
  r.delta_alpha = budget / static_cast<double>(steps - 1);
  r.policy.alpha.resize(workers.size());
  r.policy.p.assign(workers.size(), 0.0);
  for (std::size_t j = 0; j < workers.size(); ++j) {
    r.policy.alpha[j] = grid_point(units[j], steps, budget);
    r.grid_utility += values[j][units[j]];
    r.continuous_utility += moderate_utility(workers[j], r.policy.alpha[j], 0.0);
    // The strict utility is concave, so its slope peaks at alpha = 0.
    const double slope = marginal_derivative(workers[j], 0.0);
    r.lipschitz = std::max(r.lipschitz, slope);
    r.grid_error += slope * r.delta_alpha;
  }
  return r;
}

OracleResult oracle_moderate(std::span<const WorkerParams> workers, double budget,
                             const GridSpec& grid) {
  require_budget(budget);
  grid.validate();
  if (workers.empty()) throw ValidationError("oracle needs at least one worker");
  const std::size_t steps = grid.alpha_steps;
  const std::size_t n = workers.size();

  std::vector<std::vector<double>> values(n, std::vector<double>(steps, kNegInf));
  std::vector<std::vector<double>> best_p(n, std::vector<double>(steps, 0.0));
  OracleResult r;
  r.delta_alpha = budget / static_cast<double>(steps - 1);

  for (std::size_t j = 0; j < n; ++j) {
    double slope = 0.0;
    for (std::size_t q = 0; q < grid.p_steps; ++q) {
      const double p = grid_point(q, grid.p_steps, 1.0);
      const RatioTerm term = ratio_coefficients(workers[j], p);
      for (std::size_t k = 0; k < steps; ++k) {
        const double v = term(grid_point(k, steps, budget));
        if (v > values[j][k]) {
          values[j][k] = v;
          best_p[j][k] = p;
        }
      }
      slope = std::max(slope, sampled_slope(term, budget));
    }
    r.lipschitz = std::max(r.lipschitz, slope);
    r.grid_error += slope * r.delta_alpha;
  }

  const auto units = budget_dp(values, steps - 1);
  r.policy.alpha.resize(n);
  r.policy.p.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    r.policy.alpha[j] = grid_point(units[j], steps, budget);
    r.policy.p[j] = best_p[j][units[j]];
    r.grid_utility += values[j][units[j]];
    r.continuous_utility += moderate_utility(workers[j], r.policy.alpha[j], r.policy.p[j]);
  }
  return r;
}

OracleResult oracle_ratio_sum(const SumOfRatiosProblem& problem, std::size_t alpha_steps) {
  if (alpha_steps < 2) throw ValidationError("grid needs alpha_steps >= 2");
  const auto& region = problem.region();
  if (!region.budget ||
      std::any_of(region.lower.begin(), region.lower.end(), [](double v) { return v != 0.0; })) {
    throw ValidationError("oracle_ratio_sum needs the region { x >= 0, sum x <= budget }");
  }
  const double budget = *region.budget;
  const std::size_t n = problem.dimension();
  std::vector<std::vector<double>> values(n, std::vector<double>(alpha_steps));
  OracleResult r;
  r.delta_alpha = budget / static_cast<double>(alpha_steps - 1);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& term = problem.terms()[j];
    const double cap = std::min(region.upper[j], budget);
    for (std::size_t k = 0; k < alpha_steps; ++k) {
      const double x = grid_point(k, alpha_steps, budget);
      values[j][k] = x <= cap ? term(x) : kNegInf;
    }
    const double slope = sampled_slope(term, cap);
    r.lipschitz = std::max(r.lipschitz, slope);
    r.grid_error += slope * r.delta_alpha;
  }
  const auto units = budget_dp(values, alpha_steps - 1);
  r.policy.alpha.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    r.policy.alpha[j] = grid_point(units[j], alpha_steps, budget);
    r.grid_utility += values[j][units[j]];
  }
  r.continuous_utility = problem.objective(r.policy.alpha);
  return r;
}

bool KktReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const KktCheck& c) { return c.passed; });
}

const KktCheck* KktReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

KktReport verify_kkt(const StrictSolution& solution, std::span<const WorkerParams> workers,
                     double budget) {
  KktReport report;
  const std::size_t n = workers.size();
  const bool sized = solution.alpha.size() == n && n > 0;
  report.checks.push_back({"dimension", sized, sized ? 0.0 : 1.0});
  if (!sized) return report;

  const auto& alpha = solution.alpha;
  const double beta = solution.water_level;
  const double total = std::accumulate(alpha.begin(), alpha.end(), 0.0);

  double negativity = 0.0;
  for (double a : alpha) negativity = std::max(negativity, std::isfinite(a) ? -a : 1.0);
  const double overshoot = std::max(0.0, total - budget);
  const double primal = std::max(negativity, overshoot);
  report.checks.push_back({"primal_feasibility", primal <= 1e-9, primal});

  const double slack = std::abs(total - budget);
  report.checks.push_back({"budget_binding", slack <= 1e-9, slack});

  report.checks.push_back({"dual_feasibility", beta > 0.0 && std::isfinite(beta),
                           beta > 0.0 ? 0.0 : -beta});

  double stationarity = 0.0;
  double sign = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > 0.0) {
      const double d = marginal_derivative(workers[i], alpha[i]);
      stationarity = std::max(stationarity, std::abs(d - beta) / beta);
    } else {
      sign = std::max(sign, marginal_derivative(workers[i], 0.0) - beta);
    }
  }
  report.checks.push_back({"stationarity", stationarity <= 1e-8, stationarity});
  report.checks.push_back({"complementary_slackness", sign <= 1e-8, std::max(sign, 0.0)});

  std::vector<bool> listed(n, false);
  bool consistent = true;
  for (std::size_t i : solution.active_set) {
    if (i >= n) {
      consistent = false;
      continue;
    }
    listed[i] = true;
  }
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (listed[i] != (alpha[i] > 0.0)) ++mismatches;
  }
  consistent = consistent && mismatches == 0;
  report.checks.push_back({"active_set_consistency", consistent, static_cast<double>(mismatches)});
  return report;
}

}  // namespace exhaust
