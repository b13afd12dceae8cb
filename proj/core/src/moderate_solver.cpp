#include "exhaust/moderate_solver.hpp"

#include <cmath>
#include <limits>

#include "exhaust/errors.hpp"

namespace exhaust {

SumOfRatiosProblem alpha_block_problem(std::span<const WorkerParams> workers,
                                       std::span<const double> p, double budget) {
  if (p.size() != workers.size()) throw ValidationError("p has the wrong length");
  std::vector<RatioTerm> terms;
  terms.reserve(workers.size());
  for (std::size_t j = 0; j < workers.size(); ++j) {
    terms.push_back(ratio_coefficients(workers[j], p[j]));
  }
  return SumOfRatiosProblem(std::move(terms), FeasibleRegion::budget_simplex(workers.size(), budget),
                            initial_simplex(budget, workers.size()));
}

SumOfRatiosProblem p_block_problem(std::span<const WorkerParams> workers,
                                   std::span<const double> alpha) {
  if (alpha.size() != workers.size()) throw ValidationError("alpha has the wrong length");
  std::vector<RatioTerm> terms;
  terms.reserve(workers.size());
  for (std::size_t j = 0; j < workers.size(); ++j) {
    terms.push_back(ratio_coefficients_in_p(workers[j], alpha[j]));
  }
  return SumOfRatiosProblem(std::move(terms), FeasibleRegion::unit_box(workers.size()));
}

double moderate_total_utility(std::span<const WorkerParams> workers, const Policy& policy) {
  double total = 0.0;
  for (std::size_t j = 0; j < workers.size(); ++j) {
    total += moderate_utility(workers[j], policy.alpha[j], policy.p[j]);
  }
  return total;
}

namespace {

BnBOptions block_options(const ModerateOptions& options) {
  BnBOptions o;
  o.rho = options.rho;
  o.node_cap = options.node_cap;
  o.selection = options.selection;
  return o;
}

double ratio_objective(std::span<const WorkerParams> workers, std::span<const double> alpha,
                       std::span<const double> p) {
  double total = 0.0;
  for (std::size_t j = 0; j < workers.size(); ++j) {
    total += ratio_coefficients(workers[j], p[j])(alpha[j]);
  }
  return total;
}

}  // namespace

PBlockResult optimize_p_given_alpha(std::span<const WorkerParams> workers,
                                    std::span<const double> alpha,
                                    std::span<const double> current_p,
                                    const ModerateOptions& options) {
  const std::size_t n = workers.size();
  if (alpha.size() != n || current_p.size() != n) {
    throw ValidationError("alpha and p must match the worker count");
  }
  PBlockResult result;
  result.p.assign(current_p.begin(), current_p.end());
  BnBOptions bnb = block_options(options);

  if (options.p_block == PBlockMethod::kSimplex) {
    bnb.warm_start = result.p;
    const auto report = branch_and_bound(p_block_problem(workers, alpha), bnb);
    result.p = report.best_point;
    result.converged = report.converged;
    result.nodes_explored = report.nodes_explored;
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      const RatioTerm term = ratio_coefficients_in_p(workers[j], alpha[j]);
      SumOfRatiosProblem problem({term}, FeasibleRegion::unit_box(1));
      bnb.warm_start = {current_p[j]};
      const auto report = branch_and_bound(problem, bnb);
      if (report.lower_bound > term(current_p[j])) result.p[j] = report.best_point[0];
      result.converged = result.converged && report.converged;
      result.nodes_explored += report.nodes_explored;
    }
  }
  result.utility = ratio_objective(workers, alpha, result.p);
  return result;
}

ModerateSolution alternating_solve(std::span<const WorkerParams> workers, double budget,
                                   const ModerateOptions& options) {
  return alternating_solve_from(workers, budget,
                                std::vector<double>(workers.size(), options.initial_p), options);
}

ModerateSolution alternating_solve_from(std::span<const WorkerParams> workers, double budget,
                                        std::vector<double> initial_p,
                                        const ModerateOptions& options) {
  if (workers.empty()) throw ValidationError("alternating_solve needs at least one worker");
  if (!(budget > 0.0) || !std::isfinite(budget)) throw ValidationError("budget must be > 0");
  if (initial_p.size() != workers.size()) throw ValidationError("initial p has the wrong length");
  if (options.max_outer == 0) throw ValidationError("max_outer must be >= 1");
  for (double v : initial_p) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("initial p must lie in [0, 1]");
  }

  ModerateSolution sol;
  sol.report.initial_p = initial_p.empty() ? options.initial_p : initial_p.front();
  std::vector<double> p = std::move(initial_p);
  std::vector<double> alpha;
  double previous = -std::numeric_limits<double>::infinity();
  BnBOptions bnb = block_options(options);

  for (std::size_t outer = 0; outer < options.max_outer; ++outer) {
    bnb.warm_start = alpha;
    const auto alpha_report = branch_and_bound(alpha_block_problem(workers, p, budget), bnb);
    alpha = alpha_report.best_point;
    sol.report.nodes_explored += alpha_report.nodes_explored;
    sol.report.all_blocks_converged = sol.report.all_blocks_converged && alpha_report.converged;

    const auto p_result = optimize_p_given_alpha(workers, alpha, p, options);
    p = p_result.p;
    sol.report.nodes_explored += p_result.nodes_explored;
    sol.report.all_blocks_converged = sol.report.all_blocks_converged && p_result.converged;

    const double utility = p_result.utility;
    sol.report.utility_trace.push_back(utility);
    sol.report.outer_iterations = outer + 1;
    if (std::abs(utility - previous) <= options.eps) {
      sol.report.converged = true;
      break;
    }
    previous = utility;
  }

  sol.policy.alpha = std::move(alpha);
  sol.policy.p = std::move(p);
  sol.utility = sol.report.utility_trace.back();
  return sol;
}

}  // namespace exhaust
