#include "exhaust_tools/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "exhaust_tools/config.hpp"
#include "exhaust_tools/output.hpp"
#include "exhaust_tools/work_pool.hpp"

namespace exhaust::tools {

using nlohmann::json;

namespace {

std::vector<WorkerParams> make_workers(const std::vector<double>& lambda, const std::vector<double>& mu,
                                       double ps) {
  if (lambda.size() != mu.size() || lambda.empty()) {
    throw ValidationError("lambda and mu lists must be non-empty and of equal length");
  }
  std::vector<WorkerParams> out;
  for (std::size_t i = 0; i < lambda.size(); ++i) out.emplace_back(lambda[i], mu[i], ps);
  return out;
}

const char* status_of(bool converged) { return converged ? "ok" : "not_converged"; }

json policy_json(const Policy& p) { return {{"alpha", p.alpha}, {"p", p.p}}; }

std::vector<std::filesystem::path> write_triple(const std::filesystem::path& dir, const std::string& name,
                                                const std::string& csv, const json& summary,
                                                const Chart& chart) {
  const std::vector<std::filesystem::path> paths = {dir / (name + ".csv"), dir / (name + ".json"),
                                                    dir / (name + ".svg")};
  write_file(paths[0], csv);
  write_file(paths[1], summary.dump(2) + "\n");
  write_file(paths[2], render_svg(chart));
  return paths;
}

}  // namespace

// fig4 ----------------------------------------------------------------------

Fig4Result run_fig4(const Fig4Options& options) {
  Fig4Result r{options, {}};
  for (double q : options.qs) {
    Fig4Case c;
    c.q = q;
    for (double l : geometric_lambdas(options.n, q, options.lambda_sum)) c.workers.emplace_back(l, options.mu);
    c.solution = solve_strict(c.workers, options.budget);
    c.zero_entries = static_cast<std::size_t>(
        std::count(c.solution.alpha.begin(), c.solution.alpha.end(), 0.0));
    r.cases.push_back(std::move(c));
  }
  return r;
}

std::string fig4_csv(const Fig4Result& r) {
  CsvTable t({"worker_index", "q", "lambda", "mu", "alpha"});
  for (const auto& c : r.cases) {
    for (std::size_t i = 0; i < c.workers.size(); ++i) {
      t.add_row({std::to_string(i + 1), fmt(c.q), fmt(c.workers[i].lambda()), fmt(c.workers[i].mu()),
                 fmt(c.solution.alpha[i])});
    }
  }
  return t.str();
}

json fig4_json(const Fig4Result& r) {
  json cases = json::array();
  for (const auto& c : r.cases) {
    cases.push_back({{"q", c.q},
                     {"workers", workers_to_json(c.workers)},
                     {"alpha", c.solution.alpha},
                     {"utility", c.solution.utility},
                     {"water_level", c.solution.water_level},
                     {"active_set", c.solution.active_set},
                     {"deactivated", c.solution.deactivated},
                     {"iterations", c.solution.iterations},
                     {"zero_entries", c.zero_entries}});
  }
  return {{"figure", "fig4"},
          {"n", r.options.n},
          {"mu", r.options.mu},
          {"budget", r.options.budget},
          {"lambda_sum", r.options.lambda_sum},
          {"cases", cases}};
}

std::vector<std::filesystem::path> write_fig4(const Fig4Result& r, const std::filesystem::path& dir) {
  Chart chart{"Strict allocation, n = " + std::to_string(r.options.n) + ", C = " + fmt(r.options.budget),
              "worker", "sampling rate alpha", ChartKind::kBar, {}};
  for (const auto& c : r.cases) {
    Series s{"q = " + fmt(c.q), {}, c.solution.alpha};
    for (std::size_t i = 0; i < c.workers.size(); ++i) s.x.push_back(static_cast<double>(i + 1));
    chart.series.push_back(std::move(s));
  }
  return write_triple(dir, "fig4", fig4_csv(r), fig4_json(r), chart);
}

// fig5 ----------------------------------------------------------------------

std::vector<Fig5Jump> detect_jumps(const std::vector<Fig5Row>& rows, std::size_t workers) {
  std::vector<Fig5Jump> out;
  for (std::size_t w = 0; w < workers; ++w) {
    Fig5Jump jump;
    jump.worker = w + 1;
    std::optional<std::size_t> up;
    std::size_t ups = 0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
      const bool before = rows[k - 1].policy.p[w] >= 0.5;
      const bool after = rows[k].policy.p[w] >= 0.5;
      if (before == after) continue;
      ++jump.transitions;
      if (!before) {
        ++ups;
        up = k;
      }
    }
    if (jump.transitions == 1 && ups == 1) {
      jump.location = 0.5 * (rows[*up - 1].ps + rows[*up].ps);
    }
    out.push_back(jump);
  }
  return out;
}

Fig5Result run_fig5(const Fig5Options& options) {
  if (options.steps == 0) throw ValidationError("fig5 needs at least one p_s step");
  const auto base = make_workers(options.lambda, options.mu, 0.0);
  const std::size_t n = base.size();
  Fig5Result r{options, std::vector<Fig5Row>(options.steps + 1), {}, true};

  std::vector<std::vector<double>> starts;
  for (std::size_t mask = (std::size_t{1} << n); mask-- > 0;) {
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = (mask >> (n - 1 - i)) & 1U ? 1.0 : 0.0;
    starts.push_back(std::move(s));
  }

  parallel_for(options.steps + 1, options.threads, [&](std::size_t k) {
    const double ps = static_cast<double>(k) / static_cast<double>(options.steps);
    std::vector<WorkerParams> workers;
    for (const auto& w : base) workers.push_back(w.with_ps(ps));
    Fig5Row row;
    row.ps = ps;
    row.utility = -1.0;
    for (const auto& s : starts) {
      auto sol = alternating_solve_from(workers, options.budget, s, options.solver);
      if (sol.utility > row.utility) {
        row.utility = sol.utility;
        row.policy = std::move(sol.policy);
        row.converged = sol.report.converged && sol.report.all_blocks_converged;
        row.start = s;
      }
    }
    r.rows[k] = std::move(row);
  });

  for (const auto& row : r.rows) {
    for (double p : row.policy.p) {
      if (std::min(std::abs(p), std::abs(1.0 - p)) > 1e-6) r.binary = false;
    }
  }
  r.jumps = detect_jumps(r.rows, n);
  return r;
}

std::string fig5_csv(const Fig5Result& r) {
  CsvTable t({"ps", "p1", "p2", "alpha1", "alpha2", "utility", "status"});
  for (const auto& row : r.rows) {
    t.add_row({fmt(row.ps), fmt(row.policy.p[0]), fmt(row.policy.p[1]), fmt(row.policy.alpha[0]),
               fmt(row.policy.alpha[1]), fmt(row.utility), status_of(row.converged)});
  }
  return t.str();
}

json fig5_json(const Fig5Result& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"ps", row.ps},
                    {"policy", policy_json(row.policy)},
                    {"utility", row.utility},
                    {"converged", row.converged},
                    {"start_p", row.start}});
  }
  json jumps = json::array();
  json thresholds = json::array();
  for (const auto& j : r.jumps) {
    jumps.push_back({{"worker", j.worker},
                     {"transitions", j.transitions},
                     {"threshold", j.location ? json(*j.location) : json(nullptr)}});
    if (j.location) thresholds.push_back(*j.location);
  }
  return {{"figure", "fig5"},
          {"lambda", r.options.lambda},
          {"mu", r.options.mu},
          {"budget", r.options.budget},
          {"ps_step", 1.0 / static_cast<double>(r.options.steps)},
          {"binary_policy", r.binary},
          {"jumps", jumps},
          {"thresholds", thresholds},
          {"rows", rows}};
}

std::vector<std::filesystem::path> write_fig5(const Fig5Result& r, const std::filesystem::path& dir) {
  Chart chart{"Optimal assignment probability vs p_s", "p_s", "p", ChartKind::kLine, {}};
  for (std::size_t w = 0; w < r.options.lambda.size(); ++w) {
    Series s{"worker " + std::to_string(w + 1), {}, {}};
    for (const auto& row : r.rows) {
      s.x.push_back(row.ps);
      s.y.push_back(row.policy.p[w]);
    }
    chart.series.push_back(std::move(s));
  }
  return write_triple(dir, "fig5", fig5_csv(r), fig5_json(r), chart);
}

// fig6 ----------------------------------------------------------------------

Fig6Result run_fig6(const Fig6Options& options) {
  const auto workers = make_workers(options.lambda, options.mu, options.ps);
  Fig6Result r{options, std::vector<Fig6Row>(options.budgets.size()), 0.0};
  parallel_for(options.budgets.size(), options.threads, [&](std::size_t k) {
    const double budget = options.budgets[k];
    const auto sol = alternating_solve(workers, budget, options.solver);
    const auto oracle = oracle_moderate(workers, budget, options.grid);
    Fig6Row row;
    row.budget = budget;
    row.utility_bnb = sol.utility;
    row.utility_oracle = oracle.grid_utility;
    row.oracle_grid_error = oracle.grid_error;
    row.policy = sol.policy;
    row.oracle_policy = oracle.policy;
    row.converged = sol.report.converged && sol.report.all_blocks_converged;
    row.outer_iterations = sol.report.outer_iterations;
    row.nodes_explored = sol.report.nodes_explored;
    r.rows[k] = std::move(row);
  });
  for (const auto& row : r.rows) {
    r.max_relative_gap =
        std::max(r.max_relative_gap, std::abs(row.utility_bnb - row.utility_oracle) / row.utility_oracle);
  }
  return r;
}

std::string fig6_csv(const Fig6Result& r) {
  CsvTable t({"C", "utility_bnb", "utility_oracle", "p1", "p2", "p3", "status"});
  for (const auto& row : r.rows) {
    std::vector<std::string> cells = {fmt(row.budget), fmt(row.utility_bnb), fmt(row.utility_oracle)};
    for (std::size_t i = 0; i < 3; ++i) {
      cells.push_back(i < row.policy.p.size() ? fmt(row.policy.p[i]) : "");
    }
    cells.push_back(status_of(row.converged));
    t.add_row(std::move(cells));
  }
  return t.str();
}

json fig6_json(const Fig6Result& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"C", row.budget},
                    {"utility_bnb", row.utility_bnb},
                    {"utility_oracle", row.utility_oracle},
                    {"oracle_grid_error", row.oracle_grid_error},
                    {"policy", policy_json(row.policy)},
                    {"oracle_policy", policy_json(row.oracle_policy)},
                    {"converged", row.converged},
                    {"outer_iterations", row.outer_iterations},
                    {"nodes_explored", row.nodes_explored}});
  }
  return {{"figure", "fig6"},
          {"lambda", r.options.lambda},
          {"mu", r.options.mu},
          {"ps", r.options.ps},
          {"solver", {{"rho", r.options.solver.rho},
                      {"eps", r.options.solver.eps},
                      {"max_outer", r.options.solver.max_outer},
                      {"node_cap", r.options.solver.node_cap}}},
          {"grid", {{"alpha_steps", r.options.grid.alpha_steps}, {"p_steps", r.options.grid.p_steps}}},
          {"max_relative_gap", r.max_relative_gap},
          {"rows", rows}};
}

std::vector<std::filesystem::path> write_fig6(const Fig6Result& r, const std::filesystem::path& dir) {
  Chart chart{"Moderate policy utility vs budget", "budget C", "success rate", ChartKind::kLine, {}};
  Series bnb{"branch-and-bound", {}, {}};
  Series grid{"grid oracle", {}, {}};
  for (const auto& row : r.rows) {
    bnb.x.push_back(row.budget);
    bnb.y.push_back(row.utility_bnb);
    grid.x.push_back(row.budget);
    grid.y.push_back(row.utility_oracle);
  }
  chart.series = {bnb, grid};
  return write_triple(dir, "fig6", fig6_csv(r), fig6_json(r), chart);
}

}  // namespace exhaust::tools
