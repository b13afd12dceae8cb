#include "exhaust_tools/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "exhaust/oracle.hpp"
#include "exhaust/simulator.hpp"
#include "exhaust/strict_solver.hpp"
#include "exhaust_tools/experiments.hpp"
#include "exhaust_tools/output.hpp"

namespace exhaust::tools {

using nlohmann::json;

namespace {

constexpr double kRoundTripTolerance = 1e-9;

// Thrown by a subcommand that finished but did not converge.
struct NotConverged {
  std::string what;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

double ratio_total(const std::vector<WorkerParams>& workers, const Policy& policy) {
  double total = 0.0;
  for (std::size_t j = 0; j < workers.size(); ++j) {
    total += ratio_coefficients(workers[j], policy.p[j])(policy.alpha[j]);
  }
  return total;
}

double policy_utility(const std::vector<WorkerParams>& workers, const Policy& policy, AssignmentMode mode) {
  return mode == AssignmentMode::kStrict ? strict_total_utility(workers, policy.alpha)
                                         : ratio_total(workers, policy);
}

template <typename T>
T field(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ValidationError("solution record lacks '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("solution field '" + key + "' has the wrong type");
  }
}

struct Loaded {
  std::vector<WorkerParams> workers;
  AssignmentMode mode;
  double budget;
  Policy policy;
};

Loaded load_solution(const json& s) {
  Loaded l;
  const bool allow = s.value("allow_unstable", false);
  if (!s.contains("workers")) throw ValidationError("solution record lacks 'workers'");
  l.workers = workers_from_json(s.at("workers"), "workers", allow);
  const auto mode = parse_mode(field<std::string>(s, "mode"));
  if (!mode) throw ValidationError("solution field 'mode' must be strict or moderate");
  l.mode = *mode;
  l.budget = field<double>(s, "budget");
  const json policy = field<json>(s, "policy");
  l.policy.alpha = field<std::vector<double>>(policy, "alpha");
  l.policy.p = field<std::vector<double>>(policy, "p");
  return l;
}

void print_policy(std::ostream& out, const Policy& policy) {
  out << "worker alpha p\n";
  for (std::size_t i = 0; i < policy.alpha.size(); ++i) {
    out << (i + 1) << ' ' << fmt(policy.alpha[i]) << ' ' << fmt(policy.p[i]) << '\n';
  }
}

// --- subcommands -----------------------------------------------------------

struct SteadyArgs {
  double lambda = 0.0;
  double mu = 0.0;
  double ps = 0.0;
  double alpha = 0.0;
  double p = 0.0;
  std::string mode = "strict";
  bool allow_unstable = false;
  bool as_json = false;
};

void cmd_steady(const SteadyArgs& a, std::ostream& out) {
  const auto mode = parse_mode(a.mode);
  if (!mode) throw ValidationError("--mode must be strict or moderate");
  const WorkerParams w(a.lambda, a.mu, a.ps,
                       a.allow_unstable ? StabilityCheck::kAllowUnstable : StabilityCheck::kEnforce);
  if (!(a.alpha >= 0.0) || !std::isfinite(a.alpha)) throw ValidationError("--alpha must be >= 0");
  if (!(a.p >= 0.0 && a.p <= 1.0)) throw ValidationError("--p must lie in [0, 1]");

  StationaryDiagnostics diag;
  const double p = *mode == AssignmentMode::kStrict ? 0.0 : a.p;
  const auto generic = stationary_generic(build_generator(w, a.alpha, p, *mode), &diag);
  const StationaryDistribution pi =
      *mode == AssignmentMode::kStrict ? stationary_strict_closed_form(w, a.alpha) : generic;
  const double utility = *mode == AssignmentMode::kStrict ? strict_utility(w, a.alpha)
                                                          : moderate_utility(w, a.alpha, p);
  if (a.as_json) {
    json j{{"mode", std::string(mode_name(*mode))}, {"utility", utility},
           {"condition_estimate", diag.condition_estimate}};
    for (State s : kAllStates) j["pi"][std::string(state_name(s))] = pi[s];
    out << j.dump(2) << '\n';
    return;
  }
  out << "mode " << mode_name(*mode) << '\n';
  for (State s : kAllStates) out << state_name(s) << ' ' << fmt(pi[s]) << '\n';
  out << "utility " << fmt(utility) << '\n';
  if (w.unstable()) out << "warning: lambda < mu, outside the modelled regime\n";
  if (diag.ill_conditioned) out << "warning: generator is ill-conditioned\n";
}

}  // namespace

json solve_to_json(const ExperimentConfig& config, bool& converged) {
  json s;
  s["schema_version"] = kSchemaVersion;
  s["kind"] = "solution";
  s["mode"] = std::string(mode_name(config.mode));
  s["budget"] = config.budget;
  s["allow_unstable"] = config.allow_unstable;
  s["workers"] = workers_to_json(config.workers);
  converged = true;
  if (config.mode == AssignmentMode::kStrict) {
    const auto sol = solve_strict(config.workers, config.budget);
    s["policy"] = {{"alpha", sol.alpha}, {"p", std::vector<double>(sol.alpha.size(), 0.0)}};
    s["utility"] = sol.utility;
    s["strict"] = {{"water_level", sol.water_level},
                   {"active_set", sol.active_set},
                   {"iterations", sol.iterations},
                   {"deactivated", sol.deactivated}};
  } else {
    const auto sol = alternating_solve(config.workers, config.budget, config.solver);
    converged = sol.report.converged && sol.report.all_blocks_converged;
    s["policy"] = {{"alpha", sol.policy.alpha}, {"p", sol.policy.p}};
    s["utility"] = sol.utility;
    s["moderate"] = {{"converged", sol.report.converged},
                     {"all_blocks_converged", sol.report.all_blocks_converged},
                     {"outer_iterations", sol.report.outer_iterations},
                     {"utility_trace", sol.report.utility_trace},
                     {"nodes_explored", sol.report.nodes_explored},
                     {"initial_p", sol.report.initial_p}};
  }
  s["config"] = config_to_json(config);
  return s;
}

std::vector<VerifyCheck> verify_solution(const json& s) {
  const Loaded l = load_solution(s);
  std::vector<VerifyCheck> checks;

  bool feasible = true;
  double violation = 0.0;
  try {
    l.policy.validate(l.workers.size(), l.budget);
  } catch (const ValidationError&) {
    feasible = false;
    violation = 1.0;
  }
  checks.push_back({"policy_feasible", feasible, violation});
  if (!feasible) return checks;

  const double stored = field<double>(s, "utility");
  const double recomputed = policy_utility(l.workers, l.policy, l.mode);
  const double drift = std::abs(stored - recomputed);
  checks.push_back({"utility_recomputed", drift <= kRoundTripTolerance, drift});

  const double balance = moderate_total_utility(l.workers, l.policy);
  const double gap = std::abs(balance - recomputed);
  checks.push_back({"balance_consistency", gap <= kRoundTripTolerance, gap});

  if (l.mode == AssignmentMode::kStrict) {
    const json strict = field<json>(s, "strict");
    StrictSolution sol;
    sol.alpha = l.policy.alpha;
    sol.water_level = field<double>(strict, "water_level");
    sol.active_set = field<std::vector<std::size_t>>(strict, "active_set");
    sol.utility = stored;
    for (const auto& c : verify_kkt(sol, l.workers, l.budget).checks) {
      checks.push_back({c.name, c.passed, c.residual});
    }
  }
  return checks;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sampling-rate and assignment-probability allocation for exhaustible workers", "exhaust"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "exhaust 0.1.0");

  SteadyArgs steady;
  auto* steady_cmd = app.add_subcommand("steady", "Stationary distribution and utility of one worker");
  steady_cmd->add_option("--lambda", steady.lambda, "Recovery rate")->required();
  steady_cmd->add_option("--mu", steady.mu, "Exhaustion rate")->required();
  steady_cmd->add_option("--alpha", steady.alpha, "Sampling rate")->required();
  steady_cmd->add_option("--ps", steady.ps, "Success probability in a moderate state");
  steady_cmd->add_option("--p", steady.p, "Moderate-state assignment probability");
  steady_cmd->add_option("--mode", steady.mode, "strict or moderate");
  steady_cmd->add_flag("--allow-unstable", steady.allow_unstable, "Accept lambda < mu");
  steady_cmd->add_flag("--json", steady.as_json, "Print JSON");

  std::string config_path;
  std::string output_path;
  std::string mode_override;
  auto* solve_cmd = app.add_subcommand("solve", "Optimal policy for a configuration");
  solve_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
  solve_cmd->add_option("--mode", mode_override, "Override the config's mode");
  solve_cmd->add_option("--output", output_path, "Solution file (default <out dir>/solution.json)");

  std::size_t alpha_steps = 0;
  std::size_t p_steps = 0;
  auto* oracle_cmd = app.add_subcommand("oracle", "Grid-search reference solution");
  oracle_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
  oracle_cmd->add_option("--mode", mode_override, "Override the config's mode");
  oracle_cmd->add_option("--alpha-steps", alpha_steps, "Grid points on [0, C]");
  oracle_cmd->add_option("--p-steps", p_steps, "Grid points on [0, 1]");

  std::string solution_path;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t threads = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo check of a policy");
  sim_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sim_cmd->add_option("--mode", mode_override, "Override the config's mode");
  sim_cmd->add_option("--solution", solution_path, "Stored solution to simulate (default: solve first)");
  sim_cmd->add_option("--horizon", horizon, "Simulated time");
  sim_cmd->add_option("--seed", seed, "Master seed")->each([&](const std::string&) { seed_given = true; });
  sim_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  std::string stats_path;
  sim_cmd->add_option("--output", stats_path, "Also write the statistics as JSON");

  std::string figure;
  std::string out_dir;
  auto* repro_cmd = app.add_subcommand("reproduce", "Regenerate the reference studies");
  repro_cmd->add_option("figure", figure, "fig4, fig5, fig6 or all")
      ->required()
      ->check(CLI::IsMember({"fig4", "fig5", "fig6", "all"}));
  repro_cmd->add_option("--out", out_dir, "Output directory (default $EXHAUST_OUT_DIR or results)");
  repro_cmd->add_option("--threads", threads, "Sweep threads (0 = all cores)");

  auto* verify_cmd = app.add_subcommand("verify", "Re-check a stored solution");
  verify_cmd->add_option("solution", solution_path, "Solution JSON written by solve")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    err << target->help();
    return kExitInvalid;
  }

  auto load = [&] {
    ExperimentConfig c = load_config(config_path);
    if (!mode_override.empty()) {
      const auto m = parse_mode(mode_override);
      if (!m) throw ValidationError("--mode must be strict or moderate");
      c.mode = *m;
    }
    return c;
  };

  try {
    if (*steady_cmd) {
      cmd_steady(steady, out);
    } else if (*solve_cmd) {
      const auto config = load();
      bool converged = true;
      const json s = solve_to_json(config, converged);
      Policy policy{s["policy"]["alpha"].get<std::vector<double>>(), s["policy"]["p"].get<std::vector<double>>()};
      out << "mode " << mode_name(config.mode) << '\n';
      print_policy(out, policy);
      out << "utility " << fmt(s["utility"].get<double>()) << '\n';
      if (config.mode == AssignmentMode::kStrict) {
        out << "water_level " << fmt(s["strict"]["water_level"].get<double>()) << '\n';
      } else {
        out << "outer_iterations " << s["moderate"]["outer_iterations"].get<std::size_t>() << '\n';
        out << "converged " << (converged ? "yes" : "no") << '\n';
      }
      const std::filesystem::path path =
          output_path.empty() ? resolve_out_dir("") / "solution.json" : std::filesystem::path(output_path);
      write_file(path, s.dump(2) + "\n");
      out << "wrote " << path.string() << '\n';
      if (!converged) throw NotConverged{"solver stopped at a node or outer-iteration cap"};
    } else if (*oracle_cmd) {
      auto config = load();
      if (alpha_steps) config.grid.alpha_steps = alpha_steps;
      if (p_steps) config.grid.p_steps = p_steps;
      const auto r = config.mode == AssignmentMode::kStrict
                         ? oracle_strict(config.workers, config.budget, config.grid)
                         : oracle_moderate(config.workers, config.budget, config.grid);
      out << "mode " << mode_name(config.mode) << '\n';
      print_policy(out, r.policy);
      out << "grid_utility " << fmt(r.grid_utility) << '\n';
      out << "continuous_utility " << fmt(r.continuous_utility) << '\n';
      out << "delta_alpha " << fmt(r.delta_alpha) << '\n';
      out << "grid_error " << fmt(r.grid_error) << '\n';
    } else if (*sim_cmd) {
      auto config = load();
      if (horizon > 0.0) config.sim.horizon = horizon;
      if (seed_given) config.sim.seed = seed;
      Policy policy;
      bool converged = true;
      if (!solution_path.empty()) {
        const Loaded l = load_solution(read_json_file(solution_path));
        if (l.workers.size() != config.workers.size()) {
          throw ValidationError("solution and config disagree on the worker count");
        }
        policy = l.policy;
      } else {
        const json s = solve_to_json(config, converged);
        policy = {s["policy"]["alpha"].get<std::vector<double>>(), s["policy"]["p"].get<std::vector<double>>()};
      }
      policy.validate(config.workers.size(), config.budget);
      const auto stats = simulate_system(config.workers, policy, config.mode, config.sim, threads);
      const double analytic = config.mode == AssignmentMode::kStrict
                                  ? strict_total_utility(config.workers, policy.alpha)
                                  : moderate_total_utility(config.workers, policy);
      out << "horizon " << fmt(config.sim.horizon) << " seed " << config.sim.seed << '\n';
      out << "rng " << stats.rng << '\n';
      out << "worker success_rate stderr analytic\n";
      for (std::size_t i = 0; i < stats.workers.size(); ++i) {
        const double a = config.mode == AssignmentMode::kStrict
                             ? strict_utility(config.workers[i], policy.alpha[i])
                             : moderate_utility(config.workers[i], policy.alpha[i], policy.p[i]);
        out << (i + 1) << ' ' << fmt(stats.workers[i].success_rate) << ' '
            << fmt(stats.workers[i].success_stderr) << ' ' << fmt(a) << '\n';
      }
      out << "success_rate " << fmt(stats.success_rate) << " +- " << fmt(stats.success_stderr) << '\n';
      out << "analytic " << fmt(analytic) << '\n';
      const double z = stats.success_stderr > 0.0 ? (stats.success_rate - analytic) / stats.success_stderr : 0.0;
      out << "z_score " << fmt(z) << '\n';
      if (!stats_path.empty()) {
        json j;
        j["schema_version"] = kSchemaVersion;
        j["kind"] = "simulation";
        j["mode"] = mode_name(config.mode);
        j["horizon"] = config.sim.horizon;
        j["seed"] = config.sim.seed;
        j["warmup_fraction"] = config.sim.warmup_fraction;
        j["batches"] = config.sim.batches;
        j["rng"] = stats.rng;
        j["policy"] = {{"alpha", policy.alpha}, {"p", policy.p}};
        j["success_rate"] = stats.success_rate;
        j["success_stderr"] = stats.success_stderr;
        j["assign_rate"] = stats.assign_rate;
        j["analytic"] = analytic;
        j["z_score"] = z;
        json ws = json::array();
        for (const auto& w : stats.workers) {
          ws.push_back({{"success_rate", w.success_rate},
                        {"success_stderr", w.success_stderr},
                        {"assign_rate", w.assign_rate},
                        {"assign_stderr", w.assign_stderr},
                        {"occupancy", w.occupancy},
                        {"events", w.events},
                        {"probes", w.probes}});
        }
        j["workers"] = ws;
        write_file(stats_path, j.dump(2) + "\n");
        out << "wrote " << stats_path << '\n';
      }
      if (!converged) throw NotConverged{"policy solve stopped at a cap"};
    } else if (*repro_cmd) {
      const auto dir = resolve_out_dir(out_dir);
      bool all_converged = true;
      const bool all = figure == "all";
      if (all || figure == "fig4") {
        const auto r = run_fig4();
        for (const auto& c : r.cases) {
          out << "fig4 q=" << fmt(c.q) << " utility " << fmt(c.solution.utility) << " zero_entries "
              << c.zero_entries << '\n';
        }
        for (const auto& p : write_fig4(r, dir)) out << "wrote " << p.string() << '\n';
      }
      if (all || figure == "fig5") {
        Fig5Options o;
        o.threads = threads;
        const auto r = run_fig5(o);
        for (const auto& j : r.jumps) {
          out << "fig5 worker " << j.worker << " transitions " << j.transitions << " threshold "
              << (j.location ? fmt(*j.location) : std::string("none")) << '\n';
        }
        for (const auto& row : r.rows) all_converged = all_converged && row.converged;
        for (const auto& p : write_fig5(r, dir)) out << "wrote " << p.string() << '\n';
      }
      if (all || figure == "fig6") {
        Fig6Options o;
        o.threads = threads;
        const auto r = run_fig6(o);
        for (const auto& row : r.rows) {
          out << "fig6 C=" << fmt(row.budget) << " bnb " << fmt(row.utility_bnb) << " oracle "
              << fmt(row.utility_oracle) << (row.converged ? "" : " not_converged") << '\n';
          all_converged = all_converged && row.converged;
        }
        out << "fig6 max_relative_gap " << fmt(r.max_relative_gap) << '\n';
        for (const auto& p : write_fig6(r, dir)) out << "wrote " << p.string() << '\n';
      }
      if (!all_converged) throw NotConverged{"some sweep points did not converge (status column)"};
    } else if (*verify_cmd) {
      const auto checks = verify_solution(read_json_file(solution_path));
      bool ok = true;
      for (const auto& c : checks) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name << " residual " << fmt(c.residual) << '\n';
        ok = ok && c.passed;
      }
      out << (ok ? "certificate valid" : "certificate INVALID") << '\n';
      return ok ? kExitOk : kExitInvalid;
    }
  } catch (const NotConverged& e) {
    err << "warning: " << e.what << '\n';
    return kExitNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitOk;
}

}  // namespace exhaust::tools
