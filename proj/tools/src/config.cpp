#include "exhaust_tools/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace exhaust::tools {

using nlohmann::json;

ConfigParseError::ConfigParseError(const std::string& message, std::size_t line,
                                   std::size_t column)
    : ValidationError("parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

ConfigFieldError::ConfigFieldError(std::string field, const std::string& message)
    : ValidationError(field + ": " + message), field_(std::move(field)) {}

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Walks one JSON object, remembering which keys were read.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigFieldError(path_.empty() ? "(root)" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigFieldError(join(path_, key), "required field is missing");
    }
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigFieldError(join(path_, key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigFieldError(join(path_, key), "must be finite");
    return d;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigFieldError(join(path_, key), "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigFieldError(join(path_, key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigFieldError(join(path_, key), "expected a string");
    return v.get<std::string>();
  }

  std::string field(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigFieldError(join(path_, key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
auto rethrow_as_field(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigFieldError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigFieldError(field, e.what());
  }
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  // nlohmann reports the 1-based offset of the offending character.
  std::size_t line = 1;
  std::size_t column = 1;
  const std::size_t end = std::min(byte == 0 ? 0 : byte - 1, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

std::optional<NodeSelection> parse_selection(const std::string& s) {
  if (s == "longest_edge") return NodeSelection::kLongestEdge;
  if (s == "best_bound") return NodeSelection::kBestBound;
  return std::nullopt;
}

std::optional<PBlockMethod> parse_p_block(const std::string& s) {
  if (s == "separable") return PBlockMethod::kSeparable;
  if (s == "simplex") return PBlockMethod::kSimplex;
  return std::nullopt;
}

PopulationSpec read_population(const json& j) {
  Fields f(j, "population");
  PopulationSpec pop;
  const std::uint64_t n = f.count("n", 0);
  if (n == 0) throw ConfigFieldError(f.field("n"), "must be a positive integer");
  pop.n = static_cast<std::size_t>(n);
  pop.q = f.number("q", 1.0);
  if (!(pop.q > 0.0 && pop.q <= 1.0)) throw ConfigFieldError(f.field("q"), "must lie in (0, 1]");
  pop.lambda_sum = f.number("lambda_sum");
  if (!(pop.lambda_sum > 0.0)) throw ConfigFieldError(f.field("lambda_sum"), "must be > 0");
  pop.mu = f.number("mu");
  pop.ps = f.number("ps", 0.0);
  f.finish();
  return pop;
}

ModerateOptions read_solver(const json& j) {
  Fields f(j, "solver");
  ModerateOptions o;
  o.rho = f.number("rho", o.rho);
  if (!(o.rho > 0.0)) throw ConfigFieldError(f.field("rho"), "must be > 0");
  o.eps = f.number("eps", o.eps);
  if (!(o.eps > 0.0)) throw ConfigFieldError(f.field("eps"), "must be > 0");
  o.max_outer = static_cast<std::size_t>(f.count("max_outer", o.max_outer));
  if (o.max_outer == 0) throw ConfigFieldError(f.field("max_outer"), "must be >= 1");
  o.node_cap = static_cast<std::size_t>(f.count("node_cap", o.node_cap));
  if (o.node_cap == 0) throw ConfigFieldError(f.field("node_cap"), "must be >= 1");
  const auto sel = parse_selection(f.text("node_selection", "longest_edge"));
  if (!sel) throw ConfigFieldError(f.field("node_selection"), "expected longest_edge or best_bound");
  o.selection = *sel;
  const auto pb = parse_p_block(f.text("p_block", "separable"));
  if (!pb) throw ConfigFieldError(f.field("p_block"), "expected separable or simplex");
  o.p_block = *pb;
  o.initial_p = f.number("initial_p", o.initial_p);
  if (!(o.initial_p >= 0.0 && o.initial_p <= 1.0)) {
    throw ConfigFieldError(f.field("initial_p"), "must lie in [0, 1]");
  }
  f.finish();
  return o;
}

GridSpec read_grid(const json& j) {
  Fields f(j, "grid");
  GridSpec g;
  g.alpha_steps = static_cast<std::size_t>(f.count("alpha_steps", g.alpha_steps));
  if (g.alpha_steps < 2) throw ConfigFieldError(f.field("alpha_steps"), "must be >= 2");
  g.p_steps = static_cast<std::size_t>(f.count("p_steps", g.p_steps));
  if (g.p_steps < 2) throw ConfigFieldError(f.field("p_steps"), "must be >= 2");
  f.finish();
  return g;
}

SimConfig read_sim(const json& j) {
  Fields f(j, "sim");
  SimConfig s;
  s.horizon = f.number("horizon", s.horizon);
  if (!(s.horizon > 0.0)) throw ConfigFieldError(f.field("horizon"), "must be > 0");
  s.seed = f.count("seed", s.seed);
  s.warmup_fraction = f.number("warmup_fraction", s.warmup_fraction);
  if (!(s.warmup_fraction >= 0.0 && s.warmup_fraction <= 0.5)) {
    throw ConfigFieldError(f.field("warmup_fraction"), "must lie in [0, 0.5]");
  }
  s.batches = static_cast<std::size_t>(f.count("batches", s.batches));
  if (s.batches < 2) throw ConfigFieldError(f.field("batches"), "must be >= 2");
  f.finish();
  return s;
}

}  // namespace

std::string_view selection_name(NodeSelection s) {
  return s == NodeSelection::kLongestEdge ? "longest_edge" : "best_bound";
}

std::string_view p_block_name(PBlockMethod m) {
  return m == PBlockMethod::kSeparable ? "separable" : "simplex";
}

std::vector<double> geometric_lambdas(std::size_t n, double q, double lambda_sum) {
  if (n == 0) throw ValidationError("population needs n >= 1");
  if (!(q > 0.0 && q <= 1.0)) throw ValidationError("q must lie in (0, 1]");
  if (!(lambda_sum > 0.0)) throw ValidationError("lambda_sum must be > 0");
  // Sum of q^(i-1) for i = 1..n; the closed form loses accuracy near q = 1.
  double weight = 0.0;
  double term = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    weight += term;
    term *= q;
  }
  const double b = lambda_sum / weight;
  std::vector<double> out(n);
  term = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = b * term;
    term *= q;
  }
  return out;
}

std::vector<WorkerParams> workers_from_json(const json& j, const std::string& field,
                                            bool allow_unstable) {
  if (!j.is_array() || j.empty()) throw ConfigFieldError(field, "expected a non-empty array");
  const auto check = allow_unstable ? StabilityCheck::kAllowUnstable : StabilityCheck::kEnforce;
  std::vector<WorkerParams> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = field + "[" + std::to_string(i) + "]";
    Fields f(j[i], path);
    const double lambda = f.number("lambda");
    const double mu = f.number("mu");
    const double ps = f.number("ps", 0.0);
    f.finish();
    if (!(lambda > 0.0)) throw ConfigFieldError(path + ".lambda", "must be > 0");
    if (!(mu > 0.0)) throw ConfigFieldError(path + ".mu", "must be > 0");
    if (!(ps >= 0.0 && ps <= 1.0)) throw ConfigFieldError(path + ".ps", "must lie in [0, 1]");
    out.push_back(rethrow_as_field(path, [&] { return WorkerParams(lambda, mu, ps, check); }));
  }
  return out;
}

json workers_to_json(const std::vector<WorkerParams>& workers) {
  json arr = json::array();
  for (const auto& w : workers) arr.push_back({{"lambda", w.lambda()}, {"mu", w.mu()}, {"ps", w.ps()}});
  return arr;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    std::string message = e.what();
    // Drop nlohmann's "[json.exception.parse_error.101] parse error at ...: " prefix.
    if (const auto colon = message.find(": "); colon != std::string::npos) {
      message = message.substr(colon + 2);
    }
    throw ConfigParseError(message, line, column);
  }

  Fields f(root, "");
  ExperimentConfig c;
  const double version = f.number("schema_version", kSchemaVersion);
  if (version != kSchemaVersion) {
    throw ConfigFieldError("schema_version", "unsupported version (expected " +
                                                 std::to_string(kSchemaVersion) + ")");
  }
  c.allow_unstable = f.flag("allow_unstable", false);

  const bool listed = f.has("workers");
  const bool generated = f.has("population");
  if (listed == generated) {
    throw ConfigFieldError("workers", "give exactly one of \"workers\" or \"population\"");
  }
  if (listed) {
    c.workers = workers_from_json(f.raw("workers"), "workers", c.allow_unstable);
  } else {
    const PopulationSpec pop = read_population(f.raw("population"));
    const auto check = c.allow_unstable ? StabilityCheck::kAllowUnstable : StabilityCheck::kEnforce;
    const auto lambdas = geometric_lambdas(pop.n, pop.q, pop.lambda_sum);
    for (std::size_t i = 0; i < pop.n; ++i) {
      c.workers.push_back(rethrow_as_field("population", [&] {
        return WorkerParams(lambdas[i], pop.mu, pop.ps, check);
      }));
    }
    c.population = pop;
  }

  c.budget = f.number("budget");
  if (!(c.budget > 0.0)) throw ConfigFieldError("budget", "must be > 0");

  const auto mode = parse_mode(f.text("mode", "strict"));
  if (!mode) throw ConfigFieldError("mode", "expected strict or moderate");
  c.mode = *mode;

  c.schema_version = kSchemaVersion;
  if (f.has("solver")) c.solver = read_solver(f.raw("solver"));
  if (f.has("grid")) c.grid = read_grid(f.raw("grid"));
  if (f.has("sim")) c.sim = read_sim(f.raw("sim"));
  f.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  if (c.population) {
    const auto& p = *c.population;
    j["population"] = {{"n", p.n}, {"q", p.q}, {"lambda_sum", p.lambda_sum}, {"mu", p.mu}, {"ps", p.ps}};
  } else {
    j["workers"] = workers_to_json(c.workers);
  }
  j["budget"] = c.budget;
  j["mode"] = std::string(mode_name(c.mode));
  j["allow_unstable"] = c.allow_unstable;
  j["solver"] = {{"rho", c.solver.rho},
                 {"eps", c.solver.eps},
                 {"max_outer", c.solver.max_outer},
                 {"node_cap", c.solver.node_cap},
                 {"node_selection", std::string(selection_name(c.solver.selection))},
                 {"p_block", std::string(p_block_name(c.solver.p_block))},
                 {"initial_p", c.solver.initial_p}};
  j["grid"] = {{"alpha_steps", c.grid.alpha_steps}, {"p_steps", c.grid.p_steps}};
  j["sim"] = {{"horizon", c.sim.horizon},
              {"seed", c.sim.seed},
              {"warmup_fraction", c.sim.warmup_fraction},
              {"batches", c.sim.batches}};
  return j;
}

}  // namespace exhaust::tools
