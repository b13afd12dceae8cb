#include "exhaust/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "exhaust/errors.hpp"

namespace exhaust {

namespace {

enum class EventKind { kMove, kProbe };

struct Transition {
  double cumulative;  // running share of the total rate, last entry 1
  EventKind kind;
  State target;
};

struct StateTable {
  double total_rate = 0.0;
  std::vector<Transition> transitions;
};

// 53-bit uniform on [0, 1).
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exponential(std::mt19937_64& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

std::array<StateTable, kStateCount> build_tables(const GeneratorMatrix& movement, double alpha) {
  std::array<StateTable, kStateCount> tables;
  for (State s : kAllStates) {
    auto& table = tables[index(s)];
    std::vector<std::pair<double, Transition>> entries;
    for (State to : kAllStates) {
      if (to == s) continue;
      const double r = movement.rate(s, to);
      if (r > 0.0) entries.push_back({r, {0.0, EventKind::kMove, to}});
    }
    if (alpha > 0.0) entries.push_back({alpha, {0.0, EventKind::kProbe, s}});
    for (const auto& [r, t] : entries) table.total_rate += r;
    double running = 0.0;
    for (auto& [r, t] : entries) {
      running += r;
      t.cumulative = running / table.total_rate;
      table.transitions.push_back(t);
    }
    if (!table.transitions.empty()) table.transitions.back().cumulative = 1.0;
  }
  return tables;
}

struct BatchSums {
  std::array<double, kStateCount> time{};
  double successes = 0.0;
  double assignments = 0.0;
};

double batch_stderr(const std::vector<double>& means) {
  const std::size_t b = means.size();
  if (b < 2) return 0.0;
  double mean = 0.0;
  for (double v : means) mean += v;
  mean /= static_cast<double>(b);
  double ss = 0.0;
  for (double v : means) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
}

}  // namespace

void SimConfig::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be > 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 0.5)) {
    throw ValidationError("warmup fraction must lie in [0, 0.5]");
  }
  if (batches < 2) throw ValidationError("batch means needs at least 2 batches");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t worker_index,
                                 StreamPurpose purpose) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ worker_index);
  return splitmix64(s ^ static_cast<std::uint64_t>(purpose));
}

std::string rng_description() {
  return "mt19937_64; stream seed = splitmix64(splitmix64(splitmix64(seed) ^ worker) ^ purpose)";
}

SimStats simulate_worker(const WorkerParams& w, double alpha, double p, AssignmentMode mode,
                         const SimConfig& config, std::uint64_t worker_index) {
  config.validate();
  if (mode == AssignmentMode::kStrict) p = 0.0;
  // Movement rates only; probes are handled as their own event.
  const GeneratorMatrix movement = build_generator(w, 0.0, 0.0, AssignmentMode::kStrict);
  const auto tables = build_tables(movement, alpha);
  const double ps = w.ps();

  std::mt19937_64 rng(derive_stream_seed(config.seed, worker_index, StreamPurpose::kWorkerPath));

  const double start = config.warmup_fraction * config.horizon;
  const double end = config.horizon;
  const std::size_t nb = config.batches;
  const double batch_len = (end - start) / static_cast<double>(nb);
  std::vector<BatchSums> batches(nb);

  auto batch_of = [&](double t) {
    const auto k = static_cast<std::size_t>((t - start) / batch_len);
    return std::min(k, nb - 1);
  };
  auto add_time = [&](State s, double a, double b) {
    a = std::max(a, start);
    b = std::min(b, end);
    while (a < b) {
      std::size_t k = batch_of(a);
      auto boundary = [&](std::size_t j) { return start + batch_len * static_cast<double>(j + 1); };
      while (k + 1 < nb && boundary(k) <= a) ++k;
      const double stop = k + 1 == nb ? b : std::min(b, boundary(k));
      batches[k].time[index(s)] += stop - a;
      a = stop;
    }
  };

  SimStats stats;
  State state = State::kS3;
  double t = 0.0;
  while (true) {
    const auto& table = tables[index(state)];
    const double next = t + exponential(rng, table.total_rate);
    add_time(state, t, next);
    if (next >= end) break;
    t = next;
    ++stats.events;

    const double u = uniform01(rng);
    const auto it = std::find_if(table.transitions.begin(), table.transitions.end(),
                                 [u](const Transition& tr) { return u < tr.cumulative; });
    const Transition& event = it != table.transitions.end() ? *it : table.transitions.back();
    if (event.kind == EventKind::kMove) {
      state = event.target;
      continue;
    }

    ++stats.probes;
    bool assigned = false;
    bool success = false;
    if (state == State::kS3) {
      assigned = true;
      success = true;
    } else if (state == State::kS2 || state == State::kS2x) {
      if (p > 0.0 && uniform01(rng) < p) {
        assigned = true;
        success = uniform01(rng) < ps;
      }
    }
    if (assigned) {
      state = State::kS1x;
      if (t >= start) {
        auto& b = batches[batch_of(t)];
        b.assignments += 1.0;
        if (success) b.successes += 1.0;
      }
    }
  }

  const double measured = end - start;
  stats.measured_time = measured;
  std::vector<double> success_means;
  std::vector<double> assign_means;
  std::array<std::vector<double>, kStateCount> occupancy_means;
  double successes = 0.0;
  double assignments = 0.0;
  std::array<double, kStateCount> time{};
  for (const auto& b : batches) {
    success_means.push_back(b.successes / batch_len);
    assign_means.push_back(b.assignments / batch_len);
    successes += b.successes;
    assignments += b.assignments;
    for (std::size_t s = 0; s < kStateCount; ++s) {
      occupancy_means[s].push_back(b.time[s] / batch_len);
      time[s] += b.time[s];
    }
  }
  double total_time = 0.0;
  for (double v : time) total_time += v;
  for (std::size_t s = 0; s < kStateCount; ++s) {
    stats.occupancy[s] = time[s] / total_time;
    stats.occupancy_stderr[s] = batch_stderr(occupancy_means[s]);
  }
  stats.success_rate = successes / measured;
  stats.assign_rate = assignments / measured;
  stats.success_stderr = batch_stderr(success_means);
  stats.assign_stderr = batch_stderr(assign_means);
  return stats;
}

SystemSimStats simulate_system(std::span<const WorkerParams> workers, const Policy& policy,
                               AssignmentMode mode, const SimConfig& config, std::size_t threads) {
  config.validate();
  if (policy.alpha.size() != workers.size() || policy.p.size() != workers.size()) {
    throw ValidationError("policy length does not match the worker count");
  }
  const std::size_t n = workers.size();
  SystemSimStats out;
  out.workers.resize(n);
  out.rng = rng_description();

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(n, 1));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out.workers[i] = simulate_worker(workers[i], policy.alpha[i], policy.p[i], mode, config, i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  double var = 0.0;
  for (const auto& s : out.workers) {
    out.success_rate += s.success_rate;
    out.assign_rate += s.assign_rate;
    var += s.success_stderr * s.success_stderr;
  }
  out.success_stderr = std::sqrt(var);
  return out;
}

}  // namespace exhaust
