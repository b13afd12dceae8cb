#pragma once

// Event-driven Monte-Carlo simulation of the worker chain under Poisson
// probing. Each sojourn is exponential in the total exit rate (state
// transitions plus the probe clock); the event is then drawn in proportion to
// its rate. Probes in states 1 and 1* find nothing to do and are no-ops.
//
// Random streams: every worker path uses std::mt19937_64 seeded with
// splitmix64 applied to (master seed, worker index, purpose tag), so results
// are reproducible bit for bit and independent of thread scheduling.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "exhaust/worker_model.hpp"

namespace exhaust {

struct SimConfig {
  double horizon = 1e6;
  std::uint64_t seed = 42;
  /// Leading fraction of the horizon discarded before measuring.
  double warmup_fraction = 0.1;
  /// Batch count for the batch-means standard errors.
  std::size_t batches = 50;

  void validate() const;
};

struct SimStats {
  std::array<double, kStateCount> occupancy{};
  std::array<double, kStateCount> occupancy_stderr{};
  double success_rate = 0.0;
  double assign_rate = 0.0;
  double success_stderr = 0.0;
  double assign_stderr = 0.0;
  std::uint64_t events = 0;
  std::uint64_t probes = 0;
  double measured_time = 0.0;
};

struct SystemSimStats {
  double success_rate = 0.0;
  double assign_rate = 0.0;
  /// Root-sum-square of the per-worker errors; the workers are independent.
  double success_stderr = 0.0;
  std::vector<SimStats> workers;
  std::string rng;
};

enum class StreamPurpose : std::uint64_t { kWorkerPath = 1 };

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t worker_index,
                                 StreamPurpose purpose);
std::string rng_description();

/// In strict mode p is forced to zero before simulating, so the path does not
/// depend on the p supplied.
SimStats simulate_worker(const WorkerParams& w, double alpha, double p, AssignmentMode mode,
                         const SimConfig& config, std::uint64_t worker_index = 0);

/// Simulates every worker on its own stream; `threads == 0` picks the
/// hardware concurrency.
SystemSimStats simulate_system(std::span<const WorkerParams> workers, const Policy& policy,
                               AssignmentMode mode, const SimConfig& config,
                               std::size_t threads = 0);

}  // namespace exhaust
