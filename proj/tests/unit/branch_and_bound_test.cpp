#include "exhaust/branch_and_bound.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "exhaust/errors.hpp"
#include "exhaust/moderate_solver.hpp"
#include "exhaust/strict_solver.hpp"
#include "test_support.hpp"

namespace exhaust {
namespace {

using testing::random_workers;
using testing::uniform;

SumOfRatiosProblem strict_problem(const std::vector<WorkerParams>& ws, double budget) {
  const std::vector<double> p(ws.size(), 0.0);
  return alpha_block_problem(ws, p, budget);
}

// Random point of S by Dirichlet-like weights.
std::vector<double> sample_in(const Simplex& s, std::mt19937_64& rng) {
  std::vector<double> w(s.vertex_count());
  double total = 0.0;
  for (auto& v : w) total += (v = -std::log(uniform(rng, 1e-12, 1.0)));
  std::vector<double> x(s.dimension(), 0.0);
  for (std::size_t i = 0; i < s.vertex_count(); ++i) {
    const auto v = s.vertex(i);
    for (std::size_t j = 0; j < s.dimension(); ++j) x[j] += w[i] / total * v[j];
  }
  return x;
}

TEST(Simplex, InitialSimplexVertices) {
  const auto s = initial_simplex(3.0, 2);
  ASSERT_EQ(s.vertex_count(), 3u);
  EXPECT_EQ(s.vertices(), (std::vector<std::vector<double>>{{0, 0}, {3, 0}, {0, 3}}));
  EXPECT_NEAR(s.volume(), 4.5, 1e-12);
  const auto c = s.centroid();
  EXPECT_NEAR(c[0], 1.0, 1e-15);
  EXPECT_NEAR(c[1], 1.0, 1e-15);
}

TEST(Simplex, VolumeOfThreeDimensionalCorner) {
  EXPECT_NEAR(initial_simplex(2.0, 3).volume(), 8.0 / 6.0, 1e-12);
}

TEST(Simplex, LongestEdgeTieBreaksLexicographically) {
  const auto e = initial_simplex(1.0, 3).longest_edge();
  EXPECT_EQ(e.from, 1u);
  EXPECT_EQ(e.to, 2u);
  EXPECT_NEAR(e.length, std::sqrt(2.0), 1e-15);
}

TEST(Simplex, BisectionSplitsVolumeAndMidpoint) {
  const auto s = initial_simplex(2.0, 2);
  const auto [a, b] = bisect_longest_edge(s);
  EXPECT_NEAR(a.volume() + b.volume(), s.volume(), 1e-12);
  EXPECT_NEAR(a.volume(), b.volume(), 1e-12);
  // The new vertex is the midpoint of (2,0)-(0,2).
  const auto has_mid = [](const Simplex& t) {
    for (std::size_t i = 0; i < t.vertex_count(); ++i)
      if (std::abs(t.vertex(i)[0] - 1.0) < 1e-15 && std::abs(t.vertex(i)[1] - 1.0) < 1e-15) return true;
    return false;
  };
  EXPECT_TRUE(has_mid(a));
  EXPECT_TRUE(has_mid(b));
}

TEST(Simplex, RepeatedBisectionConservesVolume) {
  std::vector<Simplex> pieces = {initial_simplex(1.5, 3)};
  for (int round = 0; round < 6; ++round) {
    std::vector<Simplex> next;
    for (const auto& p : pieces) {
      auto [a, b] = bisect_longest_edge(p);
      next.push_back(std::move(a));
      next.push_back(std::move(b));
    }
    pieces = std::move(next);
  }
  double total = 0.0;
  for (const auto& p : pieces) total += p.volume();
  EXPECT_NEAR(total, initial_simplex(1.5, 3).volume(), 1e-12);
}

TEST(FeasibleRegion, ProjectionLandsInside) {
  std::mt19937_64 rng(31);
  const auto region = FeasibleRegion::budget_simplex(4, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> y(4);
    for (auto& v : y) v = uniform(rng, -3.0, 3.0);
    const auto x = region.project(y);
    EXPECT_TRUE(region.contains(x, 1e-12));
  }
  const auto box = FeasibleRegion::unit_box(2);
  EXPECT_EQ(box.project(std::vector<double>{-1.0, 2.0}), (std::vector<double>{0.0, 1.0}));
}

TEST(SumOfRatiosProblem, RejectsBadInput) {
  const RatioTerm good{Cubic{{0.0, 1.0, 0.0, 0.0}}, Cubic{{1.0, 1.0, 0.0, 0.0}}};
  const RatioTerm vanishing{Cubic{{0.0, 1.0, 0.0, 0.0}}, Cubic{{0.0, 1.0, 0.0, 0.0}}};
  EXPECT_THROW(SumOfRatiosProblem({good}, FeasibleRegion::budget_simplex(2, 1.0)),
               InvalidProblemError);
  EXPECT_THROW(SumOfRatiosProblem({vanishing}, FeasibleRegion::budget_simplex(1, 1.0)),
               InvalidProblemError);
  EXPECT_NO_THROW(SumOfRatiosProblem({good}, FeasibleRegion::budget_simplex(1, 1.0)));
}

TEST(UpperBound, DominatesSampledObjective) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng() % 3;
    const auto ws = random_workers(rng, n);
    std::vector<double> p(n);
    for (auto& v : p) v = uniform(rng, 0.0, 1.0);
    const double budget = uniform(rng, 0.5, 10.0);
    const auto problem = alpha_block_problem(ws, p, budget);

    // A random sub-simplex from a few bisections.
    Simplex s = problem.initial();
    for (int k = 0; k < static_cast<int>(rng() % 6); ++k) {
      auto halves = bisect_longest_edge(s);
      s = (rng() % 2) ? halves.first : halves.second;
    }
    for (BoundMode mode : {BoundMode::kVertexTangent, BoundMode::kLagrangian}) {
      const double ub = upper_bound(s, problem, mode);
      for (int k = 0; k < 200; ++k) {
        const auto x = sample_in(s, rng);
        if (!problem.region().contains(x)) continue;
        EXPECT_LE(problem.objective(x), ub + 1e-12);
      }
      EXPECT_LE(lower_bound(s, problem).value, ub + 1e-12);
    }
    EXPECT_LE(upper_bound(s, problem, BoundMode::kLagrangian),
              upper_bound(s, problem, BoundMode::kVertexTangent) + 1e-15);
  }
}

TEST(UpperBound, RootBoundCoversStrictOptimum) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ws = random_workers(rng, 1 + rng() % 5, 0.0);
    const double budget = uniform(rng, 0.5, 10.0);
    const auto problem = strict_problem(ws, budget);
    EXPECT_GE(upper_bound(problem.initial(), problem), solve_strict(ws, budget).utility - 1e-12);
  }
}

TEST(UpperBound, DegenerateSimplexBoundIsTheValue) {
  const std::vector<WorkerParams> ws = {WorkerParams(2.0, 1.0), WorkerParams(3.0, 1.0)};
  const auto problem = strict_problem(ws, 4.0);
  const std::vector<double> x = {1.5, 2.0};
  const Simplex point({x, x, x});
  EXPECT_NEAR(upper_bound(point, problem), problem.objective(x), 1e-12);
  EXPECT_NEAR(lower_bound(point, problem).value, problem.objective(x), 1e-12);
}

TEST(LowerBound, PointIsFeasibleAndMatchesValue) {
  std::mt19937_64 rng(34);
  const auto ws = random_workers(rng, 3);
  const std::vector<double> p = {0.3, 0.6, 0.9};
  const auto problem = alpha_block_problem(ws, p, 5.0);
  const auto lb = lower_bound(problem.initial(), problem);
  EXPECT_TRUE(problem.region().contains(lb.point));
  EXPECT_DOUBLE_EQ(lb.value, problem.objective(lb.point));
}

TEST(BranchAndBound, SingleWorkerSpendsTheBudget) {
  const std::vector<WorkerParams> ws = {WorkerParams(2.0, 1.0)};
  const auto r = branch_and_bound(strict_problem(ws, 1.0));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.best_point[0], 1.0, 1e-6);
  EXPECT_NEAR(r.lower_bound, 4.0 / 23.0, 1e-12);
}

TEST(BranchAndBound, MatchesStrictSolver) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 30; ++trial) {
    const auto ws = random_workers(rng, 1 + rng() % 4, 0.0);
    const double budget = uniform(rng, 0.5, 10.0);
    const auto exact = solve_strict(ws, budget);
    const auto r = branch_and_bound(strict_problem(ws, budget));
    EXPECT_LE(r.lower_bound, exact.utility + 1e-12);
    EXPECT_GE(r.upper_bound, exact.utility - 1e-12);
    // Four-dimensional runs may stop at the node cap with a loose gap.
    if (ws.size() > 3) continue;
    EXPECT_TRUE(r.converged);
    EXPECT_GE(r.lower_bound, exact.utility * (1 - 1e-4) - 1e-12);
    EXPECT_LE(r.upper_bound - r.lower_bound, 1e-4 * r.upper_bound + 1e-15);
  }
}

TEST(BranchAndBound, BothBoundModesConverge) {
  const std::vector<WorkerParams> ws = {WorkerParams(4.0, 1.0, 0.5), WorkerParams(2.0, 1.0, 0.5)};
  const std::vector<double> p = {1.0, 0.5};
  const auto problem = alpha_block_problem(ws, p, 3.0);
  BnBOptions tangent;
  tangent.bound = BoundMode::kVertexTangent;
  const auto a = branch_and_bound(problem, tangent);
  const auto b = branch_and_bound(problem);
  EXPECT_TRUE(a.converged);
  EXPECT_TRUE(b.converged);
  EXPECT_NEAR(a.lower_bound, b.lower_bound, 2e-4 * b.upper_bound);
  EXPECT_LE(b.nodes_explored, a.nodes_explored);
}

TEST(BranchAndBound, TraceIsMonotone) {
  std::mt19937_64 rng(36);
  const auto ws = random_workers(rng, 3);
  const std::vector<double> p = {0.2, 0.8, 1.0};
  BnBOptions options;
  options.record_trace = true;
  options.polish = false;
  const auto r = branch_and_bound(alpha_block_problem(ws, p, 6.0), options);
  ASSERT_FALSE(r.trace.empty());
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    EXPECT_LE(r.trace[k].upper, r.trace[k - 1].upper + 1e-12);
    EXPECT_GE(r.trace[k].lower, r.trace[k - 1].lower - 1e-12);
    EXPECT_LE(r.trace[k].lower, r.trace[k].upper + 1e-12);
  }
}

TEST(BranchAndBound, PrunedNodesCannotBeatIncumbent) {
  std::mt19937_64 rng(37);
  const auto ws = random_workers(rng, 2);
  const std::vector<double> p = {0.7, 0.4};
  BnBOptions options;
  options.keep_nodes = true;
  const auto r = branch_and_bound(alpha_block_problem(ws, p, 4.0), options);
  EXPECT_GT(r.nodes_pruned, 0u);
  for (const auto& node : r.pruned) EXPECT_LE(node.upper_bound, node.incumbent * (1 + 1e-4) + 1e-12);
  for (const auto& node : r.open_nodes) EXPECT_LE(node.upper_bound, r.upper_bound + 1e-12);
}

TEST(BranchAndBound, SymmetricWorkersGetEqualShares) {
  const std::vector<WorkerParams> ws(3, WorkerParams(3.0, 1.0, 0.4));
  const std::vector<double> p(3, 1.0);
  const auto r = branch_and_bound(alpha_block_problem(ws, p, 6.0));
  for (double a : r.best_point) EXPECT_NEAR(a, 2.0, 1e-3);
}

TEST(BranchAndBound, WarmStartIsNeverWorse) {
  std::mt19937_64 rng(38);
  const auto ws = random_workers(rng, 3, 0.0);
  const auto problem = strict_problem(ws, 5.0);
  const auto exact = solve_strict(ws, 5.0);
  BnBOptions options;
  options.warm_start = exact.alpha;
  options.node_cap = 1;
  const auto r = branch_and_bound(problem, options);
  EXPECT_GE(r.lower_bound, exact.utility - 1e-12);
}

TEST(BranchAndBound, NodeCapReportsNotConverged) {
  std::mt19937_64 rng(39);
  const auto ws = random_workers(rng, 4);
  const std::vector<double> p(4, 1.0);
  BnBOptions options;
  options.node_cap = 3;
  options.rho = 1e-12;
  const auto r = branch_and_bound(alpha_block_problem(ws, p, 5.0), options);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.lower_bound, r.upper_bound);
}

TEST(PolishPoint, NeverDecreases) {
  std::mt19937_64 rng(40);
  for (int trial = 0; trial < 30; ++trial) {
    const auto ws = random_workers(rng, 3);
    const std::vector<double> p = {uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1)};
    const auto problem = alpha_block_problem(ws, p, 4.0);
    std::vector<double> x = {uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1)};
    const double before = problem.objective(x);
    const double after = polish_point(problem, x);
    EXPECT_GE(after, before);
    EXPECT_TRUE(problem.region().contains(x, 1e-12));
    EXPECT_DOUBLE_EQ(after, problem.objective(x));
  }
}

}  // namespace
}  // namespace exhaust
