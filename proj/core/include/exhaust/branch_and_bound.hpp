#pragma once

// Simplicial branch-and-bound for separable sums of ratios
//
//   max  sum_j f_j(x_j) / g_j(x_j)   over   X = { lo <= x <= hi, sum x <= budget }
//
// where f_j, g_j are cubics and g_j > 0 on X. Each node is a simplex S. Its
// upper bound divides the largest numerator value reachable in S by a
// certified lower bound on the denominator (tangent of g_j at the centroid,
// floored by the global minimum of g_j over X), optionally tightened by a
// Lagrangian bound on the coordinate sum. Its lower bound evaluates the
// objective at the projected vertices and centroid. The node with the longest
// edge is split at that edge's midpoint until
//
//   UB - LB <= rho * UB.
//
// Nodes whose bound cannot beat the incumbent are pruned.

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "exhaust/polynomial.hpp"

namespace exhaust {

struct FeasibleRegion {
  std::vector<double> lower;
  std::vector<double> upper;
  std::optional<double> budget;

  static FeasibleRegion budget_simplex(std::size_t n, double budget);
  static FeasibleRegion unit_box(std::size_t n);

  std::size_t dimension() const { return lower.size(); }

  /// Width of the widest coordinate range, used to scale the degeneracy floor.
  double scale() const;

  /// Largest value coordinate `j` can take inside X.
  double coordinate_upper(std::size_t j) const;

  bool contains(std::span<const double> x, double tol = 1e-12) const;

  /// Euclidean projection onto X.
  std::vector<double> project(std::span<const double> y) const;
};

class Simplex {
 public:
  struct Edge {
    std::size_t from;
    std::size_t to;
    double length;
  };

  Simplex() = default;
  /// `vertices` holds dimension + 1 points.
  explicit Simplex(const std::vector<std::vector<double>>& vertices);

  std::size_t dimension() const { return dim_; }
  std::size_t vertex_count() const { return dim_ + 1; }
  std::span<const double> vertex(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }

  std::vector<double> centroid() const;
  /// Longest edge; ties go to the lexicographically smallest (from, to) pair.
  Edge longest_edge() const;
  double volume() const;
  /// Smallest and largest value of coordinate j over the vertices.
  std::pair<double, double> coordinate_range(std::size_t j) const;

  std::vector<std::vector<double>> vertices() const;

 private:
  friend std::pair<Simplex, Simplex> bisect_longest_edge(const Simplex& s);
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

/// V_0 = 0, V_i = budget * e_i. Equals { x >= 0, sum x <= budget }.
Simplex initial_simplex(double budget, std::size_t n);

/// A simplex whose hull contains X.
Simplex covering_simplex(const FeasibleRegion& region);

std::pair<Simplex, Simplex> bisect_longest_edge(const Simplex& s);

class SumOfRatiosProblem {
 public:
  /// Throws InvalidProblemError when sizes disagree, X is empty, the initial
  /// simplex misses X, or some g_j is not positive on X.
  SumOfRatiosProblem(std::vector<RatioTerm> terms, FeasibleRegion region,
                     std::optional<Simplex> initial = std::nullopt);

  std::size_t dimension() const { return terms_.size(); }
  const std::vector<RatioTerm>& terms() const { return terms_; }
  const FeasibleRegion& region() const { return region_; }
  const Simplex& initial() const { return initial_; }

  /// min g_j over the projection of X onto coordinate j.
  double denominator_floor(std::size_t j) const { return denominator_floor_[j]; }
  bool numerator_convex(std::size_t j) const { return numerator_convex_[j]; }
  bool denominator_convex(std::size_t j) const { return denominator_convex_[j]; }

  double objective(std::span<const double> x) const;

 private:
  std::vector<RatioTerm> terms_;
  FeasibleRegion region_;
  Simplex initial_;
  std::vector<double> denominator_floor_;
  std::vector<bool> numerator_convex_;
  std::vector<bool> denominator_convex_;
};

/// Conservative: false only when S and X are certainly disjoint.
bool intersects_region(const Simplex& s, const FeasibleRegion& region);

enum class BoundMode {
  /// Largest numerator over a tangent lower bound of the denominator.
  kVertexTangent,
  /// The vertex-tangent bound, tightened by a Lagrangian bound on the
  /// coordinate sum. Each term minus beta * x_j is bounded on its coordinate
  /// interval through the endpoint values and a certified curvature bound;
  /// beta is minimized exactly over the secant-slope breakpoints.
  kLagrangian,
};

/// Upper bound on the objective over S intersected with X.
double upper_bound(const Simplex& s, const SumOfRatiosProblem& problem,
                   BoundMode mode = BoundMode::kLagrangian);

struct LowerBound {
  double value;
  std::vector<double> point;
};

/// Best objective value among the vertices and centroid, each projected onto X.
LowerBound lower_bound(const Simplex& s, const SumOfRatiosProblem& problem);

struct BnBNode {
  Simplex simplex;
  double upper_bound;
  double lower_bound;
  std::vector<double> best_point;
};

enum class NodeSelection { kLongestEdge, kBestBound };

struct BnBOptions {
  double rho = 1e-4;
  std::size_t node_cap = 1'000'000;
  std::size_t iteration_cap = 10'000'000;
  NodeSelection selection = NodeSelection::kLongestEdge;
  BoundMode bound = BoundMode::kLagrangian;
  /// Nodes whose longest edge is below this fraction of X's scale are not split.
  double degeneracy_floor = 1e-9;
  /// Feasible starting incumbent; ignored when empty.
  std::vector<double> warm_start;
  bool record_trace = false;
  /// Refine the final incumbent by projected gradient ascent. Only the
  /// incumbent moves; the bounds are untouched.
  bool polish = true;
  /// Keep the final open nodes and every pruned node in the report.
  bool keep_nodes = false;
};

struct BoundSample {
  std::size_t iteration;
  double upper;
  double lower;
  std::size_t open_nodes;
};

struct PrunedNode {
  Simplex simplex;
  double upper_bound;
  double incumbent;
};

struct BnBReport {
  std::vector<double> best_point;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  std::size_t iterations = 0;
  std::size_t nodes_explored = 0;
  std::size_t nodes_pruned = 0;
  std::size_t leaves_retired = 0;
  bool converged = false;

  std::vector<BoundSample> trace;
  std::vector<BnBNode> open_nodes;
  std::vector<PrunedNode> pruned;
};

/// Projected gradient ascent from the feasible point x with a doubling and
/// halving step. x is updated in place and its objective value returned;
/// the value never decreases.
double polish_point(const SumOfRatiosProblem& problem, std::vector<double>& x,
                    std::size_t max_steps = 2000);

BnBReport branch_and_bound(const SumOfRatiosProblem& problem, const BnBOptions& options = {});

}  // namespace exhaust
