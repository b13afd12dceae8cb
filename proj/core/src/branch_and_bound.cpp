#include "exhaust/branch_and_bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <string>

#include "exhaust/errors.hpp"

namespace exhaust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool convex_on(const Cubic& c, double lo, double hi) {
  // The second derivative of a cubic is affine, so checking both ends suffices.
  return c.second_derivative(lo) >= 0.0 && c.second_derivative(hi) >= 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// FeasibleRegion

FeasibleRegion FeasibleRegion::budget_simplex(std::size_t n, double budget) {
  FeasibleRegion r;
  r.lower.assign(n, 0.0);
  r.upper.assign(n, budget);
  r.budget = budget;
  return r;
}

FeasibleRegion FeasibleRegion::unit_box(std::size_t n) {
  FeasibleRegion r;
  r.lower.assign(n, 0.0);
  r.upper.assign(n, 1.0);
  return r;
}

double FeasibleRegion::coordinate_upper(std::size_t j) const {
  double hi = upper[j];
  if (budget) {
    const double others = std::accumulate(lower.begin(), lower.end(), 0.0) - lower[j];
    hi = std::min(hi, *budget - others);
  }
  return hi;
}

double FeasibleRegion::scale() const {
  double s = 0.0;
  for (std::size_t j = 0; j < dimension(); ++j) s = std::max(s, coordinate_upper(j) - lower[j]);
  return s;
}

bool FeasibleRegion::contains(std::span<const double> x, double tol) const {
  if (x.size() != dimension()) return false;
  double total = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < lower[j] - tol || x[j] > upper[j] + tol) return false;
    total += x[j];
  }
  return !budget || total <= *budget + tol;
}

std::vector<double> FeasibleRegion::project(std::span<const double> y) const {
  const std::size_t n = dimension();
  auto shifted = [&](double tau) {
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = std::clamp(y[j] - tau, lower[j], upper[j]);
    return x;
  };
  auto total = [](const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0); };

  std::vector<double> x = shifted(0.0);
  if (!budget || total(x) <= *budget) return x;

  // sum(clamp(y - tau)) is nonincreasing in tau; bisect for the budget.
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t j = 0; j < n; ++j) hi = std::max(hi, y[j] - lower[j]);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (total(shifted(mid)) > *budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return shifted(hi);
}

// ---------------------------------------------------------------------------
// Simplex

Simplex::Simplex(const std::vector<std::vector<double>>& vertices) {
  if (vertices.empty()) throw ValidationError("simplex needs at least one vertex");
  dim_ = vertices.size() - 1;
  coords_.reserve(vertices.size() * dim_);
  for (const auto& v : vertices) {
    if (v.size() != dim_) throw ValidationError("simplex vertex has the wrong dimension");
    coords_.insert(coords_.end(), v.begin(), v.end());
  }
}

std::vector<double> Simplex::centroid() const {
  std::vector<double> c(dim_, 0.0);
  for (std::size_t i = 0; i < vertex_count(); ++i) {
    const auto v = vertex(i);
    for (std::size_t j = 0; j < dim_; ++j) c[j] += v[j];
  }
  for (double& x : c) x /= static_cast<double>(vertex_count());
  return c;
}

Simplex::Edge Simplex::longest_edge() const {
  Edge best{0, std::min<std::size_t>(1, dim_), -1.0};
  for (std::size_t i = 0; i < vertex_count(); ++i) {
    for (std::size_t k = i + 1; k < vertex_count(); ++k) {
      const auto a = vertex(i);
      const auto b = vertex(k);
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
      // Strict comparison keeps the first (lexicographically smallest) pair on ties.
      if (d2 > best.length) best = {i, k, d2};
    }
  }
  best.length = std::sqrt(std::max(best.length, 0.0));
  return best;
}

double Simplex::volume() const {
  const std::size_t n = dim_;
  if (n == 0) return 0.0;
  std::vector<std::vector<double>> m(n, std::vector<double>(n));
  const auto v0 = vertex(0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto v = vertex(r + 1);
    for (std::size_t c = 0; c < n; ++c) m[r][c] = v[c] - v0[c];
  }
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(m[r][k]) > std::abs(m[pivot][k])) pivot = r;
    }
    if (m[pivot][k] == 0.0) return 0.0;
    if (pivot != k) {
      std::swap(m[pivot], m[k]);
      det = -det;
    }
    det *= m[k][k];
    for (std::size_t r = k + 1; r < n; ++r) {
      const double factor = m[r][k] / m[k][k];
      for (std::size_t c = k; c < n; ++c) m[r][c] -= factor * m[k][c];
    }
  }
  double factorial = 1.0;
  for (std::size_t k = 2; k <= n; ++k) factorial *= static_cast<double>(k);
  return std::abs(det) / factorial;
}

std::pair<double, double> Simplex::coordinate_range(std::size_t j) const {
  double lo = kInf;
  double hi = -kInf;
  for (std::size_t i = 0; i < vertex_count(); ++i) {
    const double x = coords_[i * dim_ + j];
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return {lo, hi};
}

std::vector<std::vector<double>> Simplex::vertices() const {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < vertex_count(); ++i) {
    const auto v = vertex(i);
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

Simplex initial_simplex(double budget, std::size_t n) {
  if (!(budget > 0.0)) throw ValidationError("budget must be > 0");
  if (n == 0) throw ValidationError("initial simplex needs n >= 1");
  return covering_simplex(FeasibleRegion::budget_simplex(n, budget));
}

Simplex covering_simplex(const FeasibleRegion& region) {
  const std::size_t n = region.dimension();
  double reach = 0.0;
  if (region.budget) {
    reach = *region.budget - std::accumulate(region.lower.begin(), region.lower.end(), 0.0);
  } else {
    for (std::size_t j = 0; j < n; ++j) reach += region.upper[j] - region.lower[j];
  }
  std::vector<std::vector<double>> verts(n + 1, region.lower);
  for (std::size_t j = 0; j < n; ++j) verts[j + 1][j] += reach;
  return Simplex(verts);
}

std::pair<Simplex, Simplex> bisect_longest_edge(const Simplex& s) {
  const auto edge = s.longest_edge();
  const std::size_t d = s.dim_;
  std::vector<double> mid(d);
  const auto a = s.vertex(edge.from);
  const auto b = s.vertex(edge.to);
  for (std::size_t j = 0; j < d; ++j) mid[j] = 0.5 * (a[j] + b[j]);

  Simplex left = s;
  Simplex right = s;
  std::copy(mid.begin(), mid.end(), left.coords_.begin() + static_cast<std::ptrdiff_t>(edge.to * d));
  std::copy(mid.begin(), mid.end(),
            right.coords_.begin() + static_cast<std::ptrdiff_t>(edge.from * d));
  return {std::move(left), std::move(right)};
}

// ---------------------------------------------------------------------------
// SumOfRatiosProblem

SumOfRatiosProblem::SumOfRatiosProblem(std::vector<RatioTerm> terms, FeasibleRegion region,
                                       std::optional<Simplex> initial)
    : terms_(std::move(terms)), region_(std::move(region)) {
  const std::size_t n = terms_.size();
  if (n == 0) throw InvalidProblemError("sum-of-ratios problem needs at least one term");
  if (region_.lower.size() != n || region_.upper.size() != n) {
    throw InvalidProblemError("feasible region dimension does not match the term count");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(region_.lower[j] <= region_.upper[j])) throw InvalidProblemError("empty coordinate range");
  }
  if (region_.budget &&
      std::accumulate(region_.lower.begin(), region_.lower.end(), 0.0) > *region_.budget) {
    throw InvalidProblemError("budget is below the sum of lower bounds");
  }

  initial_ = initial ? std::move(*initial) : covering_simplex(region_);
  if (initial_.dimension() != n) throw InvalidProblemError("initial simplex dimension mismatch");
  if (!intersects_region(initial_, region_)) {
    throw InvalidProblemError("initial simplex does not meet the feasible region");
  }

  for (std::size_t j = 0; j < n; ++j) {
    const double lo = region_.lower[j];
    const double hi = region_.coordinate_upper(j);
    const double floor = terms_[j].denominator.min_on(lo, hi);
    if (!(floor > 0.0)) {
      throw InvalidProblemError("denominator of term " + std::to_string(j) +
                                " is not positive on the feasible region");
    }
    denominator_floor_.push_back(floor);
    numerator_convex_.push_back(convex_on(terms_[j].numerator, lo, hi));
    denominator_convex_.push_back(convex_on(terms_[j].denominator, lo, hi));
  }
}

double SumOfRatiosProblem::objective(std::span<const double> x) const {
  double total = 0.0;
  for (std::size_t j = 0; j < terms_.size(); ++j) total += terms_[j](x[j]);
  return total;
}

// ---------------------------------------------------------------------------
// Bounds

bool intersects_region(const Simplex& s, const FeasibleRegion& region) {
  double min_total = kInf;
  for (std::size_t i = 0; i < s.vertex_count(); ++i) {
    const auto v = s.vertex(i);
    min_total = std::min(min_total, std::accumulate(v.begin(), v.end(), 0.0));
  }
  if (region.budget && min_total > *region.budget + 1e-12) return false;
  for (std::size_t j = 0; j < s.dimension(); ++j) {
    const auto [lo, hi] = s.coordinate_range(j);
    if (hi < region.lower[j] - 1e-12 || lo > region.coordinate_upper(j) + 1e-12) return false;
  }
  return true;
}

namespace {

double vertex_tangent_bound(const Simplex& s, const SumOfRatiosProblem& problem) {
  const auto& region = problem.region();
  const std::vector<double> centre = s.centroid();
  double total = 0.0;
  for (std::size_t j = 0; j < problem.dimension(); ++j) {
    const auto& term = problem.terms()[j];
    auto [lo, hi] = s.coordinate_range(j);
    // Coordinate j ranges over at most this interval on S intersected with X.
    lo = std::max(lo, region.lower[j]);
    hi = std::min(hi, region.coordinate_upper(j));
    if (lo > hi) return -kInf;

    double fmax = problem.numerator_convex(j) ? std::max(term.numerator(lo), term.numerator(hi))
                                              : term.numerator.max_on(lo, hi);
    fmax = std::max(fmax, 0.0);

    double gmin;
    if (problem.denominator_convex(j)) {
      const double at = std::clamp(centre[j], lo, hi);
      const double g0 = term.denominator(at);
      const double slope = term.denominator.derivative(at);
      gmin = std::min(g0 + slope * (lo - at), g0 + slope * (hi - at));
    } else {
      gmin = term.denominator.min_on(lo, hi);
    }
    gmin = std::max(gmin, problem.denominator_floor(j));
    if (!(gmin > 0.0)) throw InvalidProblemError("denominator lower bound is not positive");
    total += fmax / gmin;
  }
  return total;
}

struct Interval {
  double lo;
  double hi;
};

Interval operator+(Interval a, Interval b) { return {a.lo + b.lo, a.hi + b.hi}; }

Interval operator*(Interval a, Interval b) {
  const double p[] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

Interval operator*(double k, Interval a) {
  return k >= 0.0 ? Interval{k * a.lo, k * a.hi} : Interval{k * a.hi, k * a.lo};
}

// b must be strictly positive.
Interval operator/(Interval a, Interval b) { return a * Interval{1.0 / b.hi, 1.0 / b.lo}; }

Interval range_of(const Cubic& c, double lo, double hi) { return {c.min_on(lo, hi), c.max_on(lo, hi)}; }

Cubic derivative_of(const Cubic& c) {
  return Cubic{{c.coeffs[1], 2.0 * c.coeffs[2], 3.0 * c.coeffs[3], 0.0}};
}

// Lower bound on (f/g)'' over [lo, hi].
double curvature_floor(const RatioTerm& term, double lo, double hi, double g_floor) {
  const Cubic f1c = derivative_of(term.numerator);
  const Cubic g1c = derivative_of(term.denominator);
  const Interval f = range_of(term.numerator, lo, hi);
  const Interval f1 = range_of(f1c, lo, hi);
  const Interval f2 = range_of(derivative_of(f1c), lo, hi);
  Interval g = range_of(term.denominator, lo, hi);
  g.lo = std::max(g.lo, g_floor);
  const Interval g1 = range_of(g1c, lo, hi);
  const Interval g2 = range_of(derivative_of(g1c), lo, hi);
  const Interval g_sq = g * g;
  // r'' = f''/g - 2 f' g'/g^2 - f g''/g^2 + 2 f g'^2 / g^3
  const Interval r2 = f2 / g + (-2.0) * (f1 * g1) / g_sq + (-1.0) * (f * g2) / g_sq +
                      2.0 * (f * (g1 * g1)) / (g_sq * g);
  return r2.lo;
}

double lagrangian_bound(const Simplex& s, const SumOfRatiosProblem& problem) {
  const auto& region = problem.region();
  const std::size_t n = problem.dimension();
  // The coordinate sum over S intersected with X lies in [sum_lo, sum_hi].
  double sum_lo = kInf;
  double sum_hi = -kInf;
  for (std::size_t i = 0; i < s.vertex_count(); ++i) {
    const auto v = s.vertex(i);
    const double t = std::accumulate(v.begin(), v.end(), 0.0);
    sum_lo = std::min(sum_lo, t);
    sum_hi = std::max(sum_hi, t);
  }
  sum_lo = std::max(sum_lo, std::accumulate(region.lower.begin(), region.lower.end(), 0.0));
  if (region.budget) sum_hi = std::min(sum_hi, *region.budget);

  struct Piece {
    double lo, hi, r_lo, r_hi, bump;
  };
  std::vector<Piece> pieces(n);
  std::vector<double> betas{0.0};
  for (std::size_t j = 0; j < n; ++j) {
    const auto& term = problem.terms()[j];
    auto [lo, hi] = s.coordinate_range(j);
    lo = std::max(lo, region.lower[j]);
    hi = std::min(hi, region.coordinate_upper(j));
    if (lo > hi) return -kInf;
    Piece& pc = pieces[j];
    pc.lo = lo;
    pc.hi = hi;
    pc.r_lo = term(lo);
    pc.r_hi = term(hi);
    // h = r - beta x satisfies h'' >= -K, so on [lo, hi] it stays below the
    // chord of its endpoint values plus K (hi - lo)^2 / 8.
    const double k = std::max(0.0, -curvature_floor(term, lo, hi, problem.denominator_floor(j)));
    pc.bump = k * (hi - lo) * (hi - lo) / 8.0;
    if (hi > lo) betas.push_back((pc.r_hi - pc.r_lo) / (hi - lo));
  }

  double best = kInf;
  for (double beta : betas) {
    double total = beta * (beta >= 0.0 ? sum_hi : sum_lo);
    for (const Piece& pc : pieces) {
      total += std::max(pc.r_lo - beta * pc.lo, pc.r_hi - beta * pc.hi) + pc.bump;
    }
    if (std::isfinite(total)) best = std::min(best, total);
  }
  return best;
}

}  // namespace

double upper_bound(const Simplex& s, const SumOfRatiosProblem& problem, BoundMode mode) {
  const double base = vertex_tangent_bound(s, problem);
  if (mode == BoundMode::kVertexTangent || base == -kInf) return base;
  return std::min(base, lagrangian_bound(s, problem));
}

LowerBound lower_bound(const Simplex& s, const SumOfRatiosProblem& problem) {
  LowerBound best{-kInf, {}};
  auto consider = [&](std::span<const double> candidate) {
    std::vector<double> x = problem.region().project(candidate);
    const double value = problem.objective(x);
    if (value > best.value) best = {value, std::move(x)};
  };
  for (std::size_t i = 0; i < s.vertex_count(); ++i) consider(s.vertex(i));
  const auto centre = s.centroid();
  consider(centre);
  return best;
}

// ---------------------------------------------------------------------------
// Search

namespace {

struct PoolEntry {
  Simplex simplex;
  double ub;
  double edge;
  bool alive;
};

struct HeapKey {
  double primary;
  double secondary;
  std::size_t id;
};

struct HeapOrder {
  // Max-heap on (primary, secondary), then the oldest node first.
  bool operator()(const HeapKey& a, const HeapKey& b) const {
    if (a.primary != b.primary) return a.primary < b.primary;
    if (a.secondary != b.secondary) return a.secondary < b.secondary;
    return a.id > b.id;
  }
};

}  // namespace

double polish_point(const SumOfRatiosProblem& problem, std::vector<double>& x, std::size_t max_steps) {
  const auto& region = problem.region();
  const std::size_t n = problem.dimension();
  double value = problem.objective(x);
  double step = region.scale();
  std::vector<double> grad(n);
  std::vector<double> trial(n);
  for (std::size_t k = 0; k < max_steps && step > 1e-15 * region.scale(); ++k) {
    for (std::size_t j = 0; j < n; ++j) grad[j] = problem.terms()[j].derivative(x[j]);
    for (std::size_t j = 0; j < n; ++j) trial[j] = x[j] + step * grad[j];
    std::vector<double> y = region.project(trial);
    double ascent = 0.0;
    for (std::size_t j = 0; j < n; ++j) ascent += grad[j] * (y[j] - x[j]);
    const double v = problem.objective(y);
    if (ascent > 0.0 && v > value + 1e-4 * ascent) {
      x = std::move(y);
      value = v;
      step *= 2.0;
    } else {
      step *= 0.5;
    }
  }
  return value;
}

BnBReport branch_and_bound(const SumOfRatiosProblem& problem, const BnBOptions& options) {
  if (!(options.rho > 0.0)) throw ValidationError("rho must be > 0");
  const auto& region = problem.region();
  const double floor = options.degeneracy_floor * region.scale();

  BnBReport report;
  double incumbent = -kInf;
  std::vector<double> incumbent_point;
  auto offer = [&](double value, std::vector<double> point) {
    if (value > incumbent) {
      incumbent = value;
      incumbent_point = std::move(point);
    }
  };

  if (!options.warm_start.empty()) {
    if (options.warm_start.size() != problem.dimension()) {
      throw ValidationError("warm start has the wrong dimension");
    }
    auto x = region.project(options.warm_start);
    const double v = problem.objective(x);
    offer(v, std::move(x));
  }

  std::vector<PoolEntry> pool;
  std::priority_queue<HeapKey, std::vector<HeapKey>, HeapOrder> heap;
  std::set<std::pair<double, std::size_t>> by_bound;
  double retired_ub = -kInf;

  auto push = [&](Simplex s, double ub) {
    const std::size_t id = pool.size();
    const double edge = s.longest_edge().length;
    pool.push_back({std::move(s), ub, edge, true});
    if (options.selection == NodeSelection::kLongestEdge) {
      heap.push({edge, ub, id});
    } else {
      heap.push({ub, edge, id});
    }
    by_bound.insert({ub, id});
  };
  auto record_pruned = [&](const Simplex& s, double ub) {
    ++report.nodes_pruned;
    if (options.keep_nodes) report.pruned.push_back({s, ub, incumbent});
  };

  {
    Simplex root = problem.initial();
    const double ub = upper_bound(root, problem, options.bound);
    auto lb = lower_bound(root, problem);
    offer(lb.value, std::move(lb.point));
    ++report.nodes_explored;
    if (ub > incumbent) {
      push(std::move(root), ub);
    } else {
      record_pruned(root, ub);
    }
  }

  double global_ub = kInf;
  while (true) {
    while (!by_bound.empty() && by_bound.begin()->first <= incumbent) {
      const std::size_t id = by_bound.begin()->second;
      by_bound.erase(by_bound.begin());
      pool[id].alive = false;
      record_pruned(pool[id].simplex, pool[id].ub);
      pool[id].simplex = Simplex();
    }

    const double open_ub = by_bound.empty() ? -kInf : by_bound.rbegin()->first;
    global_ub = std::max({open_ub, retired_ub, incumbent});
    if (options.record_trace) {
      report.trace.push_back({report.iterations, global_ub, incumbent, by_bound.size()});
    }
    if (global_ub - incumbent <= options.rho * std::abs(global_ub)) {
      report.converged = true;
      break;
    }
    if (report.iterations >= options.iteration_cap || report.nodes_explored >= options.node_cap) {
      break;
    }

    std::size_t id = 0;
    do {
      id = heap.top().id;
      heap.pop();
    } while (!pool[id].alive);
    ++report.iterations;
    by_bound.erase({pool[id].ub, id});
    pool[id].alive = false;
    Simplex parent = std::move(pool[id].simplex);
    const double parent_ub = pool[id].ub;

    if (pool[id].edge < floor) {
      retired_ub = std::max(retired_ub, parent_ub);
      ++report.leaves_retired;
      continue;
    }

    auto [left, right] = bisect_longest_edge(parent);
    for (Simplex* child : {&left, &right}) {
      ++report.nodes_explored;
      if (!intersects_region(*child, region)) {
        record_pruned(*child, -kInf);
        continue;
      }
      const double ub = std::min(upper_bound(*child, problem, options.bound), parent_ub);
      auto lb = lower_bound(*child, problem);
      offer(lb.value, std::move(lb.point));
      if (ub > incumbent) {
        push(std::move(*child), ub);
      } else {
        record_pruned(*child, ub);
      }
    }
  }

  if (options.polish && !incumbent_point.empty()) {
    incumbent = polish_point(problem, incumbent_point);
    global_ub = std::max(global_ub, incumbent);
  }
  report.best_point = incumbent_point;
  report.lower_bound = incumbent;
  report.upper_bound = global_ub;
  if (options.keep_nodes) {
    for (const auto& [ub, id] : by_bound) {
      const auto& e = pool[id];
      auto lb = lower_bound(e.simplex, problem);
      report.open_nodes.push_back({e.simplex, e.ub, lb.value, std::move(lb.point)});
    }
  }
  return report;
}

}  // namespace exhaust
