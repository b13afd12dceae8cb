#include "exhaust/worker_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "exhaust/errors.hpp"

namespace exhaust {

namespace {

void require_alpha(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ValidationError("sampling rate alpha must be finite and >= 0");
  }
}

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError(std::string(name) + " must lie in [0, 1]");
  }
}

}  // namespace

std::string_view state_name(State s) {
  switch (s) {
    case State::kS1: return "s1";
    case State::kS2: return "s2";
    case State::kS3: return "s3";
    case State::kS1x: return "s1x";
    case State::kS2x: return "s2x";
  }
  return "?";
}

std::string_view mode_name(AssignmentMode mode) {
  return mode == AssignmentMode::kStrict ? "strict" : "moderate";
}

std::optional<AssignmentMode> parse_mode(std::string_view text) {
  if (text == "strict") return AssignmentMode::kStrict;
  if (text == "moderate") return AssignmentMode::kModerate;
  return std::nullopt;
}

WorkerParams::WorkerParams(double lambda, double mu, double ps, StabilityCheck check)
    : lambda_(lambda), mu_(mu), ps_(ps), check_(check) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be > 0");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("mu must be > 0");
  require_probability(ps, "ps");
  if (check == StabilityCheck::kEnforce && lambda < mu) {
    std::ostringstream os;
    os << "lambda >= mu required (got lambda=" << lambda << ", mu=" << mu
       << "); pass allow-unstable to override";
    throw ValidationError(os.str());
  }
}

WorkerParams WorkerParams::with_ps(double ps) const { return WorkerParams(lambda_, mu_, ps, check_); }

StationaryDistribution::StationaryDistribution(const std::array<double, kStateCount>& probs)
    : probs_(probs) {
  double total = 0.0;
  for (double& v : probs_) {
    if (!std::isfinite(v) || v < -1e-14) {
      throw ValidationError("stationary distribution has a negative or non-finite entry");
    }
    v = std::max(v, 0.0);
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ValidationError("stationary distribution does not sum to one");
  }
}

GeneratorMatrix::GeneratorMatrix(const Rates& rates) : rates_(rates) {
  for (std::size_t i = 0; i < kStateCount; ++i) {
    double off = 0.0;
    double scale = 1.0;
    for (std::size_t j = 0; j < kStateCount; ++j) {
      if (i == j) continue;
      if (!(rates_[i][j] >= 0.0) || !std::isfinite(rates_[i][j])) {
        throw ValidationError("generator off-diagonal rates must be finite and >= 0");
      }
      off += rates_[i][j];
      scale = std::max(scale, rates_[i][j]);
    }
    if (std::abs(off + rates_[i][i]) > 1e-12 * scale) {
      throw ValidationError("generator rows must sum to zero");
    }
  }
}

Policy Policy::strict(std::vector<double> alpha) {
  Policy policy;
  policy.p.assign(alpha.size(), 0.0);
  policy.alpha = std::move(alpha);
  return policy;
}

void Policy::validate(std::size_t workers, double budget) const {
  if (alpha.size() != workers || p.size() != workers) {
    throw ValidationError("policy length does not match the worker count");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < workers; ++i) {
    require_alpha(alpha[i]);
    require_probability(p[i], "assignment probability p");
    total += alpha[i];
  }
  if (total > budget + 1e-9) throw ValidationError("policy exceeds the sampling budget");
}

GeneratorMatrix build_generator(const WorkerParams& w, double alpha, double p,
                                AssignmentMode mode) {
  require_alpha(alpha);
  require_probability(p, "assignment probability p");
  const double l = w.lambda();
  const double m = w.mu();
  const double ap = mode == AssignmentMode::kModerate ? alpha * p : 0.0;

  GeneratorMatrix::Rates q{};
  auto set = [&q](State from, State to, double r) { q[index(from)][index(to)] = r; };
  set(State::kS1, State::kS2, l);
  set(State::kS2, State::kS3, l);
  set(State::kS2, State::kS1, m);
  set(State::kS2, State::kS1x, ap);
  set(State::kS3, State::kS2, m);
  set(State::kS3, State::kS1x, alpha);
  set(State::kS1x, State::kS2x, m);
  set(State::kS2x, State::kS3, m);
  set(State::kS2x, State::kS1x, l + ap);
  for (std::size_t i = 0; i < kStateCount; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < kStateCount; ++j) {
      if (j != i) off += q[i][j];
    }
    q[i][i] = -off;
  }
  return GeneratorMatrix(q);
}

StationaryDistribution stationary_generic(const GeneratorMatrix& generator,
                                          StationaryDiagnostics* diagnostics) {
  constexpr std::size_t n = kStateCount;
  using Matrix = std::array<std::array<double, n>, n>;
  const auto& q = generator.rates();

  // Row j of the system is column j of Q (balance of state j); the last one is
  // replaced by the normalization.
  Matrix a{};
  double scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      a[j][i] = (j + 1 == n) ? 1.0 : q[i][j];
      scale = std::max(scale, std::abs(a[j][i]));
    }
  }
  const Matrix original = a;

  // LU with partial pivoting; perm records the row order.
  std::array<std::size_t, n> perm{};
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(a[r][k]) > std::abs(a[pivot][k])) pivot = r;
    }
    if (std::abs(a[pivot][k]) <= 1e-14 * scale) {
      throw DegenerateChainError("generator has no unique stationary distribution");
    }
    std::swap(a[k], a[pivot]);
    std::swap(perm[k], perm[pivot]);
    for (std::size_t r = k + 1; r < n; ++r) {
      a[r][k] /= a[k][k];
      for (std::size_t c = k + 1; c < n; ++c) a[r][c] -= a[r][k] * a[k][c];
    }
  }

  auto solve = [&](const std::array<double, n>& rhs) {
    std::array<double, n> x{};
    for (std::size_t i = 0; i < n; ++i) {
      double s = rhs[perm[i]];
      for (std::size_t c = 0; c < i; ++c) s -= a[i][c] * x[c];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
      x[i] = s / a[i][i];
    }
    return x;
  };

  std::array<double, n> rhs{};
  rhs[n - 1] = 1.0;
  std::array<double, n> pi = solve(rhs);

  if (diagnostics != nullptr) {
    double norm = 0.0;
    for (const auto& row : original) {
      double s = 0.0;
      for (double v : row) s += std::abs(v);
      norm = std::max(norm, s);
    }
    // Infinity norm of the inverse, built column by column.
    std::array<double, n> row_abs{};
    for (std::size_t c = 0; c < n; ++c) {
      std::array<double, n> e{};
      e[c] = 1.0;
      const auto col = solve(e);
      for (std::size_t r = 0; r < n; ++r) row_abs[r] += std::abs(col[r]);
    }
    const double inv_norm = *std::max_element(row_abs.begin(), row_abs.end());
    diagnostics->condition_estimate = norm * inv_norm;
    diagnostics->ill_conditioned = diagnostics->condition_estimate > kConditionWarning;
    double residual = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += pi[i] * q[i][j];
      residual = std::max(residual, std::abs(s));
    }
    diagnostics->residual = residual;
  }

  for (double& v : pi) {
    if (v < 0.0 && v > -1e-14) v = 0.0;
  }
  return StationaryDistribution(pi);
}

StationaryDistribution stationary_strict_closed_form(const WorkerParams& w, double alpha) {
  require_alpha(alpha);
  const double l = w.lambda();
  const double m = w.mu();
  const double l2 = l * l;
  const double m2 = m * m;
  const double k = alpha * l2 * l + l2 * m2 + 2.0 * alpha * l2 * m + l * m2 * m + m2 * m2;
  return StationaryDistribution({m2 * m2 / k, l * m2 * m / k, l2 * m2 / k,
                                 alpha * l2 * (l + m) / k, alpha * l2 * m / k});
}

double strict_utility(const WorkerParams& w, double alpha) {
  require_alpha(alpha);
  const double l = w.lambda();
  const double m = w.mu();
  const double a = l * l * m * m + l * m * m * m + m * m * m * m;
  const double b = l * l * l + 2.0 * l * l * m;
  return alpha * l * l * m * m / (a + b * alpha);
}

StationaryDistribution moderate_stationary(const WorkerParams& w, double alpha, double p) {
  return stationary_generic(build_generator(w, alpha, p, AssignmentMode::kModerate));
}

double moderate_utility(const WorkerParams& w, double alpha, double p) {
  require_alpha(alpha);
  require_probability(p, "assignment probability p");
  if (alpha == 0.0) return 0.0;
  const StationaryDistribution pi = moderate_stationary(w, alpha, p);
  return alpha * pi[State::kS3] + w.ps() * alpha * p * (pi[State::kS2x] + pi[State::kS2]);
}

RatioTerm ratio_coefficients(const WorkerParams& w, double p) {
  require_probability(p, "assignment probability p");
  const double m = w.mu();
  const double r = w.lambda() / m;
  const double ps = w.ps();
  RatioTerm t;
  t.numerator.coeffs = {0.0, r * r + r * p * ps, r * p / m * (r * ps + p * ps + 1.0),
                        r * p * p * ps / (m * m)};
  t.denominator.coeffs = {1.0 + r + r * r, r / m * (r * r + r * p + 2.0 * r + 3.0 * p),
                          r * p / (m * m) * (2.0 * r + p + 2.0), r * p * p / (m * m * m)};
  return t;
}

RatioTerm ratio_coefficients_in_p(const WorkerParams& w, double alpha) {
  require_alpha(alpha);
  const double l = w.lambda();
  const double m = w.mu();
  const double r = l / m;
  const double ps = w.ps();
  const double a = alpha;
  const double m3 = m * m * m;
  const double m4 = m3 * m;
  RatioTerm t;
  t.numerator.coeffs = {a * r * r, a * l * (a * l * ps + a * m + m * m * ps) / m3,
                        a * a * l * ps * (a + m) / m3, 0.0};
  t.denominator.coeffs = {a * r * r * (r + 2.0) / m + r * r + r + 1.0,
                          a * l * (2.0 * a * l + 2.0 * a * m + l * m + 3.0 * m * m) / m4,
                          a * a * l * (a + m) / m4, 0.0};
  return t;
}

double ratio_discrepancy(const WorkerParams& w, double alpha, double p) {
  return std::abs(ratio_coefficients(w, p)(alpha) - moderate_utility(w, alpha, p));
}

}  // namespace exhaust
