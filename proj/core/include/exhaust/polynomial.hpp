#pragma once

#include <array>
#include <cstddef>

namespace exhaust {

/// Polynomial of degree at most three, coefficients in increasing power order.
struct Cubic {
  std::array<double, 4> coeffs{};

  double operator()(double x) const {
    return ((coeffs[3] * x + coeffs[2]) * x + coeffs[1]) * x + coeffs[0];
  }

  double derivative(double x) const {
    return (3.0 * coeffs[3] * x + 2.0 * coeffs[2]) * x + coeffs[1];
  }

  double second_derivative(double x) const { return 6.0 * coeffs[3] * x + 2.0 * coeffs[2]; }

  /// Exact minimum over [lo, hi]: endpoints plus interior critical points.
  double min_on(double lo, double hi) const;
  double max_on(double lo, double hi) const;

  /// True when every coefficient is nonnegative, which makes the cubic
  /// nondecreasing and convex on x >= 0.
  bool nonnegative_coefficients() const;
};

/// A single fractional term f(x) / g(x) in one scalar variable.
struct RatioTerm {
  Cubic numerator;
  Cubic denominator;

  double operator()(double x) const { return numerator(x) / denominator(x); }

  double derivative(double x) const {
    const double g = denominator(x);
    return (numerator.derivative(x) * g - numerator(x) * denominator.derivative(x)) / (g * g);
  }
};

}  // namespace exhaust
