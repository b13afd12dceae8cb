#include "exhaust/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace exhaust {

namespace {

// Real roots of the derivative 3 c3 x^2 + 2 c2 x + c1 lying strictly inside (lo, hi).
std::vector<double> interior_critical_points(const Cubic& p, double lo, double hi) {
  const double a = 3.0 * p.coeffs[3];
  const double b = 2.0 * p.coeffs[2];
  const double c = p.coeffs[1];
  std::vector<double> roots;
  if (a == 0.0) {
    if (b != 0.0) roots.push_back(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      // Numerically stable pair.
      const double q = -0.5 * (b + std::copysign(sq, b));
      if (q != 0.0) {
        roots.push_back(q / a);
        roots.push_back(c / q);
      } else {
        roots.push_back(0.0);
      }
    }
  }
  std::vector<double> inside;
  for (double r : roots) {
    if (r > lo && r < hi) inside.push_back(r);
  }
  return inside;
}

}  // namespace

double Cubic::min_on(double lo, double hi) const {
  double best = std::min((*this)(lo), (*this)(hi));
  for (double r : interior_critical_points(*this, lo, hi)) best = std::min(best, (*this)(r));
  return best;
}

double Cubic::max_on(double lo, double hi) const {
  double best = std::max((*this)(lo), (*this)(hi));
  for (double r : interior_critical_points(*this, lo, hi)) best = std::max(best, (*this)(r));
  return best;
}

bool Cubic::nonnegative_coefficients() const {
  return std::all_of(coeffs.begin(), coeffs.end(), [](double c) { return c >= 0.0; });
}

}  // namespace exhaust
