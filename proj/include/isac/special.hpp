#pragma once

// Gaussian tail probability and the exponential integral E1.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace isac {

/// Gaussian Q-function, Q(x) = P(Z > x) for Z ~ N(0, 1).
inline double q_function(double x) {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

namespace detail {

// E1(z) = -gamma - ln z - sum_{k>=1} (-z)^k / (k * k!), used for 0 < z < 1.
inline double e1_series(double z) {
  double sum = 0.0;
  double term = 1.0;  // (-z)^k / k!
  for (int k = 1; k < 200; ++k) {
    term *= -z / k;
    const double contrib = term / k;
    sum += contrib;
    if (std::abs(contrib) < 1e-17 * std::abs(sum)) break;
  }
  return -std::numbers::egamma - std::log(z) - sum;
}

// e^z E1(z) by the modified Lentz evaluation of
//   1 / (z + 1 - 1^2 / (z + 3 - 2^2 / (z + 5 - ...))), used for z >= 1.
inline double scaled_e1_continued_fraction(double z) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double b = z + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double delta = c * d;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) return h;
  }
  throw std::runtime_error("exp_integral_e1: continued fraction did not converge");
}

}  // namespace detail

/// Exponential integral E1(z) = int_z^inf e^{-t}/t dt for z > 0.
inline double exp_integral_e1(double z) {
  if (!(z > 0.0)) throw std::invalid_argument("exp_integral_e1: z must be positive");
  if (z < 1.0) return detail::e1_series(z);
  return std::exp(-z) * detail::scaled_e1_continued_fraction(z);
}

/// e^z E1(z), evaluated without forming e^z so it stays finite for large z.
inline double scaled_exp_integral_e1(double z) {
  if (!(z > 0.0)) throw std::invalid_argument("scaled_exp_integral_e1: z must be positive");
  if (z < 1.0) return std::exp(z) * detail::e1_series(z);
  return detail::scaled_e1_continued_fraction(z);
}

}  // namespace isac
