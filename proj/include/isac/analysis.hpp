#pragma once

// Closed-form discriminant-gain (DG) and error-probability expressions.

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "isac/special.hpp"

namespace isac {

/// Pairwise-union error bound (L - 1) Q(sqrt(DG_min / 2)).
///
/// The value is returned as computed even when it exceeds 1; `valid` is false
/// in that case so callers can decide how to report it.
struct ErrorBound {
  double dg_min = 0.0;
  int num_classes = 2;
  double bound_value = 0.0;
  bool valid = true;
};

/// Bayes error of two equiprobable Gaussians separated by discriminant gain `dg`.
inline double binary_error_probability(double dg) {
  if (!(dg >= 0.0)) throw std::invalid_argument("binary_error_probability: dg must be >= 0");
  return q_function(std::sqrt(dg / 2.0));
}

inline ErrorBound union_lower_bound(double dg_min, int num_classes) {
  if (num_classes < 2) throw std::invalid_argument("union_lower_bound: need at least 2 classes");
  if (!(dg_min >= 0.0)) throw std::invalid_argument("union_lower_bound: dg_min must be >= 0");
  ErrorBound out;
  out.dg_min = dg_min;
  out.num_classes = num_classes;
  out.bound_value = (num_classes - 1) * q_function(std::sqrt(dg_min / 2.0));
  out.valid = out.bound_value <= 1.0;
  return out;
}

/// Mahalanobis distance under a diagonal covariance: sum_m gap_m^2 / var_m.
inline double multivariate_dg(std::span<const double> squared_gaps, std::span<const double> variances) {
  if (squared_gaps.size() != variances.size())
    throw std::invalid_argument("multivariate_dg: length mismatch (" + std::to_string(squared_gaps.size()) +
                                " gaps vs " + std::to_string(variances.size()) + " variances)");
  double total = 0.0;
  for (std::size_t m = 0; m < variances.size(); ++m) {
    if (!(variances[m] > 0.0)) throw std::invalid_argument("multivariate_dg: variances must be positive");
    total += squared_gaps[m] / variances[m];
  }
  return total;
}

namespace detail {

// 1 - z e^z E1(z) with z = 1/rho, via sum_{k>=1} (-1)^{k+1} k! rho^k truncated
// at its smallest term. Valid for small rho only.
inline double dg_fraction_asymptotic(double rho) {
  double term = 1.0;
  double sum = 0.0;
  double prev_mag = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 1000; ++k) {
    term *= -k * rho;
    const double mag = std::abs(term);
    if (mag >= prev_mag) break;
    sum -= term;
    prev_mag = mag;
  }
  return sum;
}

}  // namespace detail

/// Fraction of DG_max retained on average over |h|^2 ~ Exp(1), i.e.
/// 1 - (1/rho) e^{1/rho} E1(1/rho).
inline double average_dg_fraction(double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("average_dg_closed_form: rho must be positive");
  if (rho < 1e-2) return detail::dg_fraction_asymptotic(rho);
  const double z = 1.0 / rho;
  return 1.0 - z * scaled_exp_integral_e1(z);
}

/// Expected single-carrier DG under Rayleigh fading, where
/// rho = sigma^2 P_c / (sigma_w^2 nu^2) is the equivalent receive SNR.
inline double average_dg_closed_form(double dg_max, double rho) {
  if (!(dg_max >= 0.0)) throw std::invalid_argument("average_dg_closed_form: dg_max must be >= 0");
  return dg_max * average_dg_fraction(rho);
}

}  // namespace isac
