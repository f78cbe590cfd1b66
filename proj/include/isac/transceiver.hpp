#pragma once

// MSE-optimal and DG-optimal precoder / receive-scaling designs.
//
// Both multi-carrier optima share the water-filling form
//
//   b_n^2 = (c_n / sqrt(lambda) - sigma_w^2 / s_n)^+ / |h_n|^2
//
// where s_n is the effective feature variance and
//   c_n = sigma_w |h_n| / nu_n                       (MSE criterion)
//   c_n = sigma_w |h_n| delta_n / (nu_n s_n)         (DG criterion)
// and the water level lambda is set so that sum_n b_n^2 nu_n^2 = P_c.

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "isac/errors.hpp"

namespace isac {

/// Subcarrier gains below this are treated as carrying nothing.
inline constexpr double kMinUsableGain = 1e-12;

/// Channel magnitudes |h_n| (phase pre-compensated) and receiver noise sigma_w^2.
class ChannelRealization {
 public:
  ChannelRealization(std::vector<double> gains, double noise_power)
      : gains_(std::move(gains)), noise_power_(noise_power) {
    if (gains_.empty()) throw std::invalid_argument("ChannelRealization: need at least one subcarrier");
    for (double g : gains_)
      if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("ChannelRealization: gains must be >= 0");
    if (!(noise_power > 0.0) || !std::isfinite(noise_power))
      throw std::invalid_argument("ChannelRealization: noise power must be positive");
  }

  std::span<const double> gains() const { return gains_; }
  double gain(std::size_t n) const { return gains_[n]; }
  double noise_power() const { return noise_power_; }
  std::size_t size() const { return gains_.size(); }

 private:
  std::vector<double> gains_;
  double noise_power_;
};

enum class Criterion { mse, dg };

inline const char* to_string(Criterion c) { return c == Criterion::mse ? "mse" : "dg"; }

enum class DesignStatus {
  ok,
  no_power,       // P_c = 0: nothing transmitted
  uninformative,  // DG criterion with no usable informative subcarrier
};

struct TransceiverDesign {
  std::vector<double> precoders;  // b_n >= 0
  std::vector<double> scalings;   // a_n
  double water_level = 0.0;       // lambda; 0 when no subcarrier is active
  Criterion criterion = Criterion::mse;
  DesignStatus status = DesignStatus::ok;

  std::size_t active_count() const {
    std::size_t k = 0;
    for (double b : precoders) k += b > 0.0;
    return k;
  }
};

/// Wiener receive scaling h b nu^2 / (|h b|^2 nu^2 + sigma_w^2).
inline double mmse_scaling(double gain, double precoder, double signal_power, double noise_power) {
  if (!(noise_power > 0.0)) throw std::invalid_argument("mmse_scaling: noise power must be positive");
  const double hb = gain * precoder;
  return hb * signal_power / (hb * hb * signal_power + noise_power);
}

struct SingleCarrierMseDesign {
  double precoder = 0.0;
  double scaling = 0.0;
  double mse = 0.0;
};

/// Full-power phase-matched precoder sqrt(P_c / nu^2) with its Wiener scaling.
inline SingleCarrierMseDesign single_carrier_mse_design(double gain, double second_moment, double noise_power,
                                                        double comm_power) {
  if (!(comm_power > 0.0)) throw std::invalid_argument("single_carrier_mse_design: P_c must be positive");
  if (!(second_moment > 0.0)) throw std::invalid_argument("single_carrier_mse_design: nu^2 must be positive");
  if (!(noise_power > 0.0)) throw std::invalid_argument("single_carrier_mse_design: noise power must be positive");
  SingleCarrierMseDesign d;
  d.precoder = std::sqrt(comm_power / second_moment);
  d.scaling = mmse_scaling(gain, d.precoder, second_moment, noise_power);
  d.mse = second_moment * noise_power / (gain * gain * comm_power + noise_power);
  return d;
}

/// DG reached by the single-carrier optimum; identical under both criteria.
inline double single_carrier_dg(double gain, double comm_power, double squared_gap, double class_variance,
                                double second_moment, double noise_power) {
  if (!(class_variance > 0.0)) throw std::invalid_argument("single_carrier_dg: class variance must be positive");
  const double received = gain * gain * comm_power;
  const double denom = received + noise_power * second_moment / class_variance;
  if (received == 0.0) return 0.0;
  return received * (squared_gap / class_variance) / denom;
}

namespace detail {

struct WaterFillProblem {
  std::span<const double> gains;
  std::span<const double> second_moments;  // nu_n^2
  std::span<const double> variances;       // effective s_n
  std::vector<double> slopes;              // c_n, zero when the subcarrier is excluded
  double noise_power;
  double comm_power;
};

inline double allocated_power(const WaterFillProblem& p, double level) {
  const double t = 1.0 / std::sqrt(level);
  double total = 0.0;
  for (std::size_t n = 0; n < p.slopes.size(); ++n) {
    if (p.slopes[n] == 0.0) continue;
    const double x = p.slopes[n] * t - p.noise_power / p.variances[n];
    if (x > 0.0) total += p.second_moments[n] * x / (p.gains[n] * p.gains[n]);
  }
  return total;
}

// Exact level for the active set implied by `level`, if that set is self-consistent.
inline bool refine_level(const WaterFillProblem& p, double& level) {
  const double t0 = 1.0 / std::sqrt(level);
  double num = p.comm_power;
  double den = 0.0;
  std::vector<bool> active(p.slopes.size(), false);
  for (std::size_t n = 0; n < p.slopes.size(); ++n) {
    if (p.slopes[n] == 0.0) continue;
    const double d = p.noise_power / p.variances[n];
    if (p.slopes[n] * t0 - d > 0.0) {
      active[n] = true;
      const double w = p.second_moments[n] / (p.gains[n] * p.gains[n]);
      num += w * d;
      den += w * p.slopes[n];
    }
  }
  if (den <= 0.0) return false;
  const double t = num / den;
  for (std::size_t n = 0; n < p.slopes.size(); ++n) {
    if (p.slopes[n] == 0.0) continue;
    const bool on = p.slopes[n] * t - p.noise_power / p.variances[n] > 0.0;
    if (on != active[n]) return false;
  }
  level = 1.0 / (t * t);
  return true;
}

inline TransceiverDesign solve_water_fill(const WaterFillProblem& p, Criterion criterion) {
  constexpr int kMaxIterations = 200;
  constexpr double kResidualTolerance = 1e-12;

  const std::size_t n_sub = p.slopes.size();
  TransceiverDesign design;
  design.criterion = criterion;
  design.precoders.assign(n_sub, 0.0);
  design.scalings.assign(n_sub, 0.0);

  // Bracket the level: allocated_power is continuous and decreasing in lambda.
  double lo = 1.0;
  double hi = 1.0;
  for (int i = 0; allocated_power(p, hi) > p.comm_power; ++i) {
    if (i > 2000) throw NumericalError("water-filling: could not bracket the water level from above");
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; allocated_power(p, lo) < p.comm_power; ++i) {
    if (i > 2000) throw NumericalError("water-filling: could not bracket the water level from below");
    hi = lo;
    lo *= 0.5;
  }

  double level = 0.5 * (lo + hi);
  bool converged = false;
  int iter = 0;
  for (; iter < kMaxIterations; ++iter) {
    level = std::sqrt(lo) * std::sqrt(hi);
    const double residual = allocated_power(p, level) - p.comm_power;
    if (std::abs(residual) <= kResidualTolerance || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      converged = true;
      break;
    }
    if (residual > 0.0)
      lo = level;
    else
      hi = level;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "water-filling: bisection did not converge after " << kMaxIterations << " iterations (bracket [" << lo
        << ", " << hi << "], P_c = " << p.comm_power << ", residual "
        << allocated_power(p, level) - p.comm_power << ")";
    throw NumericalError(msg.str());
  }
  refine_level(p, level);

  const double t = 1.0 / std::sqrt(level);
  for (std::size_t n = 0; n < n_sub; ++n) {
    if (p.slopes[n] == 0.0) continue;
    const double x = p.slopes[n] * t - p.noise_power / p.variances[n];
    if (x > 0.0) {
      design.precoders[n] = std::sqrt(x) / p.gains[n];
      design.scalings[n] = mmse_scaling(p.gains[n], design.precoders[n], p.variances[n], p.noise_power);
    }
  }
  design.water_level = level;
  return design;
}

inline void check_lengths(const ChannelRealization& channel, std::span<const double> a, std::span<const double> b,
                          const char* who) {
  if (a.size() != channel.size() || b.size() != channel.size())
    throw std::invalid_argument(std::string(who) + ": per-subcarrier vectors must match the channel length " +
                                std::to_string(channel.size()));
  for (std::size_t n = 0; n < channel.size(); ++n)
    if (!(a[n] > 0.0) || !(b[n] > 0.0))
      throw std::invalid_argument(std::string(who) + ": second moments and variances must be positive");
}

inline bool any_usable(const ChannelRealization& channel) {
  for (double g : channel.gains())
    if (g >= kMinUsableGain) return true;
  return false;
}

}  // namespace detail

/// MSE-optimal water-filling over the subcarriers of `channel`.
///
/// `second_moments` are nu_n^2 (power normalisation) and `variances` the
/// effective per-class variances that set the Wiener scaling and threshold.
inline TransceiverDesign waterfill_mse(const ChannelRealization& channel, std::span<const double> second_moments,
                                       std::span<const double> variances, double comm_power) {
  detail::check_lengths(channel, second_moments, variances, "waterfill_mse");
  if (!(comm_power > 0.0)) throw std::invalid_argument("waterfill_mse: P_c must be positive");
  if (!detail::any_usable(channel)) throw std::invalid_argument("waterfill_mse: all channel gains are zero");

  detail::WaterFillProblem p{channel.gains(), second_moments, variances, {}, channel.noise_power(), comm_power};
  const double sigma_w = std::sqrt(channel.noise_power());
  p.slopes.resize(channel.size(), 0.0);
  for (std::size_t n = 0; n < channel.size(); ++n)
    if (channel.gain(n) >= kMinUsableGain) p.slopes[n] = sigma_w * channel.gain(n) / std::sqrt(second_moments[n]);
  return detail::solve_water_fill(p, Criterion::mse);
}

/// DG-optimal water-filling. Subcarriers with zero mean gap never get power;
/// if no subcarrier is informative the all-zero design is returned with
/// status `uninformative`.
inline TransceiverDesign waterfill_dg(const ChannelRealization& channel, std::span<const double> second_moments,
                                      std::span<const double> variances, std::span<const double> squared_gaps,
                                      double comm_power) {
  detail::check_lengths(channel, second_moments, variances, "waterfill_dg");
  if (squared_gaps.size() != channel.size())
    throw std::invalid_argument("waterfill_dg: mean gaps must match the channel length");
  if (!(comm_power > 0.0)) throw std::invalid_argument("waterfill_dg: P_c must be positive");
  if (!detail::any_usable(channel)) throw std::invalid_argument("waterfill_dg: all channel gains are zero");

  detail::WaterFillProblem p{channel.gains(), second_moments, variances, {}, channel.noise_power(), comm_power};
  const double sigma_w = std::sqrt(channel.noise_power());
  p.slopes.resize(channel.size(), 0.0);
  bool informative = false;
  for (std::size_t n = 0; n < channel.size(); ++n) {
    if (!(squared_gaps[n] >= 0.0)) throw std::invalid_argument("waterfill_dg: mean gaps must be >= 0");
    if (channel.gain(n) < kMinUsableGain || squared_gaps[n] == 0.0) continue;
    p.slopes[n] = sigma_w * channel.gain(n) * std::sqrt(squared_gaps[n]) / (std::sqrt(second_moments[n]) * variances[n]);
    informative = true;
  }
  if (!informative) {
    TransceiverDesign zero;
    zero.criterion = Criterion::dg;
    zero.status = DesignStatus::uninformative;
    zero.precoders.assign(channel.size(), 0.0);
    zero.scalings.assign(channel.size(), 0.0);
    return zero;
  }
  return detail::solve_water_fill(p, Criterion::dg);
}

/// Nothing transmitted: b = a = 0 on every subcarrier.
inline TransceiverDesign silent_design(std::size_t num_subcarriers, Criterion criterion) {
  TransceiverDesign d;
  d.criterion = criterion;
  d.status = DesignStatus::no_power;
  d.precoders.assign(num_subcarriers, 0.0);
  d.scalings.assign(num_subcarriers, 0.0);
  return d;
}

/// Dispatch on criterion; P_c = 0 yields the silent design.
inline TransceiverDesign design_transceiver(Criterion criterion, const ChannelRealization& channel,
                                            std::span<const double> second_moments,
                                            std::span<const double> variances, std::span<const double> squared_gaps,
                                            double comm_power) {
  if (comm_power == 0.0) return silent_design(channel.size(), criterion);
  if (criterion == Criterion::mse) return waterfill_mse(channel, second_moments, variances, comm_power);
  return waterfill_dg(channel, second_moments, variances, squared_gaps, comm_power);
}

struct AchievedDg {
  std::vector<double> per_subcarrier;
  double total = 0.0;
};

/// DG_n = |h_n b_n|^2 delta_n^2 / (|h_n b_n|^2 s_n + sigma_w^2). The receive
/// scalings cancel, so only the precoders matter.
inline AchievedDg achieved_dg(const TransceiverDesign& design, const ChannelRealization& channel,
                              std::span<const double> variances, std::span<const double> squared_gaps) {
  const std::size_t n_sub = channel.size();
  if (design.precoders.size() != n_sub || variances.size() != n_sub || squared_gaps.size() != n_sub)
    throw std::invalid_argument("achieved_dg: inconsistent lengths");
  AchievedDg out;
  out.per_subcarrier.assign(n_sub, 0.0);
  for (std::size_t n = 0; n < n_sub; ++n) {
    const double hb = channel.gain(n) * design.precoders[n];
    const double rx = hb * hb;
    if (rx == 0.0) continue;
    out.per_subcarrier[n] = rx * squared_gaps[n] / (rx * variances[n] + channel.noise_power());
    out.total += out.per_subcarrier[n];
  }
  return out;
}

/// sum_n b_n^2 nu_n^2.
inline double transmit_power(const TransceiverDesign& design, std::span<const double> second_moments) {
  double total = 0.0;
  for (std::size_t n = 0; n < design.precoders.size(); ++n)
    total += design.precoders[n] * design.precoders[n] * second_moments[n];
  return total;
}

}  // namespace isac
