#pragma once

// Gaussian-mixture feature model with sensing-noise inflation.
//
// Conventions: class means are real, while features and noise are circularly
// symmetric complex Gaussians, i.e. a variance v splits as v/2 per real
// component. Channel phase is removed by phase-matched precoding, so only
// magnitudes |h_n| and real mean gaps enter the design and error expressions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace isac {

/// Per-class means, shared diagonal covariance and class priors.
class FeatureModel {
 public:
  FeatureModel(int num_classes, int num_dims, std::vector<double> means, std::vector<double> variances,
               std::vector<double> priors)
      : num_classes_(num_classes),
        num_dims_(num_dims),
        means_(std::move(means)),
        variances_(std::move(variances)),
        priors_(std::move(priors)) {
    validate();
  }

  /// Uniform priors.
  FeatureModel(int num_classes, int num_dims, std::vector<double> means, std::vector<double> variances)
      : FeatureModel(num_classes, num_dims, std::move(means), std::move(variances),
                     std::vector<double>(static_cast<std::size_t>(std::max(num_classes, 1)),
                                         1.0 / std::max(num_classes, 1))) {}

  int num_classes() const { return num_classes_; }
  int num_dims() const { return num_dims_; }

  /// Row-major L x M matrix of class means.
  std::span<const double> means() const { return means_; }
  std::span<const double> class_mean(int label) const {
    return std::span<const double>(means_).subspan(static_cast<std::size_t>(label) * num_dims_, num_dims_);
  }
  double mean(int label, int dim) const { return means_[static_cast<std::size_t>(label) * num_dims_ + dim]; }

  std::span<const double> variances() const { return variances_; }
  std::span<const double> priors() const { return priors_; }

  friend bool operator==(const FeatureModel&, const FeatureModel&) = default;

 private:
  void validate() const {
    if (num_classes_ < 1) throw std::invalid_argument("FeatureModel: num_classes must be positive");
    if (num_dims_ < 1) throw std::invalid_argument("FeatureModel: num_dims must be positive");
    const auto cells = static_cast<std::size_t>(num_classes_) * static_cast<std::size_t>(num_dims_);
    if (means_.size() != cells)
      throw std::invalid_argument("FeatureModel: means must hold L*M = " + std::to_string(cells) + " entries, got " +
                                  std::to_string(means_.size()));
    if (variances_.size() != static_cast<std::size_t>(num_dims_))
      throw std::invalid_argument("FeatureModel: variances must hold M entries");
    if (priors_.size() != static_cast<std::size_t>(num_classes_))
      throw std::invalid_argument("FeatureModel: priors must hold L entries");
    for (double m : means_)
      if (!std::isfinite(m)) throw std::invalid_argument("FeatureModel: means must be finite");
    for (double v : variances_)
      if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("FeatureModel: variances must be positive");
    double total = 0.0;
    for (double p : priors_) {
      if (!(p >= 0.0)) throw std::invalid_argument("FeatureModel: priors must be nonnegative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("FeatureModel: priors must sum to 1");
  }

  int num_classes_;
  int num_dims_;
  std::vector<double> means_;
  std::vector<double> variances_;
  std::vector<double> priors_;
};

/// Sensing receiver noise power sigma_r^2 and sensing transmit power P_r.
///
/// sigma_r^2 = 0 is accepted and models noiseless sensing.
class SensingConfig {
 public:
  SensingConfig(double noise_power, double sensing_power) : noise_power_(noise_power), sensing_power_(sensing_power) {
    if (!(noise_power >= 0.0) || !std::isfinite(noise_power))
      throw std::invalid_argument("SensingConfig: sensing noise power must be >= 0");
    if (!(sensing_power > 0.0))
      throw std::invalid_argument("SensingConfig: sensing power P_r must be positive");
  }

  double noise_power() const { return noise_power_; }
  double sensing_power() const { return sensing_power_; }
  /// Per-dimension noise variance sigma_r^2 / P_r added to every feature.
  double noise_variance() const { return noise_power_ / sensing_power_; }

 private:
  double noise_power_;
  double sensing_power_;
};

/// Total power P split as P_c = beta P (communication) and P_r = (1 - beta) P.
class PowerBudget {
 public:
  PowerBudget(double total, double split_ratio) : total_(total), split_ratio_(split_ratio) {
    if (!(total > 0.0) || !std::isfinite(total)) throw std::invalid_argument("PowerBudget: total power must be positive");
    if (!(split_ratio >= 0.0 && split_ratio <= 1.0))
      throw std::invalid_argument("PowerBudget: split ratio beta must lie in [0, 1]");
  }

  double total() const { return total_; }
  double split_ratio() const { return split_ratio_; }
  double communication() const { return split_ratio_ * total_; }
  double sensing() const { return total_ - communication(); }

 private:
  double total_;
  double split_ratio_;
};

/// sigma_m^2 + sigma_r^2 / P_r for every dimension.
inline std::vector<double> effective_variances(const FeatureModel& model, const SensingConfig& sensing) {
  const double extra = sensing.noise_variance();
  std::vector<double> out(model.variances().begin(), model.variances().end());
  for (double& v : out) v += extra;
  return out;
}

/// E[x~_m^2] = sum_l pi_l mu_{l,m}^2 + sigma_m^2 + sigma_r^2 / P_r.
inline std::vector<double> feature_second_moments(const FeatureModel& model, const SensingConfig& sensing) {
  std::vector<double> out = effective_variances(model, sensing);
  for (int l = 0; l < model.num_classes(); ++l) {
    const double prior = model.priors()[l];
    for (int m = 0; m < model.num_dims(); ++m) out[m] += prior * model.mean(l, m) * model.mean(l, m);
  }
  return out;
}

enum class GapAggregation { worst_pair, average_pairs };

inline std::vector<double> pair_squared_gaps(const FeatureModel& model, int a, int b) {
  std::vector<double> gaps(static_cast<std::size_t>(model.num_dims()));
  for (int m = 0; m < model.num_dims(); ++m) {
    const double d = model.mean(a, m) - model.mean(b, m);
    gaps[m] = d * d;
  }
  return gaps;
}

/// Per-dimension squared mean gaps delta_m^2.
///
/// worst_pair: gaps of the class pair with the smallest total DG
/// sum_m gap_m^2 / sigma_m^2; ties go to the lexicographically lowest pair.
/// average_pairs: mean of the squared gaps over all unordered pairs.
inline std::vector<double> pairwise_mean_gaps(const FeatureModel& model, GapAggregation mode) {
  const int num_classes = model.num_classes();
  if (num_classes < 2) throw std::invalid_argument("pairwise_mean_gaps: need at least 2 classes");
  const auto dims = static_cast<std::size_t>(model.num_dims());

  if (mode == GapAggregation::average_pairs) {
    std::vector<double> sum(dims, 0.0);
    int pairs = 0;
    for (int a = 0; a < num_classes; ++a)
      for (int b = a + 1; b < num_classes; ++b, ++pairs) {
        const auto gaps = pair_squared_gaps(model, a, b);
        for (std::size_t m = 0; m < dims; ++m) sum[m] += gaps[m];
      }
    for (double& s : sum) s /= pairs;
    return sum;
  }

  std::vector<double> best;
  double best_dg = std::numeric_limits<double>::infinity();
  for (int a = 0; a < num_classes; ++a)
    for (int b = a + 1; b < num_classes; ++b) {
      auto gaps = pair_squared_gaps(model, a, b);
      double dg = 0.0;
      for (std::size_t m = 0; m < dims; ++m) dg += gaps[m] / model.variances()[m];
      if (dg < best_dg) {
        best_dg = dg;
        best = std::move(gaps);
      }
    }
  return best;
}

/// Minimum pairwise DG of the noiseless model, sum_m delta_m^2 / sigma_m^2.
inline double worst_pair_dg(const FeatureModel& model) {
  const auto gaps = pairwise_mean_gaps(model, GapAggregation::worst_pair);
  double dg = 0.0;
  for (int m = 0; m < model.num_dims(); ++m) dg += gaps[m] / model.variances()[m];
  return dg;
}

/// Draws x~ = x + d with x ~ CN(mu_label, diag(sigma^2)) and d ~ CN(0, sigma_r^2/P_r I).
template <class Generator>
std::vector<std::complex<double>> sample_features(const FeatureModel& model, const SensingConfig& sensing, int label,
                                    Generator& gen) {
  if (label < 0 || label >= model.num_classes())
    throw std::invalid_argument("sample_features: class label " + std::to_string(label) + " out of range");
  std::normal_distribution<double> normal;
  const double noise_sd = std::sqrt(sensing.noise_variance() / 2.0);
  const auto mu = model.class_mean(label);
  std::vector<std::complex<double>> out(mu.size());
  for (std::size_t m = 0; m < mu.size(); ++m) {
    const double sd = std::sqrt(model.variances()[m] / 2.0);
    const double re = sd * normal(gen);
    const double im = sd * normal(gen);
    const double nre = noise_sd * normal(gen);
    const double nim = noise_sd * normal(gen);
    out[m] = {mu[m] + re + nre, im + nim};
  }
  return out;
}

inline std::vector<std::complex<double>> sample_features(const FeatureModel& model, const SensingConfig& sensing,
                                                         int label, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  return sample_features(model, sensing, label, gen);
}

/// Parameters of the synthetic heterogeneous model recipe.
struct SyntheticModelParams {
  int num_classes = 4;
  int num_dims = 8;
  std::uint64_t seed = 7;
  double mean_scale = 1.0;
  double variance_min = 0.25;
  double variance_max = 4.0;
};

/// Means mean_scale * N(0, 1); variances log-uniform in [variance_min, variance_max];
/// uniform priors. Deterministic per seed.
inline FeatureModel make_synthetic_model(const SyntheticModelParams& params) {
  if (params.num_classes < 2) throw std::invalid_argument("synthetic model: num_classes must be >= 2");
  if (params.num_dims < 1) throw std::invalid_argument("synthetic model: num_dims must be >= 1");
  if (!(params.variance_min > 0.0) || !(params.variance_max >= params.variance_min))
    throw std::invalid_argument("synthetic model: need 0 < variance_min <= variance_max");
  if (!(params.mean_scale > 0.0)) throw std::invalid_argument("synthetic model: mean_scale must be positive");

  std::mt19937_64 gen(params.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> variances(static_cast<std::size_t>(params.num_dims));
  const double log_lo = std::log(params.variance_min);
  const double log_hi = std::log(params.variance_max);
  for (double& v : variances) v = std::exp(log_lo + (log_hi - log_lo) * unit(gen));

  std::vector<double> means(static_cast<std::size_t>(params.num_classes) * params.num_dims);
  for (double& mu : means) mu = params.mean_scale * normal(gen);

  return FeatureModel(params.num_classes, params.num_dims, std::move(means), std::move(variances));
}

}  // namespace isac
