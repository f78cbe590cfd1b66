#pragma once

// Monte Carlo link simulation: channel draws, feature transmission, ML
// classification and power / split-ratio sweeps.
//
// One channel is drawn per trial and the design is recomputed for it
// (perfect CSI at the transmitter).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "isac/analysis.hpp"
#include "isac/errors.hpp"
#include "isac/feature_model.hpp"
#include "isac/parallel.hpp"
#include "isac/transceiver.hpp"

namespace isac {

/// |h_n|^2 ~ Exp(1) independently per subcarrier.
struct RayleighUnit {};

/// Deterministic gains, returned verbatim on every draw.
struct FixedGains {
  std::vector<double> gains;
};

using ChannelModel = std::variant<RayleighUnit, FixedGains>;

struct SimConfig {
  std::uint64_t num_trials = 200000;
  std::uint64_t rng_seed = 1;
  ChannelModel channel_model = RayleighUnit{};
  double channel_noise = 0.1;       // sigma_w^2
  int num_subcarriers = 0;          // N; 0 means N = M
  GapAggregation aggregation = GapAggregation::worst_pair;
  unsigned workers = 1;
  std::vector<double> sweep_grid;   // strictly increasing

  void validate() const {
    if (num_trials < 1) throw std::invalid_argument("SimConfig: num_trials must be >= 1");
    if (!(channel_noise > 0.0)) throw std::invalid_argument("SimConfig: channel noise must be positive");
    if (num_subcarriers < 0) throw std::invalid_argument("SimConfig: num_subcarriers must be >= 0");
    for (std::size_t i = 1; i < sweep_grid.size(); ++i)
      if (!(sweep_grid[i] > sweep_grid[i - 1]))
        throw std::invalid_argument("SimConfig: sweep grid must be strictly increasing");
    if (const auto* fixed = std::get_if<FixedGains>(&channel_model)) {
      if (num_subcarriers > 0 && fixed->gains.size() != static_cast<std::size_t>(num_subcarriers))
        throw std::invalid_argument("SimConfig: fixed gain count does not match num_subcarriers");
    }
  }
};

/// Draws one channel with `num_subcarriers` gains.
template <class Generator>
ChannelRealization sample_channel(const ChannelModel& model, std::size_t num_subcarriers, double noise_power,
                                  Generator& gen) {
  if (const auto* fixed = std::get_if<FixedGains>(&model)) return ChannelRealization(fixed->gains, noise_power);
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> gains(num_subcarriers);
  for (double& g : gains) g = std::sqrt(exp1(gen));
  return ChannelRealization(std::move(gains), noise_power);
}

/// x^_n = a_n (|h_n| b_n x~_n + w_n), w_n ~ CN(0, sigma_w^2). Feature m rides on
/// subcarrier m; subcarriers beyond the feature count stay idle.
template <class Generator>
std::vector<std::complex<double>> transmit_and_receive(std::span<const std::complex<double>> features, const TransceiverDesign& design,
                                         const ChannelRealization& channel, Generator& gen) {
  if (features.size() > channel.size() || design.precoders.size() != channel.size() ||
      design.scalings.size() != channel.size())
    throw std::invalid_argument("transmit_and_receive: dimension mismatch (M = " + std::to_string(features.size()) +
                                ", N = " + std::to_string(channel.size()) + ")");
  std::normal_distribution<double> normal;
  const double noise_sd = std::sqrt(channel.noise_power() / 2.0);
  std::vector<std::complex<double>> out(features.size());
  for (std::size_t n = 0; n < features.size(); ++n) {
    const double wr = noise_sd * normal(gen);
    const double wi = noise_sd * normal(gen);
    const std::complex<double> y = channel.gain(n) * design.precoders[n] * features[n] + std::complex<double>(wr, wi);
    out[n] = design.scalings[n] * y;
  }
  return out;
}

/// Maximum-likelihood label for the received vector.
///
/// Under class l, x^_n ~ CN(a_n |h_n| b_n mu_{l,n}, a_n^2 (|h_n b_n|^2 s_n + sigma_w^2)).
/// The variance is shared by all classes, so the decision is the minimum
/// variance-weighted distance over subcarriers that carry signal. Ties (and
/// the all-silent case) resolve to the lowest label.
inline int ml_classify(std::span<const std::complex<double>> received, const FeatureModel& model, const TransceiverDesign& design,
                       const ChannelRealization& channel, std::span<const double> variances) {
  const auto dims = static_cast<std::size_t>(model.num_dims());
  if (received.size() != dims || variances.size() != dims || channel.size() < dims || design.precoders.size() < dims)
    throw std::invalid_argument("ml_classify: dimension mismatch");

  int best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (int l = 0; l < model.num_classes(); ++l) {
    double score = 0.0;
    for (std::size_t n = 0; n < dims; ++n) {
      const double hb = channel.gain(n) * design.precoders[n];
      const double a = design.scalings[n];
      if (hb == 0.0 || a == 0.0) continue;
      const double mean = a * hb * model.mean(l, static_cast<int>(n));
      const double var = a * a * (hb * hb * variances[n] + channel.noise_power());
      score += std::norm(received[n] - mean) / var;
    }
    if (score < best_score) {
      best_score = score;
      best = l;
    }
  }
  return best;
}

/// Per-feature statistics consumed by the designs.
struct LinkStatistics {
  std::vector<double> variances;       // sigma~_m^2
  std::vector<double> second_moments;  // nu_m^2
  std::vector<double> squared_gaps;    // delta_m^2
};

inline LinkStatistics link_statistics(const FeatureModel& model, const SensingConfig& sensing,
                                      GapAggregation aggregation) {
  return {effective_variances(model, sensing), feature_second_moments(model, sensing),
          pairwise_mean_gaps(model, aggregation)};
}

/// Picks the subcarriers used when M < N: the M strongest gains, with the most
/// important feature (largest delta^2 / s for DG, largest s for MSE) on the
/// strongest one. Returns the gains reordered by feature index.
inline ChannelRealization assign_subcarriers(const ChannelRealization& channel, const LinkStatistics& stats,
                                             Criterion criterion) {
  const std::size_t dims = stats.variances.size();
  if (channel.size() == dims) return channel;
  if (channel.size() < dims)
    throw std::invalid_argument("assign_subcarriers: fewer subcarriers (" + std::to_string(channel.size()) +
                                ") than features (" + std::to_string(dims) + ")");

  std::vector<std::size_t> carriers(channel.size());
  std::iota(carriers.begin(), carriers.end(), 0);
  std::stable_sort(carriers.begin(), carriers.end(),
                   [&](std::size_t a, std::size_t b) { return channel.gain(a) > channel.gain(b); });

  std::vector<std::size_t> features(dims);
  std::iota(features.begin(), features.end(), 0);
  auto importance = [&](std::size_t m) {
    return criterion == Criterion::dg ? stats.squared_gaps[m] / stats.variances[m] : stats.variances[m];
  };
  std::stable_sort(features.begin(), features.end(),
                   [&](std::size_t a, std::size_t b) { return importance(a) > importance(b); });

  std::vector<double> gains(dims);
  for (std::size_t k = 0; k < dims; ++k) gains[features[k]] = channel.gain(carriers[k]);
  return ChannelRealization(std::move(gains), channel.noise_power());
}

/// Empirical outcome of a batch of trials.
struct ErrorEstimate {
  double error = 0.0;
  double accuracy = 0.0;
  double stderr_ = 0.0;      // binomial standard error
  double total_dg_mean = 0.0;
  double bound_mean = 0.0;   // mean of (L-1) Q(sqrt(DG/2)) over channel draws
  std::uint64_t trials = 0;
};

namespace detail {

struct TrialTally {
  std::uint64_t correct = 0;
  std::uint64_t trials = 0;
  double dg_sum = 0.0;
  double bound_sum = 0.0;

  void merge(const TrialTally& o) {
    correct += o.correct;
    trials += o.trials;
    dg_sum += o.dg_sum;
    bound_sum += o.bound_sum;
  }
};

inline ErrorEstimate finish(const TrialTally& tally) {
  ErrorEstimate e;
  e.trials = tally.trials;
  e.accuracy = static_cast<double>(tally.correct) / static_cast<double>(tally.trials);
  e.error = 1.0 - e.accuracy;
  e.stderr_ = std::sqrt(e.accuracy * (1.0 - e.accuracy) / static_cast<double>(tally.trials));
  e.total_dg_mean = tally.dg_sum / static_cast<double>(tally.trials);
  e.bound_mean = tally.bound_sum / static_cast<double>(tally.trials);
  return e;
}

}  // namespace detail

/// Monte Carlo error of the ML classifier for a fixed communication power.
/// Classes are drawn from the priors; each trial draws features, a channel,
/// designs the transceiver for that channel and classifies the received vector.
inline ErrorEstimate simulate_link(const FeatureModel& model, const SensingConfig& sensing, double comm_power,
                                   Criterion criterion, const SimConfig& config) {
  config.validate();
  if (!(comm_power >= 0.0)) throw std::invalid_argument("simulate_link: P_c must be >= 0");
  const LinkStatistics stats = link_statistics(model, sensing, config.aggregation);
  const std::size_t dims = stats.variances.size();
  const std::size_t n_sub =
      config.num_subcarriers > 0 ? static_cast<std::size_t>(config.num_subcarriers)
                                 : (std::holds_alternative<FixedGains>(config.channel_model)
                                        ? std::get<FixedGains>(config.channel_model).gains.size()
                                        : dims);
  if (n_sub < dims)
    throw std::invalid_argument("simulate_link: need at least M = " + std::to_string(dims) + " subcarriers");
  const int num_classes = model.num_classes();

  auto make_design = [&](const ChannelRealization& eff, std::uint64_t trial) {
    try {
      return design_transceiver(criterion, eff, stats.second_moments, stats.variances, stats.squared_gaps,
                                comm_power);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " [trial " + std::to_string(trial) + "]");
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(e.what()) + " [trial " + std::to_string(trial) + "]");
    }
  };

  // A fixed channel admits a single design.
  std::optional<ChannelRealization> fixed_channel;
  std::optional<TransceiverDesign> fixed_design;
  double fixed_dg = 0.0;
  if (std::holds_alternative<FixedGains>(config.channel_model)) {
    std::mt19937_64 unused(0);
    fixed_channel = assign_subcarriers(sample_channel(config.channel_model, n_sub, config.channel_noise, unused),
                                       stats, criterion);
    fixed_design = make_design(*fixed_channel, 0);
    fixed_dg = achieved_dg(*fixed_design, *fixed_channel, stats.variances, stats.squared_gaps).total;
  }

  auto block = [&](std::mt19937_64& gen, std::uint64_t first, std::uint64_t count) {
    detail::TrialTally tally;
    std::discrete_distribution<int> pick_class(model.priors().begin(), model.priors().end());
    for (std::uint64_t i = 0; i < count; ++i) {
      const int label = pick_class(gen);
      const auto features = sample_features(model, sensing, label, gen);
      int decided;
      double dg;
      if (fixed_channel) {
        const auto rx = transmit_and_receive(features, *fixed_design, *fixed_channel, gen);
        decided = ml_classify(rx, model, *fixed_design, *fixed_channel, stats.variances);
        dg = fixed_dg;
      } else {
        const auto channel = assign_subcarriers(
            sample_channel(config.channel_model, n_sub, config.channel_noise, gen), stats, criterion);
        const auto design = make_design(channel, first + i);
        const auto rx = transmit_and_receive(features, design, channel, gen);
        decided = ml_classify(rx, model, design, channel, stats.variances);
        dg = achieved_dg(design, channel, stats.variances, stats.squared_gaps).total;
      }
      tally.correct += decided == label;
      tally.dg_sum += dg;
      tally.bound_sum += (num_classes - 1) * q_function(std::sqrt(dg / 2.0));
    }
    tally.trials = count;
    return tally;
  };

  return detail::finish(run_blocks<detail::TrialTally>(config.num_trials, config.rng_seed, config.workers, block));
}

/// Error estimate for the split P_c = beta P, P_r = (1 - beta) P.
inline ErrorEstimate estimate_error(const FeatureModel& model, double sensing_noise_power, const PowerBudget& budget,
                                    Criterion criterion, const SimConfig& config) {
  if (!(budget.sensing() > 0.0))
    throw std::invalid_argument("estimate_error: P_r = 0 leaves the sensing noise unbounded");
  return simulate_link(model, SensingConfig(sensing_noise_power, budget.sensing()), budget.communication(), criterion,
                       config);
}

struct SweepRow {
  double independent = 0.0;  // P_c (linear) or beta
  Criterion criterion = Criterion::mse;
  bool valid = true;
  double total_dg_mean = 0.0;
  double error_bound = 0.0;
  double accuracy = 0.0;
  double stderr_ = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> argmax_accuracy;  // independent value of the best-accuracy row
  std::optional<double> argmax_dg;        // independent value of the largest mean DG
};

namespace detail {

inline SweepRow to_row(double x, Criterion criterion, const ErrorEstimate& e) {
  return {x, criterion, true, e.total_dg_mean, e.bound_mean, e.accuracy, e.stderr_};
}

inline void fill_argmax(SweepResult& result) {
  const SweepRow* best_acc = nullptr;
  const SweepRow* best_dg = nullptr;
  for (const auto& row : result.rows) {
    if (!row.valid) continue;
    if (!best_acc || row.accuracy > best_acc->accuracy) best_acc = &row;
    if (!best_dg || row.total_dg_mean > best_dg->total_dg_mean) best_dg = &row;
  }
  if (best_acc) result.argmax_accuracy = best_acc->independent;
  if (best_dg) result.argmax_dg = best_dg->independent;
}

}  // namespace detail

/// One row per communication power in `grid` (linear). Every grid point reuses
/// the same seed, so rows and criteria see identical channel draws.
inline SweepResult sweep_power(const FeatureModel& model, const SensingConfig& sensing, Criterion criterion,
                               std::span<const double> grid, const SimConfig& config) {
  if (grid.empty()) throw std::invalid_argument("sweep_power: empty power grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw std::invalid_argument("sweep_power: powers must be >= 0");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw std::invalid_argument("sweep_power: grid must be strictly increasing");
  }
  SweepResult result;
  for (double p_c : grid) result.rows.push_back(detail::to_row(p_c, criterion, simulate_link(model, sensing, p_c, criterion, config)));
  detail::fill_argmax(result);
  return result;
}

/// One row per split ratio beta with P_c = beta P and P_r = (1 - beta) P; the
/// effective variances, second moments and designs are rederived per row.
/// beta = 1 leaves no sensing power and is reported as an invalid row.
inline SweepResult sweep_beta(const FeatureModel& model, double sensing_noise_power, double total_power,
                              std::span<const double> betas, Criterion criterion, const SimConfig& config) {
  if (betas.empty()) throw std::invalid_argument("sweep_beta: empty beta grid");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] >= 0.0 && betas[i] <= 1.0))
      throw std::invalid_argument("sweep_beta: beta " + std::to_string(betas[i]) + " outside [0, 1]");
    if (i > 0 && !(betas[i] > betas[i - 1])) throw std::invalid_argument("sweep_beta: grid must be strictly increasing");
  }
  SweepResult result;
  for (double beta : betas) {
    const PowerBudget budget(total_power, beta);
    if (!(budget.sensing() > 0.0)) {
      SweepRow row;
      row.independent = beta;
      row.criterion = criterion;
      row.valid = false;
      row.total_dg_mean = row.error_bound = row.accuracy = row.stderr_ = std::numeric_limits<double>::quiet_NaN();
      result.rows.push_back(row);
      continue;
    }
    result.rows.push_back(
        detail::to_row(beta, criterion, estimate_error(model, sensing_noise_power, budget, criterion, config)));
  }
  detail::fill_argmax(result);
  return result;
}

}  // namespace isac
