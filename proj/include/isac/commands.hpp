#pragma once

// Experiment commands behind the `isac` executable. Each returns the CSV text
// it would write so the commands can be exercised in-process.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "isac/analysis.hpp"
#include "isac/config.hpp"
#include "isac/csv.hpp"
#include "isac/model_io.hpp"
#include "isac/parallel.hpp"
#include "isac/sim.hpp"

namespace isac {

inline FeatureModel resolve_model(const ExperimentConfig& config) {
  if (config.model_path) return load_model(*config.model_path);
  return make_synthetic_model(config.synthetic);
}

/// Synthetic model file contents; byte-identical for identical parameters.
inline std::string cmd_gen_model(const SyntheticModelParams& params) {
  if (params.num_classes < 2) throw ConfigError("gen-model: need at least 2 classes (got " +
                                                std::to_string(params.num_classes) + ")");
  if (params.num_dims < 1) throw ConfigError("gen-model: need at least 1 dimension");
  try {
    return model_to_json(make_synthetic_model(params));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("gen-model: ") + e.what());
  }
}

namespace detail {

inline void write_provenance(CsvWriter& csv, const char* command, const ExperimentConfig& config, SweepAxis axis) {
  csv.comment(std::string("isac ") + command);
  for (const auto& line : config.describe(axis)) csv.comment(line);
}

}  // namespace detail

/// Columns: p_c_db, criterion, total_dg_mean, error_bound, accuracy, stderr.
/// Rows are grid-major with the criteria in (mse, dg) order.
inline std::string cmd_sweep_power(const ExperimentConfig& config) {
  if (config.power_grid.linear.empty()) throw ConfigError("sweep-power: empty power grid");
  const FeatureModel model = resolve_model(config);
  const SensingConfig sensing(config.sensing_noise, config.sensing_power.linear);
  const SimConfig sim = config.sim_config();

  std::vector<SweepResult> results;
  const auto criteria = criteria_of(config.criterion);
  for (Criterion c : criteria) results.push_back(sweep_power(model, sensing, c, config.power_grid.linear, sim));

  CsvWriter csv;
  detail::write_provenance(csv, "sweep-power", config, SweepAxis::power);
  csv.header({"p_c_db", "criterion", "total_dg_mean", "error_bound", "accuracy", "stderr"});
  for (std::size_t i = 0; i < config.power_grid.linear.size(); ++i)
    for (const auto& r : results) {
      const SweepRow& row = r.rows[i];
      csv.row(linear_to_db(row.independent), to_string(row.criterion), row.total_dg_mean, row.error_bound,
              row.accuracy, row.stderr_);
    }
  return csv.str();
}

/// Columns: beta, criterion, total_dg_mean, accuracy, stderr. Followed by one
/// footer row per criterion whose criterion cell is "argmax_<criterion>" and
/// whose remaining cells repeat the best-accuracy row.
inline std::string cmd_sweep_beta(const ExperimentConfig& config) {
  if (config.beta_grid.empty()) throw ConfigError("sweep-beta: empty beta grid");
  const FeatureModel model = resolve_model(config);
  const SimConfig sim = config.sim_config();

  std::vector<SweepResult> results;
  for (Criterion c : criteria_of(config.criterion))
    results.push_back(sweep_beta(model, config.sensing_noise, config.total_power.linear, config.beta_grid, c, sim));

  CsvWriter csv;
  detail::write_provenance(csv, "sweep-beta", config, SweepAxis::beta);
  csv.header({"beta", "criterion", "total_dg_mean", "accuracy", "stderr"});
  for (std::size_t i = 0; i < config.beta_grid.size(); ++i)
    for (const auto& r : results) {
      const SweepRow& row = r.rows[i];
      csv.row(row.independent, to_string(row.criterion), row.total_dg_mean, row.accuracy, row.stderr_);
    }
  for (const auto& r : results) {
    if (!r.argmax_accuracy) continue;
    for (const auto& row : r.rows)
      if (row.valid && row.independent == *r.argmax_accuracy) {
        csv.row(row.independent, std::string("argmax_") + to_string(row.criterion), row.total_dg_mean, row.accuracy,
                row.stderr_);
        break;
      }
  }
  return csv.str();
}

/// Monte Carlo mean of DG_max |h|^2 rho / (|h|^2 rho + 1) over |h|^2 ~ Exp(1).
inline double monte_carlo_average_dg(double dg_max, double rho, std::uint64_t draws, std::uint64_t seed,
                                     unsigned workers) {
  struct Sum {
    double total = 0.0;
    void merge(const Sum& o) { total += o.total; }
  };
  const Sum s = run_blocks<Sum>(draws, seed, workers, [&](std::mt19937_64& gen, std::uint64_t, std::uint64_t count) {
    std::exponential_distribution<double> exp1(1.0);
    Sum part;
    for (std::uint64_t i = 0; i < count; ++i) {
      const double g = exp1(gen) * rho;
      part.total += g / (g + 1.0);
    }
    return part;
  });
  return dg_max * s.total / static_cast<double>(draws);
}

/// Empirical ML error for L equiprobable classes with CN(0, 1) noise placed on
/// a regular simplex so that every pair has discriminant gain `dg`. Only the
/// in-phase components matter, each carrying noise variance 1/2.
inline double monte_carlo_simplex_error(double dg, int num_classes, std::uint64_t trials, std::uint64_t seed,
                                        unsigned workers) {
  struct Count {
    std::uint64_t errors = 0;
    void merge(const Count& o) { errors += o.errors; }
  };
  const double offset = std::sqrt(dg / 2.0);
  const Count c = run_blocks<Count>(trials, seed, workers, [&](std::mt19937_64& gen, std::uint64_t, std::uint64_t count) {
    std::uniform_int_distribution<int> pick(0, num_classes - 1);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    std::vector<double> x(static_cast<std::size_t>(num_classes));
    Count part;
    for (std::uint64_t i = 0; i < count; ++i) {
      const int label = pick(gen);
      for (int m = 0; m < num_classes; ++m) x[m] = (m == label ? offset : 0.0) + normal(gen);
      // Class l has mean offset * e_l; the nearest mean is the largest coordinate.
      int best = 0;
      for (int m = 1; m < num_classes; ++m)
        if (x[m] > x[best]) best = m;
      part.errors += best != label;
    }
    return part;
  });
  return static_cast<double>(c.errors) / static_cast<double>(trials);
}

/// Columns: table, x, closed_form, reference, monte_carlo, rel_error, valid.
///  table = average_dg:  x = rho, closed_form = E[DG*], reference = dg_max
///  table = union_bound: x = DG_min, closed_form = (L-1) Q(sqrt(DG/2)),
///                       reference = Q(sqrt(DG/2)), monte_carlo = simplex ML error
inline std::string cmd_closed_forms(const ExperimentConfig& config) {
  CsvWriter csv;
  detail::write_provenance(csv, "closed-forms", config, SweepAxis::closed_forms);
  csv.header({"table", "x", "closed_form", "reference", "monte_carlo", "rel_error", "valid"});
  for (std::size_t i = 0; i < config.rho_grid.size(); ++i) {
    const double rho = config.rho_grid[i];
    const double cf = average_dg_closed_form(config.dg_max, rho);
    const double mc = monte_carlo_average_dg(config.dg_max, rho, config.mc_draws, derive_seed(config.seed, i),
                                             config.workers);
    csv.row("average_dg", rho, cf, config.dg_max, mc, std::abs(cf - mc) / cf, 1);
  }
  for (std::size_t i = 0; i < config.dg_grid.size(); ++i) {
    const double dg = config.dg_grid[i];
    const ErrorBound bound = union_lower_bound(dg, config.classes);
    const double mc = monte_carlo_simplex_error(dg, config.classes, config.bound_trials,
                                                derive_seed(config.seed, 1000 + i), config.workers);
    csv.row("union_bound", dg, bound.bound_value, binary_error_probability(dg), mc,
            std::abs(bound.bound_value - mc) / bound.bound_value, bound.valid ? 1 : 0);
  }
  return csv.str();
}

}  // namespace isac
