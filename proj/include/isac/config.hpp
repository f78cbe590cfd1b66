#pragma once

// Flat key-value experiment configuration.
//
//   # comment
//   key = value
//
// Every power-valued field carries an explicit unit suffix, `db` or `linear`:
//   comm_noise = 0.1 linear
//   power_grid = -5:10:1 db      (start:stop:step, inclusive)
//   power_grid = 0.5, 1, 2 linear
// Unitless grids (beta_grid, dg_grid) use the same list / range syntax.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "isac/csv.hpp"
#include "isac/errors.hpp"
#include "isac/feature_model.hpp"
#include "isac/sim.hpp"
#include "isac/transceiver.hpp"

namespace isac {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

enum class PowerUnit { db, linear };

/// Raw key-value pairs with the line each key came from.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text) {
    KeyValueFile kv;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
      if (kv.values_.count(key)) throw ConfigError("config: duplicate key '" + key + "'");
      kv.values_[key] = value;
    }
    return kv;
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const { return values_; }

  static std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
  }

 private:
  std::map<std::string, std::string> values_;
};

namespace detail {

inline double parse_double(std::string_view text, const std::string& field) {
  const std::string s = KeyValueFile::trim(text);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("config field '" + field + "': '" + s + "' is not a number");
  return v;
}

inline std::uint64_t parse_uint(std::string_view text, const std::string& field) {
  const std::string s = KeyValueFile::trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("config field '" + field + "': '" + s + "' is not a nonnegative integer");
  return v;
}

// Splits "value unit" and returns the value text with its unit.
inline std::pair<std::string, PowerUnit> split_unit(const std::string& raw, const std::string& field) {
  const auto space = raw.find_last_of(" \t");
  const std::string unit = space == std::string::npos ? std::string() : KeyValueFile::trim(raw.substr(space + 1));
  if (unit == "db") return {KeyValueFile::trim(raw.substr(0, space)), PowerUnit::db};
  if (unit == "linear") return {KeyValueFile::trim(raw.substr(0, space)), PowerUnit::linear};
  throw ConfigError("config field '" + field + "': power values need a unit suffix 'db' or 'linear'");
}

// "a:b:step" (inclusive) or "x1, x2, ...".
inline std::vector<double> parse_grid(const std::string& text, const std::string& field) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ':')) parts.push_back(parse_double(tok, field));
    if (parts.size() != 3) throw ConfigError("config field '" + field + "': range must be start:stop:step");
    const double start = parts[0], stop = parts[1], step = parts[2];
    if (!(step > 0.0) || stop < start)
      throw ConfigError("config field '" + field + "': range needs step > 0 and stop >= start");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
  } else {
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ','))
      if (!KeyValueFile::trim(tok).empty()) out.push_back(parse_double(tok, field));
  }
  if (out.empty()) throw ConfigError("config field '" + field + "': empty grid");
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i] > out[i - 1])) throw ConfigError("config field '" + field + "': grid must be strictly increasing");
  return out;
}

}  // namespace detail

/// A power value remembered in the unit it was written in.
struct PowerValue {
  double linear = 0.0;
  PowerUnit unit = PowerUnit::linear;

  static PowerValue parse(const std::string& raw, const std::string& field) {
    auto [value, unit] = detail::split_unit(raw, field);
    const double v = detail::parse_double(value, field);
    PowerValue p{unit == PowerUnit::db ? db_to_linear(v) : v, unit};
    if (!(p.linear > 0.0)) throw ConfigError("config field '" + field + "': power must be positive");
    return p;
  }
  double db() const { return linear_to_db(linear); }
};

struct PowerGrid {
  std::vector<double> linear;
  PowerUnit unit = PowerUnit::db;

  static PowerGrid parse(const std::string& raw, const std::string& field) {
    auto [value, unit] = detail::split_unit(raw, field);
    PowerGrid g;
    g.unit = unit;
    for (double v : detail::parse_grid(value, field)) {
      const double lin = unit == PowerUnit::db ? db_to_linear(v) : v;
      if (!(lin >= 0.0)) throw ConfigError("config field '" + field + "': powers must be >= 0");
      g.linear.push_back(lin);
    }
    return g;
  }
};

enum class CriterionSelection { mse, dg, both };

inline CriterionSelection parse_criterion(const std::string& s) {
  if (s == "mse") return CriterionSelection::mse;
  if (s == "dg") return CriterionSelection::dg;
  if (s == "both") return CriterionSelection::both;
  throw ConfigError("config field 'criterion': expected mse, dg or both, got '" + s + "'");
}

inline std::vector<Criterion> criteria_of(CriterionSelection sel) {
  switch (sel) {
    case CriterionSelection::mse:
      return {Criterion::mse};
    case CriterionSelection::dg:
      return {Criterion::dg};
    default:
      return {Criterion::mse, Criterion::dg};
  }
}

enum class SweepAxis { power, beta, closed_forms };

/// Fully resolved experiment settings. Defaults follow the reference setup:
/// sigma_r^2 = sigma_w^2 = 0.1, P_c in [-5, 10] dB, M = N = 8.
struct ExperimentConfig {
  std::optional<std::string> model_path;
  SyntheticModelParams synthetic;

  double sensing_noise = 0.1;  // sigma_r^2
  double comm_noise = 0.1;     // sigma_w^2
  PowerValue sensing_power{1.0, PowerUnit::db};
  PowerValue total_power{1.0, PowerUnit::db};

  PowerGrid power_grid;
  std::vector<double> beta_grid;

  CriterionSelection criterion = CriterionSelection::both;
  GapAggregation aggregation = GapAggregation::worst_pair;
  std::uint64_t trials = 200000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  int subcarriers = 0;
  std::optional<std::vector<double>> fixed_gains;

  // closed-forms
  std::vector<double> rho_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<double> dg_grid;
  double dg_max = 1.0;
  int classes = 2;
  std::uint64_t mc_draws = 10000000;
  std::uint64_t bound_trials = 1000000;

  std::string output_path;

  /// Provenance lines written at the top of every CSV.
  std::vector<std::string> describe(SweepAxis axis) const;

  SimConfig sim_config() const {
    SimConfig s;
    s.num_trials = trials;
    s.rng_seed = seed;
    s.channel_noise = comm_noise;
    s.num_subcarriers = subcarriers;
    s.aggregation = aggregation;
    s.workers = workers;
    if (fixed_gains) s.channel_model = FixedGains{*fixed_gains};
    return s;
  }
};

inline std::vector<double> default_power_grid_db() {
  std::vector<double> g;
  for (int db = -5; db <= 10; ++db) g.push_back(db);
  return g;
}

inline std::vector<double> default_beta_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 19; ++i) g.push_back(0.05 * i);
  return g;
}

/// Resolves a key-value file into an ExperimentConfig for one command.
/// Unknown keys and keys belonging to another sweep axis are rejected.
inline ExperimentConfig resolve_config(const KeyValueFile& kv, SweepAxis axis) {
  static const std::set<std::string> common{"model",        "model_classes", "model_dims",  "model_seed",
                                            "mean_scale",   "variance_min",  "variance_max", "criterion",
                                            "aggregation",  "sensing_noise", "sensing_snr", "comm_noise",
                                            "comm_snr",     "sensing_power", "total_power", "trials",
                                            "seed",         "workers",       "subcarriers", "channel",
                                            "fixed_gains",  "out"};
  static const std::set<std::string> closed{"rho_grid", "dg_grid", "dg_max", "classes", "mc_draws", "bound_trials",
                                            "seed",     "out",     "workers"};

  const bool closed_axis = axis == SweepAxis::closed_forms;
  for (const auto& [key, _] : kv.values()) {
    const bool axis_key = key == "power_grid" || key == "beta_grid";
    if (closed_axis ? !closed.count(key) : !(common.count(key) || axis_key))
      throw ConfigError("config: unknown or inapplicable key '" + key + "'");
  }
  if (kv.has("power_grid") && kv.has("beta_grid"))
    throw ConfigError("config: specify exactly one sweep axis (power_grid or beta_grid), not both");
  if (axis == SweepAxis::power && kv.has("beta_grid"))
    throw ConfigError("config: sweep-power takes power_grid, not beta_grid");
  if (axis == SweepAxis::beta && kv.has("power_grid"))
    throw ConfigError("config: sweep-beta takes beta_grid, not power_grid");

  ExperimentConfig c;
  auto get = [&](const char* key) { return kv.get(key); };

  if (auto v = get("seed")) c.seed = detail::parse_uint(*v, "seed");
  if (auto v = get("workers")) {
    c.workers = static_cast<unsigned>(detail::parse_uint(*v, "workers"));
    if (c.workers < 1) throw ConfigError("config field 'workers': must be >= 1");
  }
  if (auto v = get("out")) c.output_path = *v;

  if (closed_axis) {
    if (auto v = get("rho_grid")) c.rho_grid = detail::parse_grid(*v, "rho_grid");
    for (double r : c.rho_grid)
      if (!(r > 0.0)) throw ConfigError("config field 'rho_grid': rho must be positive");
    c.dg_grid.clear();
    if (auto v = get("dg_grid"))
      c.dg_grid = detail::parse_grid(*v, "dg_grid");
    else
      for (int i = 1; i <= 16; ++i) c.dg_grid.push_back(0.5 * i);
    for (double d : c.dg_grid)
      if (!(d > 0.0)) throw ConfigError("config field 'dg_grid': DG values must be positive");
    if (auto v = get("dg_max")) c.dg_max = detail::parse_double(*v, "dg_max");
    if (!(c.dg_max > 0.0)) throw ConfigError("config field 'dg_max': must be positive");
    if (auto v = get("classes")) c.classes = static_cast<int>(detail::parse_uint(*v, "classes"));
    if (c.classes < 2) throw ConfigError("config field 'classes': need at least 2 classes");
    if (auto v = get("mc_draws")) c.mc_draws = detail::parse_uint(*v, "mc_draws");
    if (auto v = get("bound_trials")) c.bound_trials = detail::parse_uint(*v, "bound_trials");
    if (c.mc_draws < 1 || c.bound_trials < 1) throw ConfigError("config: Monte Carlo counts must be >= 1");
    return c;
  }

  if (auto v = get("model")) c.model_path = *v;
  if (auto v = get("model_classes")) c.synthetic.num_classes = static_cast<int>(detail::parse_uint(*v, "model_classes"));
  if (auto v = get("model_dims")) c.synthetic.num_dims = static_cast<int>(detail::parse_uint(*v, "model_dims"));
  if (auto v = get("model_seed")) c.synthetic.seed = detail::parse_uint(*v, "model_seed");
  if (auto v = get("mean_scale")) c.synthetic.mean_scale = detail::parse_double(*v, "mean_scale");
  if (auto v = get("variance_min")) c.synthetic.variance_min = detail::parse_double(*v, "variance_min");
  if (auto v = get("variance_max")) c.synthetic.variance_max = detail::parse_double(*v, "variance_max");

  if (auto v = get("criterion")) c.criterion = parse_criterion(*v);
  if (auto v = get("aggregation")) {
    if (*v == "worst_pair")
      c.aggregation = GapAggregation::worst_pair;
    else if (*v == "average_pairs")
      c.aggregation = GapAggregation::average_pairs;
    else
      throw ConfigError("config field 'aggregation': expected worst_pair or average_pairs");
  }
  if (auto v = get("trials")) c.trials = detail::parse_uint(*v, "trials");
  if (c.trials < 1) throw ConfigError("config field 'trials': must be >= 1");
  if (auto v = get("subcarriers")) c.subcarriers = static_cast<int>(detail::parse_uint(*v, "subcarriers"));

  const std::string channel = get("channel").value_or(kv.has("fixed_gains") ? "fixed" : "rayleigh");
  if (channel == "fixed") {
    const auto gains = get("fixed_gains");
    if (!gains) throw ConfigError("config: channel = fixed requires fixed_gains");
    std::vector<double> g;
    std::istringstream in(*gains);
    std::string tok;
    while (std::getline(in, tok, ',')) g.push_back(detail::parse_double(tok, "fixed_gains"));
    for (double x : g)
      if (!(x >= 0.0)) throw ConfigError("config field 'fixed_gains': gains must be >= 0");
    c.fixed_gains = std::move(g);
  } else if (channel != "rayleigh") {
    throw ConfigError("config field 'channel': expected rayleigh or fixed");
  }

  if (auto v = get("sensing_power")) c.sensing_power = PowerValue::parse(*v, "sensing_power");
  if (auto v = get("total_power")) c.total_power = PowerValue::parse(*v, "total_power");

  // SNR fields are referenced to the total power P.
  if (get("sensing_noise") && get("sensing_snr"))
    throw ConfigError("config: give sensing_noise or sensing_snr, not both");
  if (get("comm_noise") && get("comm_snr")) throw ConfigError("config: give comm_noise or comm_snr, not both");
  if (auto v = get("sensing_noise")) c.sensing_noise = PowerValue::parse(*v, "sensing_noise").linear;
  if (auto v = get("sensing_snr")) c.sensing_noise = c.total_power.linear / PowerValue::parse(*v, "sensing_snr").linear;
  if (auto v = get("comm_noise")) c.comm_noise = PowerValue::parse(*v, "comm_noise").linear;
  if (auto v = get("comm_snr")) c.comm_noise = c.total_power.linear / PowerValue::parse(*v, "comm_snr").linear;

  if (axis == SweepAxis::power) {
    if (auto v = get("power_grid")) {
      c.power_grid = PowerGrid::parse(*v, "power_grid");
    } else {
      c.power_grid.unit = PowerUnit::db;
      for (double db : default_power_grid_db()) c.power_grid.linear.push_back(db_to_linear(db));
    }
  } else {
    c.beta_grid = get("beta_grid") ? detail::parse_grid(*get("beta_grid"), "beta_grid") : default_beta_grid();
    for (double b : c.beta_grid)
      if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("config field 'beta_grid': beta must lie in [0, 1]");
  }
  return c;
}

inline std::vector<std::string> ExperimentConfig::describe(SweepAxis axis) const {
  std::vector<std::string> out;
  auto kv = [&](const std::string& k, const std::string& v) { out.push_back(k + " = " + v); };
  auto list = [](const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_number(xs[i]);
    return s;
  };
  kv("seed", std::to_string(seed));
  if (axis == SweepAxis::closed_forms) {
    kv("rho_grid", list(rho_grid) + " linear");
    kv("dg_grid", list(dg_grid));
    kv("dg_max", format_number(dg_max));
    kv("classes", std::to_string(classes));
    kv("mc_draws", std::to_string(mc_draws));
    kv("bound_trials", std::to_string(bound_trials));
    return out;
  }
  if (model_path) {
    kv("model", *model_path);
  } else {
    kv("model", "synthetic");
    kv("model_classes", std::to_string(synthetic.num_classes));
    kv("model_dims", std::to_string(synthetic.num_dims));
    kv("model_seed", std::to_string(synthetic.seed));
    kv("mean_scale", format_number(synthetic.mean_scale));
    kv("variance_min", format_number(synthetic.variance_min));
    kv("variance_max", format_number(synthetic.variance_max));
  }
  kv("criterion", criterion == CriterionSelection::both ? "both" : criterion == CriterionSelection::mse ? "mse" : "dg");
  kv("aggregation", aggregation == GapAggregation::worst_pair ? "worst_pair" : "average_pairs");
  kv("sensing_noise", format_number(sensing_noise) + " linear");
  kv("comm_noise", format_number(comm_noise) + " linear");
  if (axis == SweepAxis::power) {
    kv("sensing_power", format_number(sensing_power.linear) + " linear");
    kv("power_grid", list(power_grid.linear) + " linear");
  } else {
    kv("total_power", format_number(total_power.linear) + " linear");
    kv("beta_grid", list(beta_grid));
  }
  kv("trials", std::to_string(trials));
  kv("subcarriers", std::to_string(subcarriers));
  kv("channel", fixed_gains ? "fixed" : "rayleigh");
  if (fixed_gains) kv("fixed_gains", list(*fixed_gains));
  return out;
}

}  // namespace isac
