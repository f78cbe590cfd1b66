// isac: sensing/communication transceiver experiments.
//
//   isac gen-model    --classes 4 --dims 8 --seed 7 --out model.json
//   isac sweep-power  --config power.cfg --out power.csv
//   isac sweep-beta   --config beta.cfg --out beta.csv
//   isac closed-forms --config forms.cfg --out forms.csv
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "isac/commands.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<std::string> criterion;
  std::optional<unsigned> workers;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_criterion) {
  cmd->add_option("--config", f.config_path, "key-value experiment config file");
  cmd->add_option("--out", f.out, "output CSV path (default: stdout)");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--trials", f.trials, "Monte Carlo trials per grid point");
  if (with_criterion) cmd->add_option("--criterion", f.criterion, "mse | dg | both");
  cmd->add_option("--workers", f.workers, "worker threads (output does not depend on this)");
}

isac::ExperimentConfig load_config(const CommonFlags& f, isac::SweepAxis axis) {
  isac::KeyValueFile kv = f.config_path.empty() ? isac::KeyValueFile{} : isac::KeyValueFile::load(f.config_path);
  if (f.seed) kv.set("seed", std::to_string(*f.seed));
  if (f.trials) kv.set(axis == isac::SweepAxis::closed_forms ? "mc_draws" : "trials", std::to_string(*f.trials));
  if (f.criterion) kv.set("criterion", *f.criterion);
  if (f.workers) kv.set("workers", std::to_string(*f.workers));
  if (!f.out.empty()) kv.set("out", f.out);
  return isac::resolve_config(kv, axis);
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw isac::ConfigError("cannot write output file '" + path + "'");
  out << text;
  if (!out) throw isac::ConfigError("failed writing output file '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inference-oriented sensing and communication transceiver experiments"};
  app.require_subcommand(1);

  isac::SyntheticModelParams gen;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-model", "write a synthetic Gaussian-mixture feature model");
  gen_cmd->add_option("--classes", gen.num_classes, "number of classes L")->capture_default_str();
  gen_cmd->add_option("--dims", gen.num_dims, "feature dimension M")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--mean-scale", gen.mean_scale, "scale of the N(0,1) class means")->capture_default_str();
  gen_cmd->add_option("--var-min", gen.variance_min, "smallest per-dimension variance")->capture_default_str();
  gen_cmd->add_option("--var-max", gen.variance_max, "largest per-dimension variance")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "model file path (default: stdout)");

  CommonFlags power_flags, beta_flags, forms_flags;
  auto* power_cmd = app.add_subcommand("sweep-power", "DG, bound and accuracy versus communication power");
  add_common(power_cmd, power_flags, true);
  auto* beta_cmd = app.add_subcommand("sweep-beta", "accuracy versus sensing/communication split ratio");
  add_common(beta_cmd, beta_flags, true);
  auto* forms_cmd = app.add_subcommand("closed-forms", "closed-form expressions against Monte Carlo");
  add_common(forms_cmd, forms_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen_cmd) {
      emit(isac::cmd_gen_model(gen), gen_out);
    } else if (*power_cmd) {
      const auto config = load_config(power_flags, isac::SweepAxis::power);
      emit(isac::cmd_sweep_power(config), config.output_path);
    } else if (*beta_cmd) {
      const auto config = load_config(beta_flags, isac::SweepAxis::beta);
      emit(isac::cmd_sweep_beta(config), config.output_path);
    } else if (*forms_cmd) {
      const auto config = load_config(forms_flags, isac::SweepAxis::closed_forms);
      emit(isac::cmd_closed_forms(config), config.output_path);
    }
  } catch (const isac::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
