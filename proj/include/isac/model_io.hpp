#pragma once

// FeatureModel <-> JSON model file.
//
// Schema:
//   {
//     "format": "isac-feature-model",
//     "version": 1,
//     "num_classes": L,
//     "num_dims": M,
//     "means": [L*M numbers, row-major by class],
//     "variances": [M positive numbers],
//     "priors": [L numbers summing to 1]
//   }

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "isac/errors.hpp"
#include "isac/feature_model.hpp"

namespace isac {

inline constexpr const char* kModelFormat = "isac-feature-model";

inline std::string model_to_json(const FeatureModel& model) {
  nlohmann::ordered_json j;
  j["format"] = kModelFormat;
  j["version"] = 1;
  j["num_classes"] = model.num_classes();
  j["num_dims"] = model.num_dims();
  j["means"] = std::vector<double>(model.means().begin(), model.means().end());
  j["variances"] = std::vector<double>(model.variances().begin(), model.variances().end());
  j["priors"] = std::vector<double>(model.priors().begin(), model.priors().end());
  return j.dump(2) + "\n";
}

inline FeatureModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
  try {
    if (j.value("format", std::string()) != kModelFormat) throw ConfigError("model file: missing or wrong \"format\"");
    if (j.value("version", 0) != 1) throw ConfigError("model file: unsupported version");
    return FeatureModel(j.at("num_classes").get<int>(), j.at("num_dims").get<int>(),
                        j.at("means").get<std::vector<double>>(), j.at("variances").get<std::vector<double>>(),
                        j.at("priors").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
}

inline FeatureModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

inline void save_model(const FeatureModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write model file '" + path + "'");
  out << model_to_json(model);
  if (!out) throw ConfigError("failed writing model file '" + path + "'");
}

}  // namespace isac
