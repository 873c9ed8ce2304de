#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rae/aeset.hpp"
#include "rae/errors.hpp"

namespace rae {

constexpr int kModelFormatVersion = 1;

inline nlohmann::json ae_to_json(const Autoencoder& ae) {
  nlohmann::json j;
  j["id"] = ae.id;
  j["width"] = ae.width();
  j["height"] = ae.height();
  j["layer_sizes"] = ae.layer_sizes();
  std::vector<std::string> acts;
  for (const Activation a : ae.activations()) acts.emplace_back(activation_name(a));
  j["activations"] = acts;
  j["weights"] = ae.weights();
  j["biases"] = ae.biases();
  j["normalizer"] = {{"count", ae.normalizer.count},
                     {"sum", ae.normalizer.sum},
                     {"sum_sq", ae.normalizer.sum_sq},
                     {"coefficient", ae.normalizer.coefficient}};
  return j;
}

inline Autoencoder ae_from_json(const nlohmann::json& j) {
  const auto layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  std::vector<Activation> acts;
  for (const auto& name : j.at("activations")) acts.push_back(activation_from_name(name.get<std::string>()));
  Autoencoder ae(j.at("width").get<int>(), j.at("height").get<int>(), layer_sizes, acts);
  ae.id = j.at("id").get<int>();
  ae.mutable_weights() = j.at("weights").get<std::vector<std::vector<double>>>();
  ae.mutable_biases() = j.at("biases").get<std::vector<std::vector<double>>>();
  const auto& sizes = ae.layer_sizes();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (ae.weights()[l].size() != static_cast<std::size_t>(sizes[l + 1]) * sizes[l] ||
        ae.biases()[l].size() != static_cast<std::size_t>(sizes[l + 1]))
      throw InvalidInput("model file: weight/bias shapes inconsistent with layer sizes");
  }
  if (!ae.parameters_finite()) throw InvalidInput("model file: non-finite parameters");
  const auto& n = j.at("normalizer");
  ae.normalizer.count = n.at("count").get<std::uint64_t>();
  ae.normalizer.sum = n.at("sum").get<double>();
  ae.normalizer.sum_sq = n.at("sum_sq").get<double>();
  ae.normalizer.coefficient = n.at("coefficient").get<double>();
  return ae;
}

inline nlohmann::json ae_set_to_json(const AeSet& set) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["input_width"] = set.input_width();
  j["input_height"] = set.input_height();
  j["threshold"] = set.threshold;
  j["aes"] = nlohmann::json::array();
  for (const Autoencoder& ae : set.aes) j["aes"].push_back(ae_to_json(ae));
  return j;
}

inline AeSet ae_set_from_json(const nlohmann::json& j) {
  if (!j.contains("format_version"))
    throw InvalidInput("model file: missing format_version");
  const int version = j.at("format_version").get<int>();
  if (version != kModelFormatVersion)
    throw InvalidInput("model file: unsupported format_version " + std::to_string(version));
  AeSet set;
  set.threshold = j.at("threshold").get<double>();
  for (const auto& ae_json : j.at("aes")) set.aes.push_back(ae_from_json(ae_json));
  set.validate();
  return set;
}

// Serialized text of a model; identical sets produce identical bytes.
inline std::string serialize_ae_set(const AeSet& set) { return ae_set_to_json(set).dump(); }

inline void save_ae_set(const AeSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open model file for writing: " + path);
  out << serialize_ae_set(set) << "\n";
  if (!out) throw IoError("failed writing model file: " + path);
}

inline AeSet load_ae_set(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("model file " + path + " is not valid JSON: " + e.what());
  }
  return ae_set_from_json(j);
}

}  // namespace rae
