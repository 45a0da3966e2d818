#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "alrec/core/error.hpp"
#include "alrec/nn/mlp.hpp"

namespace alrec::nn {

inline constexpr int kModelFormatVersion = 1;

/// JSON form: topology, activations, row-major weights and biases. Doubles
/// are written in shortest round-trip form, so save -> load is bit-exact.
inline nlohmann::json model_to_json(const MlpModel& model, std::uint64_t seed) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    }
    layers.push_back({{"fan_in", l.fan_in()},
                      {"fan_out", l.fan_out()},
                      {"activation", to_string(l.activation)},
                      {"weights", std::move(w)},
                      {"biases", std::vector<double>(l.biases.data(), l.biases.data() + l.biases.size())}});
  }
  return {{"format", "alrec-mlp"},
          {"version", kModelFormatVersion},
          {"seed", seed},
          {"input_size", model.input_size()},
          {"output_size", model.output_size()},
          {"layers", std::move(layers)}};
}

struct LoadedModel {
  MlpModel model;
  std::uint64_t seed = 0;
};

inline LoadedModel model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "alrec-mlp") throw IoError("not an alrec-mlp document");
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw IoError("unsupported model format version " + std::to_string(version));
    }
    std::vector<DenseLayer> layers;
    for (const auto& jl : doc.at("layers")) {
      const auto fan_in = jl.at("fan_in").get<Eigen::Index>();
      const auto fan_out = jl.at("fan_out").get<Eigen::Index>();
      const auto w = jl.at("weights").get<std::vector<double>>();
      const auto b = jl.at("biases").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != fan_in * fan_out || static_cast<Eigen::Index>(b.size()) != fan_out) {
        throw IoError("layer array sizes do not match its declared shape");
      }
      DenseLayer layer;
      layer.activation = activation_from_string(jl.at("activation").get<std::string>());
      layer.weights.resize(fan_out, fan_in);
      std::size_t i = 0;
      for (Eigen::Index r = 0; r < fan_out; ++r) {
        for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = w[i++];
      }
      layer.biases = Eigen::Map<const Vector>(b.data(), fan_out);
      layers.push_back(std::move(layer));
    }
    LoadedModel out{MlpModel(std::move(layers)), doc.at("seed").get<std::uint64_t>()};
    if (out.model.input_size() != doc.at("input_size").get<std::size_t>() ||
        out.model.output_size() != doc.at("output_size").get<std::size_t>()) {
      throw IoError("declared input/output size disagrees with layers");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace alrec::nn
