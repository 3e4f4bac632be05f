// attfuse/checkpoint.hpp

// Copyright 2026  attfuse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Versioned checkpoint container:
//   magic | version | manifest length | manifest JSON | raw float32 blob
// The manifest stores the full model config, the variant, and one
// {name, shape, offset} record per parameter; loading validates every shape.

#ifndef ATTFUSE_CHECKPOINT_HPP_
#define ATTFUSE_CHECKPOINT_HPP_

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "attfuse/errors.hpp"
#include "attfuse/model.hpp"

namespace attfuse {

inline constexpr uint32_t kCheckpointMagic = 0x50434641;  // "AFCP"
inline constexpr uint32_t kCheckpointVersion = 1;

inline nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["mel"] = {{"sample_rate", cfg.mel.sample_rate},
              {"n_fft", cfg.mel.n_fft},
              {"n_mels", cfg.mel.n_mels},
              {"hop_length", cfg.mel.hop_length},
              {"chunk_length_s", cfg.mel.chunk_length_s},
              {"power_floor", cfg.mel.power_floor},
              {"dynamic_range", cfg.mel.dynamic_range},
              {"normalize", cfg.mel.normalize}};
  j["vocab_capacity"] = cfg.vocab_capacity;
  j["max_length"] = cfg.max_length;
  j["conv1_filters"] = cfg.conv1_filters;
  j["conv2_filters"] = cfg.conv2_filters;
  j["kernel"] = cfg.kernel;
  j["stride1"] = cfg.stride1;
  j["stride2"] = cfg.stride2;
  j["d_model"] = cfg.d_model;
  j["n_heads"] = cfg.n_heads;
  j["n_layers"] = cfg.n_layers;
  j["ffn_dim"] = cfg.ffn_dim;
  j["dropout"] = cfg.dropout;
  j["lstm_units"] = cfg.lstm_units;
  j["lstm_dropout"] = cfg.lstm_dropout;
  j["fusion_dim"] = cfg.fusion_dim;
  j["fusion_eps"] = cfg.fusion_eps;
  return j;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  const auto& m = j.at("mel");
  cfg.mel.sample_rate = m.at("sample_rate").get<int>();
  cfg.mel.n_fft = m.at("n_fft").get<int>();
  cfg.mel.n_mels = m.at("n_mels").get<int>();
  cfg.mel.hop_length = m.at("hop_length").get<int>();
  cfg.mel.chunk_length_s = m.at("chunk_length_s").get<int>();
  cfg.mel.power_floor = m.at("power_floor").get<double>();
  cfg.mel.dynamic_range = m.at("dynamic_range").get<double>();
  cfg.mel.normalize = m.at("normalize").get<bool>();
  cfg.vocab_capacity = j.at("vocab_capacity").get<int>();
  cfg.max_length = j.at("max_length").get<int>();
  cfg.conv1_filters = j.at("conv1_filters").get<int>();
  cfg.conv2_filters = j.at("conv2_filters").get<int>();
  cfg.kernel = j.at("kernel").get<int>();
  cfg.stride1 = j.at("stride1").get<int>();
  cfg.stride2 = j.at("stride2").get<int>();
  cfg.d_model = j.at("d_model").get<int>();
  cfg.n_heads = j.at("n_heads").get<int>();
  cfg.n_layers = j.at("n_layers").get<int>();
  cfg.ffn_dim = j.at("ffn_dim").get<int>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.lstm_units = j.at("lstm_units").get<int>();
  cfg.lstm_dropout = j.at("lstm_dropout").get<double>();
  cfg.fusion_dim = j.at("fusion_dim").get<int>();
  cfg.fusion_eps = j.at("fusion_eps").get<double>();
  return cfg;
}

template <typename T>
void save_checkpoint(const std::string& path, Model<T>& model) {
  ParamMap<T> params = model.parameters();

  nlohmann::json manifest;
  manifest["config"] = model_config_to_json(model.cfg);
  manifest["variant"] = variant_name(model.variant);
  int64_t offset = 0;
  for (const auto& [name, p] : params.entries) {
    manifest["params"].push_back(
        {{"name", name}, {"shape", p.shape()}, {"offset", offset}});
    offset += p.size();
  }
  const std::string manifest_str = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open for writing: " + path);
  const uint32_t magic = kCheckpointMagic, version = kCheckpointVersion;
  const uint64_t manifest_len = manifest_str.size();
  out.write(reinterpret_cast<const char*>(&magic), 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&manifest_len), 8);
  out.write(manifest_str.data(),
            static_cast<std::streamsize>(manifest_str.size()));
  for (const auto& [name, p] : params.entries) {
    for (const T v : p.values()) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
  if (!out) throw CheckpointError("write failed: " + path);
}

template <typename T>
Model<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);

  uint32_t magic = 0, version = 0;
  uint64_t manifest_len = 0;
  in.read(reinterpret_cast<char*>(&magic), 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&manifest_len), 8);
  if (!in || magic != kCheckpointMagic) {
    throw CheckpointError("bad checkpoint magic in: " + path);
  }
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version in: " + path);
  }
  std::string manifest_str(manifest_len, '\0');
  in.read(manifest_str.data(), static_cast<std::streamsize>(manifest_len));
  if (!in) throw CheckpointError("truncated checkpoint manifest in: " + path);

  nlohmann::json manifest;
  ModelConfig cfg;
  Variant variant;
  try {
    manifest = nlohmann::json::parse(manifest_str);
    cfg = model_config_from_json(manifest.at("config"));
    variant = variant_from_name(manifest.at("variant").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed checkpoint manifest in " + path + ": " +
                          e.what());
  } catch (const Error& e) {
    throw CheckpointError("malformed checkpoint manifest in " + path + ": " +
                          e.what());
  }

  Model<T> model(cfg, variant, 0);
  ParamMap<T> params = model.parameters();
  const auto& records = manifest.at("params");
  if (records.size() != params.size()) {
    throw CheckpointError("checkpoint parameter count mismatch in: " + path);
  }
  for (size_t i = 0; i < params.size(); ++i) {
    auto& [name, p] = params.entries[i];
    const auto& rec = records.at(i);
    if (rec.at("name").get<std::string>() != name) {
      throw CheckpointError("checkpoint parameter order mismatch at '" + name +
                            "' in: " + path);
    }
    const auto shape = rec.at("shape").get<std::vector<int>>();
    if (shape != p.shape()) {
      throw CheckpointError("checkpoint shape mismatch for '" + name +
                            "' in: " + path);
    }
    auto& values = p.mutable_values();
    for (size_t j = 0; j < values.size(); ++j) {
      float f;
      in.read(reinterpret_cast<char*>(&f), 4);
      values[j] = static_cast<T>(f);
    }
  }
  if (!in) throw CheckpointError("truncated checkpoint data in: " + path);
  return model;
}

}  // namespace attfuse

#endif  // ATTFUSE_CHECKPOINT_HPP_
