#pragma once

#include <filesystem>
#include <optional>

#include "dcop/nn/adam.hpp"
#include "dcop/nn/params.hpp"

namespace dcop::nn {

/// Binary checkpoint, little-endian:
///   "DCPM" | u32 version | u32 input_dim | u32 layers | (u32 heads, u32 channels) per layer
///   | i64 optimizer step | u32 flags | f64 output scale | u64 parameter count | f32 parameters
///   | (f32 first moments, f32 second moments) when flags bit 0 is set.
/// Flags bit 1 records that the model was trained on cost features scaled by 1/100.
/// Predictions are the output scale times the network output.
/// Parameters follow ModelParams' flat order. A JSON manifest with the same header
/// fields is written next to it as <path>.json.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams<float> params;
  long long step = 0;
  std::optional<Vector<float>> first;
  std::optional<Vector<float>> second;
  bool normalize_costs = false;
  double output_scale = 1;
};

struct CheckpointOptions {
  bool normalize_costs = false;
  double output_scale = 1;
};

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     const AdamState<float>* optimizer = nullptr, const CheckpointOptions& options = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

inline void save_params(const std::filesystem::path& path, const ModelParams<float>& params) {
  save_checkpoint(path, params);
}
inline ModelParams<float> load_params(const std::filesystem::path& path) { return load_checkpoint(path).params; }

}  // namespace dcop::nn
