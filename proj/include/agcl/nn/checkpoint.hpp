#pragma once

#include "agcl/nn/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace agcl::nn {

/// Checkpoint file layout:
///
///   "AGCLCKPT" | u32 version | u64 header bytes | JSON header | tensor data
///
/// The header carries the model kind, scalar type, tensor index (name, rows,
/// cols, byte offset), epoch counter, RNG state, and a free-form config echo.
/// Tensor data is raw little-endian column-major.
struct CheckpointMeta {
  nlohmann::json config = nlohmann::json::object();
  int epoch = 0;
  std::string rng_state;
  nlohmann::json extra = nlohmann::json::object();
};

void save_checkpoint(const std::filesystem::path& path, const MultiLabelModel<float>& model,
                     const CheckpointMeta& meta);
void save_checkpoint(const std::filesystem::path& path, const BinaryModel<float>& model,
                     const CheckpointMeta& meta);

MultiLabelModel<float> load_multilabel(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);
BinaryModel<float> load_binary(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

/// Header kind without reading tensors ("multilabel" or "binary").
std::string checkpoint_kind(const std::filesystem::path& path);

}  // namespace agcl::nn
