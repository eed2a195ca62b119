#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "csc/nn.hpp"

namespace csc {

// Model checkpoint layout (all little-endian):
//   "CSC1" | u32 version | u32 kind=1
//   u32 height, width, channels, conv1, conv2, feature_dim, num_outputs
//   u8 freeze_extractor | u64 rng_seed
//   8 x (u64 count, count x f32) tensors in declaration order
//   u32 metadata entries, each (u32 len, key bytes, u32 len, value bytes)
using CheckpointMetadata = std::map<std::string, std::string>;

void save_model(const Model& model, const std::filesystem::path& path, const CheckpointMetadata& meta = {});

struct LoadedModel {
  Model model;
  CheckpointMetadata metadata;
};

LoadedModel load_model(const std::filesystem::path& path);

}  // namespace csc
