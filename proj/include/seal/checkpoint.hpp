// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "seal/hierarchy.hpp"
#include "seal/model.hpp"

namespace seal {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Named little-endian float64 tensor, stored row-major.
struct CheckpointEntry {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<double> data;
};

// Layout: "SEAL", u32 version, u64 entry count, then per entry u32 name
// length, name bytes, u32 rank, u64 dims, f64 values.
void write_checkpoint(const std::filesystem::path& path, std::span<const CheckpointEntry> entries);
std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path);

struct ModelBundle {
  ModelState state;
  std::vector<TransitionMatrix> transitions;
  nlohmann::json metadata;
};

// Writes `path` plus a `<path>.json` metadata sidecar.
void save_model(const std::filesystem::path& path, const ModelState& state,
                std::span<const TransitionMatrix> transitions, const nlohmann::json& metadata);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace seal
