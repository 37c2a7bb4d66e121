// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "seal/hierarchy.hpp"
#include "seal/losses.hpp"
#include "seal/trainer.hpp"

namespace seal {

enum class HierarchyMode { True, Random, Flat };

std::string to_string(HierarchyMode mode);
HierarchyMode hierarchy_mode_from_string(const std::string& name);

// Where training data comes from: an embeddings CSV plus hierarchy file,
// or the synthetic generator when `features` is empty.
struct DataConfig {
  std::string features;
  std::string hierarchy;
  std::vector<std::size_t> counts = {4, 12, 24};
  std::size_t per_class = 100;
  std::size_t dim = 32;
  std::vector<double> spreads = {4.0, 1.8, 1.0, 0.45};
  std::uint64_t data_seed = 0;
  double imbalance_ratio = 1.0;
  double old_fraction = 0.5;
  double labelled_fraction = 0.5;
  std::uint64_t split_seed = 0;
  HierarchyMode hierarchy_mode = HierarchyMode::True;
  std::uint64_t hierarchy_seed = 0;

  void validate() const;
};

struct RunConfig {
  TrainConfig train;
  LossConfig loss;
  DataConfig data;

  void validate() const;
};

// Strict parse: unknown keys and mistyped values are FormatErrors naming
// the offending key.
RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

// Synthetic taxonomy with `counts` classes per level, children spread
// evenly (contiguous blocks) over their parents.
HierarchySpec balanced_hierarchy(const std::vector<std::size_t>& counts);

}  // namespace seal
