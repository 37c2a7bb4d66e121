// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "seal/hierarchy.hpp"

namespace seal {

// Maximum-weight perfect matching on a square integer matrix
// (Kuhn-Munkres). Returns the column matched to every row.
std::vector<std::size_t> max_weight_assignment(const std::vector<std::vector<std::int64_t>>& weight);

struct AccResult {
  double acc = 0.0;
  std::size_t matched = 0;
  // assignment[cluster] = class; -1 for clusters matched to padding.
  std::vector<int> assignment;
};

// Clustering accuracy under the optimal one-to-one cluster-to-class map.
// The contingency matrix is padded to square when predicted cluster ids
// exceed K.
AccResult hungarian_acc(std::span<const int> y_true, std::span<const int> y_pred, std::size_t num_classes);

struct SplitAcc {
  std::optional<double> old_acc;  // absent when no sample is old
  std::optional<double> new_acc;  // absent when no sample is new
};

// Old/New accuracies reusing one assignment computed over all samples.
SplitAcc split_acc(std::span<const int> y_true, std::span<const int> y_pred, std::span<const std::size_t> old_classes,
                   std::span<const int> assignment);

// Old/New accuracies with a separate assignment per subset (diagnostics).
SplitAcc split_acc_separate(std::span<const int> y_true, std::span<const int> y_pred,
                            std::span<const std::size_t> old_classes, std::size_t num_classes);

// For each coarse level h, the fraction of samples whose predicted fine
// class has the predicted level-h class as ancestor. `fine_assignment`
// (cluster -> class) is applied to fine predictions first when given.
std::vector<double> consistency_rate(std::span<const int> pred_fine, std::span<const std::vector<int>> pred_coarse,
                                     const HierarchySpec& spec, std::span<const int> fine_assignment = {});

struct LevelAcc {
  double all = 0.0;
  std::optional<double> old_acc;  // samples whose fine class is old
  std::optional<double> new_acc;
};

struct EvalReport {
  double acc_all = 0.0;
  std::optional<double> acc_old;
  std::optional<double> acc_new;
  std::vector<int> assignment;
  std::vector<LevelAcc> levels;  // coarse to fine, one assignment per level
  std::vector<double> consistency;
  std::size_t samples = 0;
};

// Full report over per-level truths and predictions (levels x samples).
// Samples whose fine truth is -1 are skipped.
EvalReport evaluate(std::span<const std::vector<int>> truth, std::span<const std::vector<int>> pred,
                    const HierarchySpec& spec, std::span<const std::size_t> old_classes, bool separate_assignment = false);

nlohmann::json to_json(const EvalReport& report);

}  // namespace seal
