// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace seal {

// Semantic taxonomy. Levels are indexed from 0 (coarsest) to levels()-1
// (the target granularity). parents[h][c] is the level-h parent of class c
// at level h+1.
struct HierarchySpec {
  std::vector<std::size_t> counts;
  std::vector<std::vector<std::size_t>> parents;

  std::size_t levels() const { return counts.size(); }
  std::size_t fine_level() const { return counts.size() - 1; }
  std::size_t fine_count() const { return counts.back(); }

  // Throws InputError when counts/parents violate the taxonomy invariants.
  void validate() const;

  bool operator==(const HierarchySpec&) const = default;
};

// A hierarchy as stored on disk: the taxonomy plus the known (old) fine
// classes and optional per-level class names.
struct HierarchyDocument {
  HierarchySpec spec;
  std::vector<std::size_t> known;
  std::vector<std::vector<std::string>> names;
};

HierarchyDocument hierarchy_from_json(const nlohmann::json& doc);
nlohmann::json hierarchy_to_json(const HierarchyDocument& doc);
HierarchyDocument load_hierarchy(const std::filesystem::path& path);
void save_hierarchy(const HierarchyDocument& doc, const std::filesystem::path& path);

// Ancestor of a fine class at `level`; identity at the fine level.
std::size_t fine_to_level(const HierarchySpec& spec, std::size_t fine_label, std::size_t level);

// fine_to_level for every fine class, as a lookup table.
std::vector<std::size_t> level_map(const HierarchySpec& spec, std::size_t level);

// Single-level taxonomy over the same fine classes.
HierarchySpec flatten(const HierarchySpec& spec);

// Same counts, parent maps replaced by uniformly random surjections.
HierarchySpec random_hierarchy(const HierarchySpec& spec, std::uint64_t seed);

// Row-stochastic map from fine posteriors to pseudo-posteriors at `level`.
// Rows flagged in `fixed` belong to known fine classes and stay one-hot.
struct TransitionMatrix {
  std::size_t level = 0;
  Eigen::MatrixXd entries;
  std::vector<bool> fixed;
};

TransitionMatrix init_transition(const HierarchySpec& spec,
                                 std::span<const std::size_t> known_classes,
                                 std::size_t level);

// One init_transition per non-fine level.
std::vector<TransitionMatrix> init_transitions(const HierarchySpec& spec,
                                               std::span<const std::size_t> known_classes);

// Momentum update of the novel rows. Row k moves toward the mean coarse
// posterior of the samples whose fine argmax is k (ties go to the lower
// index); rows with no such samples are left alone.
TransitionMatrix update_transition(const TransitionMatrix& m,
                                   const Eigen::MatrixXd& coarse_probs,
                                   const Eigen::MatrixXd& fine_probs,
                                   double momentum);

// Index of the largest entry of row `r`, lowest index on ties.
std::size_t row_argmax(const Eigen::MatrixXd& m, Eigen::Index r);

}  // namespace seal
