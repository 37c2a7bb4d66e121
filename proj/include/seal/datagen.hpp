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

#include "seal/hierarchy.hpp"

namespace seal {

// One feature vector with its per-level labels (coarse to fine). A label
// of -1 means unknown; known labels are consistent with the hierarchy.
struct Sample {
  std::string id;
  std::vector<double> features;
  std::vector<int> labels;
  bool is_labelled = false;

  int fine_label() const { return labels.back(); }
};

struct SyntheticOptions {
  std::size_t per_class = 100;
  std::size_t dim = 32;
  // One spread per level plus an optional trailing sample-noise scale
  // (levels()+1 values). With only levels() values the fine spread doubles
  // as the noise scale.
  std::vector<double> spreads;
  std::uint64_t seed = 0;
  // Ratio between the largest and smallest class size; 1 is balanced.
  double imbalance_ratio = 1.0;
};

// Tree-structured Gaussian mixture: level-0 centroids uniform on the sphere
// of radius spreads[0], child centroid = parent + N(0, s^2/d I) offsets with
// s = spreads[h], sample = leaf centroid + noise at the last scale.
std::vector<Sample> generate_synthetic(const HierarchySpec& spec, const SyntheticOptions& options);

// GCD protocol partition of a training set. Indices refer to the sample list.
struct GcdSplit {
  std::vector<std::size_t> labelled;
  std::vector<std::size_t> unlabelled;
  std::vector<std::size_t> old_classes;
  std::vector<std::size_t> all_classes;

  bool is_old(std::size_t fine_class) const;
};

// Chooses floor(old_fraction * K) old classes by a seeded shuffle.
GcdSplit make_gcd_split(std::span<const Sample> samples, const HierarchySpec& spec, double old_fraction,
                        double labelled_fraction, std::uint64_t seed);

// Same protocol with a fixed old-class set (e.g. "known" in a hierarchy file).
GcdSplit make_gcd_split(std::span<const Sample> samples, const HierarchySpec& spec,
                        std::span<const std::size_t> old_classes, double labelled_fraction, std::uint64_t seed);

// Moves a per-class `fraction` of the labelled indices into a held-out
// validation list. Returns the validation indices; `split.labelled` keeps
// the rest.
std::vector<std::size_t> reserve_validation(GcdSplit& split, std::span<const Sample> samples, double fraction,
                                            std::uint64_t seed);

// Checks per-level label consistency against the hierarchy.
void validate_samples(std::span<const Sample> samples, const HierarchySpec& spec);

// Relabels coarse levels of every sample from its fine label.
void relabel(std::vector<Sample>& samples, const HierarchySpec& spec);

enum class FloatPrecision { Double, Single };

// CSV columns: id, level_1..level_H, f_0..f_{d-1}.
void save_embeddings(std::span<const Sample> samples, std::size_t levels, const std::filesystem::path& path,
                     FloatPrecision precision = FloatPrecision::Double);

struct LoadedDataset {
  HierarchyDocument hierarchy;
  std::vector<Sample> samples;
};

LoadedDataset load_embeddings(const std::filesystem::path& features_path, const std::filesystem::path& hierarchy_path);

// Reads only the samples of a CSV, checked against `spec`.
std::vector<Sample> read_samples_csv(const std::filesystem::path& path, const HierarchySpec& spec,
                                     bool require_features);

// Stacks the features of `indices` (all samples when empty) into a matrix.
Eigen::MatrixXd feature_matrix(std::span<const Sample> samples, std::span<const std::size_t> indices);

}  // namespace seal
