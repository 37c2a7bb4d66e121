// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace seal {

struct ModelConfig {
  std::size_t input_dim = 32;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t proj_dim = 48;
};

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

// Encoder MLP (GELU hidden layers, linear projection), per-level slice
// offsets into the projection, and one unit-norm prototype matrix per level.
struct ModelState {
  std::vector<Layer> layers;  // hidden layers followed by the projection
  std::vector<std::size_t> slice_bounds;
  std::vector<Eigen::MatrixXd> prototypes;  // n_h x proj_dim
  double tau = 0.1;
  double tau_sharp = 0.07;

  std::size_t levels() const { return prototypes.size(); }
  std::size_t proj_dim() const { return slice_bounds.back(); }
  std::size_t slice_width(std::size_t h) const { return slice_bounds[h + 1] - slice_bounds[h]; }
};

// Equal slices of proj_dim across `levels`, remainder to the finest level.
std::vector<std::size_t> make_slice_bounds(std::size_t proj_dim, std::size_t levels);

ModelState init_model(const ModelConfig& config, std::span<const std::size_t> level_counts, double tau,
                      double tau_sharp, std::uint64_t seed);

// Gradient-controlled concatenation for one level: the value is the
// normalized concatenation of every slice, `pass[j]` tells whether slice j
// receives gradient through it (j <= level).
struct Aggregated {
  Eigen::MatrixXd value;
  Eigen::VectorXd norm;  // of the concatenation before normalization
  std::vector<bool> pass;
};

Aggregated aggregate(std::span<const Eigen::MatrixXd> slices, std::size_t level);

struct ForwardTrace {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;  // hidden pre-activations
  std::vector<Eigen::MatrixXd> act;  // hidden activations
  Eigen::MatrixXd projection;        // z
  std::vector<Eigen::VectorXd> slice_norms;
  std::vector<Eigen::MatrixXd> slices;      // L2-normalized z_h
  std::vector<Eigen::MatrixXd> aggregated;  // per level
  std::vector<Eigen::VectorXd> aggregated_norms;
  std::vector<Eigen::MatrixXd> scores;  // cosine to each prototype
  std::vector<Eigen::MatrixXd> logits;  // scores / tau
  std::vector<Eigen::MatrixXd> probs;
};

// When `frozen` is given, the gradient-blocked slices of every level take
// their values from it instead of the live computation. This is the
// function whose exact derivative backward() returns, which makes it the
// finite-difference reference for stop-gradient paths.
ForwardTrace forward(const ModelState& state, const Eigen::MatrixXd& x, const ForwardTrace* frozen = nullptr);

// Per-level upstream gradients. Empty matrices mean zero.
struct UpstreamGradients {
  std::vector<Eigen::MatrixXd> logits;  // dL/dlogits_h
  std::vector<Eigen::MatrixXd> slices;  // dL/d(normalized z_h)

  static UpstreamGradients zeros_like(const ModelState& state);
};

struct ModelGradients {
  std::vector<Layer> layers;
  std::vector<Eigen::MatrixXd> prototypes;

  static ModelGradients zeros_like(const ModelState& state);
  ModelGradients& operator+=(const ModelGradients& other);
};

ModelGradients backward(const ModelState& state, const ForwardTrace& trace, const UpstreamGradients& upstream);

// Removes the radial component of every prototype gradient.
void project_prototype_gradients(const ModelState& state, ModelGradients& grads);
void renormalize_prototypes(ModelState& state);
double max_prototype_norm_error(const ModelState& state);

// Flat parameter views, ordered layer by layer (weight, bias) then
// prototypes level by level.
Eigen::VectorXd flatten_parameters(const ModelState& state);
void assign_parameters(ModelState& state, const Eigen::VectorXd& flat);
Eigen::VectorXd flatten_gradients(const ModelGradients& grads);
std::size_t parameter_count(const ModelState& state);

}  // namespace seal
