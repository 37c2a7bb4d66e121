// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "seal/datagen.hpp"
#include "seal/eval.hpp"
#include "seal/hierarchy.hpp"
#include "seal/losses.hpp"
#include "seal/model.hpp"

namespace seal {

enum class TransitionCadence { Epoch, Batch };

std::string to_string(TransitionCadence cadence);
TransitionCadence transition_cadence_from_string(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  double lr_initial = 0.1;
  double lr_final = 1e-4;
  bool cosine = true;  // constant lr_initial otherwise
  double momentum = 0.9;
  double weight_decay = 5e-5;  // encoder only
  std::uint64_t seed = 0;
  double view_noise = 0.1;
  TransitionCadence transition_update = TransitionCadence::Epoch;
  double validation_fraction = 0.2;
  std::size_t threads = 1;  // evaluation forward passes only
  ModelConfig model;

  void validate() const;
};

double cosine_lr(std::size_t t, std::size_t total, double lr0, double lr_final);

// Linear 1 -> 0 over [0, total].
double curriculum_lambda(std::size_t t, std::size_t total);

// Linear start -> end; t is clamped to the horizon.
double curriculum_lambda(std::size_t t, std::size_t total, double start, double end);

// Adds N(0, scale^2) to every coordinate; with `renormalize` each row is
// rescaled back to its original norm.
Eigen::MatrixXd perturb(const Eigen::MatrixXd& batch, double scale, std::mt19937_64& rng, bool renormalize = true);

struct ViewPair {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
};

ViewPair make_views(const Eigen::MatrixXd& batch, double scale, std::mt19937_64& rng);
ViewPair make_views(const Eigen::MatrixXd& batch, double scale, std::uint64_t seed);

// Draws half of every batch from the labelled pool and half from the
// unlabelled pool (all from one pool when the other is empty). Each pool is
// walked in a seeded random order and reshuffled when exhausted.
class BatchSampler {
 public:
  BatchSampler(std::vector<std::size_t> labelled, std::vector<std::size_t> unlabelled, std::size_t batch_size,
               std::uint64_t seed);

  std::vector<std::size_t> next();
  std::size_t steps_per_epoch() const;

 private:
  struct Pool {
    std::vector<std::size_t> items;
    std::size_t cursor = 0;
  };
  void take(Pool& pool, std::size_t count, std::vector<std::size_t>& out);

  Pool labelled_;
  Pool unlabelled_;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
};

// One training batch: two views plus per-level labels (-1 = unlabelled).
struct BatchInput {
  Eigen::MatrixXd view_a;
  Eigen::MatrixXd view_b;
  std::vector<std::vector<int>> labels;  // levels x rows
};

// Selects which objective terms contribute (used to isolate terms).
struct ObjectiveTerms {
  bool cls = true;
  bool hscl = true;
  bool supcon = true;
  bool cgc = true;
  std::optional<std::size_t> only_level;  // per-level terms restricted to one level
};

struct ObjectiveResult {
  double total = 0.0;
  LossComponents components;
  std::vector<double> hscl;    // per level
  std::vector<double> supcon;  // per level
  ModelGradients grads;
  ForwardTrace trace_a;
  ForwardTrace trace_b;
};

// Full per-batch objective and its gradient. Detached quantities (sharpened
// targets, soft labels, the detached CGC target and Gamma-blocked slices)
// come from the frozen traces when given, otherwise from the live ones.
ObjectiveResult evaluate_objective(const ModelState& state, const BatchInput& batch,
                                   std::span<const TransitionMatrix> transitions, const LossConfig& cfg,
                                   double lambda_c, const ObjectiveTerms& terms = {},
                                   const ForwardTrace* frozen_a = nullptr, const ForwardTrace* frozen_b = nullptr,
                                   bool with_gradients = true);

// SGD with momentum; weight decay on the encoder, projected gradients and
// renormalization for the prototypes.
class SgdOptimizer {
 public:
  SgdOptimizer(const ModelState& state, double momentum, double weight_decay);
  void step(ModelState& state, ModelGradients grads, double lr);

 private:
  ModelGradients velocity_;
  double momentum_;
  double weight_decay_;
};

// Per-level argmax predictions (levels x rows), lowest index on ties. Rows
// are processed in `threads` ordered chunks.
std::vector<std::vector<int>> predict(const ModelState& state, const Eigen::MatrixXd& x, std::size_t threads = 1);

// Per-level posteriors at temperature `temperature` on the logits.
std::vector<Eigen::MatrixXd> posteriors(const ModelState& state, const Eigen::MatrixXd& x, double temperature,
                                        std::size_t threads = 1);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double lambda_c = 0.0;
  double total = 0.0;
  double cgc = 0.0;
  std::vector<double> soft_rep;
  std::vector<double> cls;
  std::vector<double> hscl;
  std::vector<double> supcon;
  std::vector<double> val_acc;  // per level, old classes only
  EvalReport unlabelled;
};

nlohmann::json to_json(const EpochRecord& record);

struct RunRecord {
  std::vector<EpochRecord> epochs;
  EvalReport final_report;
  nlohmann::json config;
  double wall_clock_seconds = 0.0;
};

struct TrainResult {
  ModelState state;
  std::vector<TransitionMatrix> transitions;
  RunRecord record;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains on the split's labelled and unlabelled indices; `validation`
// holds the held-out labelled indices. Level-h labels of labelled samples
// are projected from their fine labels through `spec`.
TrainResult train(std::span<const Sample> samples, const GcdSplit& split, std::span<const std::size_t> validation,
                  const HierarchySpec& spec, const TrainConfig& train_cfg, const LossConfig& loss_cfg,
                  const EpochCallback& on_epoch = {});

// Evaluates a model on `indices` against truths projected through `spec`.
EvalReport evaluate_model(const ModelState& state, std::span<const Sample> samples,
                          std::span<const std::size_t> indices, const HierarchySpec& spec,
                          std::span<const std::size_t> old_classes, std::size_t threads = 1);

}  // namespace seal
