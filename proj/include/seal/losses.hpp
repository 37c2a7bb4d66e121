// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seal/hierarchy.hpp"

namespace seal {

// How per-level similarity matrices are combined with their coarser levels.
enum class FusionRule {
  CumulativeMean,  // mean of S_1..S_h
  Max,             // elementwise max of S_1..S_h
  PairwiseMean,    // mean of S_{h-1} and S_h
};

std::string to_string(FusionRule rule);
FusionRule fusion_rule_from_string(const std::string& name);

struct LossConfig {
  double tau = 0.1;         // classifier temperature
  double tau_sharp = 0.07;  // pseudo-label sharpening temperature
  double lambda_b = 0.35;   // supervised/unsupervised balance
  double xi = 2.0;          // mean-entropy regularizer weight
  double tau_c = 0.75;      // consistency temperature
  double lambda_s = 1.0;    // soft-label smoothness
  // Curriculum weight between angle and distance terms: linear from start
  // to end over `lambda_c_horizon` steps (0 = the whole run).
  double lambda_c_start = 1.0;
  double lambda_c_end = 0.0;
  std::size_t lambda_c_horizon = 0;
  double transition_momentum = 0.9;
  double beta = 1.0;  // unsupervised weight of the information-theoretic objective; reporting only
  double tau_supcon = 0.07;
  double kl_floor = 1e-12;
  FusionRule fusion = FusionRule::CumulativeMean;
  bool clamp_soft_labels = false;
  // Rescale each soft-label row to a distribution (negatives dropped).
  bool normalize_soft_labels = true;
  bool supcon = true;
  bool cgc = true;
  bool cgc_detach_target = true;
  bool cgc_both_views = false;

  void validate() const;
};

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits, double temperature = 1.0);

// Sharpened pseudo-labels from the other view's cosine scores.
Eigen::MatrixXd sharpen(const Eigen::MatrixXd& scores, double tau_sharp);

struct ClsLoss {
  double value = 0.0;  // (1 - lambda_b) * unsupervised + lambda_b * supervised
  double unsupervised = 0.0;
  double supervised = 0.0;
  double mean_entropy = 0.0;  // H(mean prediction)
  Eigen::MatrixXd grad;       // d value / d logits
};

// Self-distillation classification loss on `logits` (rows are samples,
// probabilities are softmax(logits)). `targets` are detached pseudo-labels;
// labels[i] >= 0 marks a labelled row.
ClsLoss cls_loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& targets, std::span<const int> labels,
                 const LossConfig& cfg);

// Cosine similarity of every pair of rows.
Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& features);

// Fused similarity for the finest of the given levels (coarse first).
Eigen::MatrixXd fuse_hierarchy(std::span<const Eigen::MatrixXd> similarities, FusionRule rule = FusionRule::CumulativeMean);

// (1 - lambda_s) I + lambda_s S, optionally with negative off-diagonal
// entries clamped to zero.
Eigen::MatrixXd soft_labels(const Eigen::MatrixXd& fused, double lambda_s, bool clamp = false);

// Clamps at zero and divides each row by its sum; rows must keep positive mass.
Eigen::MatrixXd normalize_soft_labels(const Eigen::MatrixXd& targets);

// lambda_c * <a, b> - (1 - lambda_c) * | a/|a| - b/|b| |
double hybrid_sim(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lambda_c);

struct PairLoss {
  double value = 0.0;
  Eigen::MatrixXd grad_a;
  Eigen::MatrixXd grad_b;
};

// Soft-target cross-view contrastive loss with the hybrid similarity. Row i
// of `anchors` is paired with row i of `candidates`; the normalizer of row
// i skips candidate i. Gradients go to both views.
PairLoss hscl_loss(const Eigen::MatrixXd& anchors, const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& targets,
                   double lambda_c);

struct SupConLoss {
  double value = 0.0;
  Eigen::MatrixXd grad;
};

// Supervised contrastive loss over stacked features (both views of every
// labelled sample); rows with the same label are positives.
SupConLoss supcon_loss(const Eigen::MatrixXd& features, std::span<const int> labels, double temperature);

// Mean KL(p || q) over rows with q floored at `floor` inside the log.
double kl_rows(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q, double floor = 1e-12);

// Cross-granularity divergence on probabilities: sum over coarse levels of
// the mean KL between each coarse posterior and fine_probs * M_h.
double cgc_divergence(std::span<const Eigen::MatrixXd> coarse_probs, const Eigen::MatrixXd& fine_probs,
                      std::span<const TransitionMatrix> transitions, double floor = 1e-12);

struct CgcLoss {
  double value = 0.0;
  std::vector<double> per_level;
  std::vector<Eigen::MatrixXd> grad_coarse;  // d value / d coarse logits
  Eigen::MatrixXd grad_fine;                 // zero unless the target is not detached
};

// Consistency loss on logits; posteriors use temperature tau_c.
CgcLoss cgc_loss(std::span<const Eigen::MatrixXd> coarse_logits, const Eigen::MatrixXd& fine_logits,
                 std::span<const TransitionMatrix> transitions, const LossConfig& cfg);

struct LossComponents {
  std::vector<double> soft_rep;  // per level
  std::vector<double> cls;       // per level
  double cgc = 0.0;
};

// Plain sum of every component; NumericError names a non-finite one.
double total_loss(const LossComponents& components);

}  // namespace seal
