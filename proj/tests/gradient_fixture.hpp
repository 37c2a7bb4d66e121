// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

// Small model, batch and transitions shared by the gradient checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "seal/hierarchy.hpp"
#include "seal/trainer.hpp"

namespace gradcheck {

using namespace seal;

struct Fixture {
  ModelState state;
  BatchInput batch;
  std::vector<TransitionMatrix> transitions;
};

inline Fixture make_fixture(std::uint64_t seed) {
  const HierarchySpec spec{{2, 3, 4}, {{0, 0, 1}, {0, 1, 2, 2}}};
  ModelConfig mc;
  mc.input_dim = 3;
  mc.hidden = {4};
  mc.proj_dim = 6;
  Fixture f;
  f.state = init_model(mc, spec.counts, 0.5, 0.3, seed);
  std::mt19937_64 rng(seed * 7 + 1);
  const Eigen::MatrixXd x = oracle::random_matrix(6, 3, rng);
  f.batch.view_a = x + 0.2 * oracle::random_matrix(6, 3, rng);
  f.batch.view_b = x + 0.2 * oracle::random_matrix(6, 3, rng);
  const std::vector<int> fine{0, 1, -1, 0, -1, 1};
  f.batch.labels.assign(3, std::vector<int>(6, -1));
  for (std::size_t i = 0; i < 6; ++i) {
    if (fine[i] < 0) continue;
    for (std::size_t h = 0; h < 3; ++h)
      f.batch.labels[h][i] = static_cast<int>(fine_to_level(spec, static_cast<std::size_t>(fine[i]), h));
  }
  const std::vector<std::size_t> known{0, 1};
  f.transitions = init_transitions(spec, known);
  // move the novel rows off their uniform start
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (auto& t : f.transitions)
    for (Eigen::Index k = 2; k < 4; ++k) {
      for (Eigen::Index j = 0; j < t.entries.cols(); ++j) t.entries(k, j) = u(rng);
      t.entries.row(k) /= t.entries.row(k).sum();
    }
  return f;
}

struct GradCheck {
  double relative_error = 0.0;
  bool frozen_matches_live = false;  // pinning detached inputs changes neither value nor gradient
  bool nonzero = false;
};

inline GradCheck check(const Fixture& f, const LossConfig& cfg, double lambda_c, const ObjectiveTerms& terms) {
  const ForwardTrace ta = forward(f.state, f.batch.view_a);
  const ForwardTrace tb = forward(f.state, f.batch.view_b);
  const auto base = evaluate_objective(f.state, f.batch, f.transitions, cfg, lambda_c, terms, &ta, &tb);
  const auto live = evaluate_objective(f.state, f.batch, f.transitions, cfg, lambda_c, terms);
  auto fn = [&](const Eigen::VectorXd& p) {
    ModelState s = f.state;
    assign_parameters(s, p);
    return evaluate_objective(s, f.batch, f.transitions, cfg, lambda_c, terms, &ta, &tb, false).total;
  };
  const Eigen::VectorXd numeric = oracle::fd_gradient(fn, flatten_parameters(f.state));
  const Eigen::VectorXd analytic = flatten_gradients(base.grads);
  GradCheck out;
  out.relative_error = oracle::relative_error(analytic, numeric);
  out.frozen_matches_live = base.total == live.total && analytic == flatten_gradients(live.grads);
  out.nonzero = analytic.norm() > 0.0;
  return out;
}

inline ObjectiveTerms only(bool cls, bool hscl, bool supcon, bool cgc) {
  ObjectiveTerms t;
  t.cls = cls;
  t.hscl = hscl;
  t.supcon = supcon;
  t.cgc = cgc;
  return t;
}

// Largest change of the level-0 classification objective when any bias
// feeding a finer slice moves by `step`, with the frozen traces pinned.
inline double coarse_sensitivity_to_fine_slices(const Fixture& f, double step) {
  LossConfig cfg;
  auto terms = only(true, false, false, false);
  terms.only_level = 0;
  const ForwardTrace ta = forward(f.state, f.batch.view_a);
  const ForwardTrace tb = forward(f.state, f.batch.view_b);
  const double base = evaluate_objective(f.state, f.batch, f.transitions, cfg, 1.0, terms, &ta, &tb, false).total;
  double worst = 0.0;
  const auto lo = static_cast<Eigen::Index>(f.state.slice_bounds[1]);
  for (Eigen::Index r = lo; r < static_cast<Eigen::Index>(f.state.proj_dim()); ++r) {
    ModelState s = f.state;
    s.layers.back().bias[r] += step;
    const double v = evaluate_objective(s, f.batch, f.transitions, cfg, 1.0, terms, &ta, &tb, false).total;
    worst = std::max(worst, std::abs(v - base));
  }
  return worst;
}

}  // namespace gradcheck
