// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace seal {

using Axes = std::vector<std::size_t>;

// Dense probability table over a product of small finite axes. The last
// axis varies fastest.
class DiscreteJoint {
 public:
  static constexpr std::size_t kMaxCells = 1024;  // 4^5

  DiscreteJoint(std::vector<std::string> names, std::vector<std::size_t> cards, std::vector<double> table);

  std::size_t axes() const { return cards_.size(); }
  std::size_t cardinality(std::size_t axis) const { return cards_.at(axis); }
  std::size_t cells() const { return table_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::size_t>& cards() const { return cards_; }
  const std::vector<double>& table() const { return table_; }
  std::size_t axis(const std::string& name) const;

  double at(std::span<const std::size_t> index) const;
  std::vector<std::size_t> unflatten(std::size_t cell) const;

  // Marginal table over `keep`, in the order given.
  DiscreteJoint marginal(const Axes& keep) const;

  // Independent product: the axes of `a` followed by the axes of `b`.
  static DiscreteJoint product(const DiscreteJoint& a, const DiscreteJoint& b);

 private:
  std::vector<std::string> names_;
  std::vector<std::size_t> cards_;
  std::vector<double> table_;
};

// Entropy of the marginal over `a` (natural log).
double entropy(const DiscreteJoint& joint, const Axes& a);

// I(A;B) = sum p(a,b) log(p(a,b) / (p(a) p(b))).
double mutual_information(const DiscreteJoint& joint, const Axes& a, const Axes& b);

// I(A;B|C) = sum p(a,b,c) log(p(a,b,c) p(c) / (p(a,c) p(b,c))).
double conditional_mi(const DiscreteJoint& joint, const Axes& a, const Axes& b, const Axes& c);

// Random joint with exponential weights; `sparsity` is the chance that a
// cell is zeroed (at least one cell always keeps mass).
DiscreteJoint random_joint(std::vector<std::size_t> cards, std::mt19937_64& rng, double sparsity = 0.0);

// I(A; B_1..B_n) minus the chain-rule sum of I(A; B_i | B_1..B_{i-1}).
double chain_rule_residual(const DiscreteJoint& joint, const Axes& a, std::span<const std::size_t> b_axes);

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// lhs = I(Z; Y_1..Y_H) >= rhs = I(Z; Y_H). `y_axes` coarse to fine.
BoundCheck check_supervised_bound(const DiscreteJoint& joint, const Axes& z, std::span<const std::size_t> y_axes,
                                  double tolerance = 1e-12);

// lhs = H(Y_1..Y_H | X) - H(Y_1..Y_H) <= rhs = -I(X; Y_H).
BoundCheck check_unsupervised_bound(const DiscreteJoint& joint, const Axes& x, std::span<const std::size_t> y_axes,
                                    double tolerance = 1e-12);

// Combined objective bound: the hierarchical objective (supervised term on
// `labelled`, beta-weighted unsupervised term on `unlabelled`) never
// exceeds the fine-only objective.
BoundCheck check_combined_bound(const DiscreteJoint& labelled, const Axes& z, std::span<const std::size_t> y_axes,
                                const DiscreteJoint& unlabelled, const Axes& x, std::span<const std::size_t> yhat_axes,
                                double beta, double tolerance = 1e-12);

struct IndependenceResidual {
  double zl_yu_given_yl = 0.0;  // I(Z_l; Y_u | Y_l)
  double yl_zu_given_zl = 0.0;  // I(Y_l; Z_u | Z_l)
};

IndependenceResidual check_independence_lemma(const DiscreteJoint& joint, const Axes& zl, const Axes& yl,
                                              const Axes& zu, const Axes& yu);

struct TheoryCheck {
  std::string name;
  bool passed = false;
  std::size_t trials = 0;
  double worst = 0.0;  // worst residual or bound violation observed
};

// Every check on randomly drawn joints plus the constructed instances.
std::vector<TheoryCheck> run_theory_suite(std::size_t trials, std::uint64_t seed);

}  // namespace seal
