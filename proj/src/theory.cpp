// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include "seal/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seal/errors.hpp"

namespace seal {
namespace {

void require_disjoint(const Axes& a, const Axes& b, const char* what) {
  for (std::size_t x : a)
    if (std::find(b.begin(), b.end(), x) != b.end()) throw InputError(std::string(what) + " axis sets overlap");
}

void require_axes(const DiscreteJoint& joint, const Axes& a) {
  for (std::size_t x : a)
    if (x >= joint.axes()) throw InputError("axis " + std::to_string(x) + " out of range");
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if (a[i] == a[j]) throw InputError("axis listed twice");
}

Axes join(const Axes& a, const Axes& b) {
  Axes out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// p log(p / q) with the 0 log(0/q) = 0 convention.
double plogpq(double p, double q) {
  if (p == 0.0) return 0.0;
  if (q <= 0.0) throw NumericError("positive mass over a zero-probability marginal");
  return p * std::log(p / q);
}

}  // namespace

DiscreteJoint::DiscreteJoint(std::vector<std::string> names, std::vector<std::size_t> cards, std::vector<double> table)
    : names_(std::move(names)), cards_(std::move(cards)), table_(std::move(table)) {
  if (names_.size() != cards_.size()) throw InputError("one name per axis is required");
  std::size_t cells = 1;
  for (std::size_t c : cards_) {
    if (c == 0) throw InputError("axis with zero cardinality");
    cells *= c;
    if (cells > kMaxCells) throw InputError("joint table exceeds " + std::to_string(kMaxCells) + " cells");
  }
  if (table_.size() != cells) throw InputError("table size does not match the axis cardinalities");
  double mass = 0.0;
  for (double p : table_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("joint probabilities must be finite and non-negative");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-12) throw InputError("joint probabilities must sum to 1");
}

std::size_t DiscreteJoint::axis(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InputError("no axis named " + name);
  return static_cast<std::size_t>(it - names_.begin());
}

std::vector<std::size_t> DiscreteJoint::unflatten(std::size_t cell) const {
  std::vector<std::size_t> idx(cards_.size());
  for (std::size_t a = cards_.size(); a-- > 0;) {
    idx[a] = cell % cards_[a];
    cell /= cards_[a];
  }
  return idx;
}

double DiscreteJoint::at(std::span<const std::size_t> index) const {
  if (index.size() != cards_.size()) throw InputError("index rank does not match the joint");
  std::size_t cell = 0;
  for (std::size_t a = 0; a < cards_.size(); ++a) {
    if (index[a] >= cards_[a]) throw InputError("index out of range on axis " + names_[a]);
    cell = cell * cards_[a] + index[a];
  }
  return table_[cell];
}

DiscreteJoint DiscreteJoint::marginal(const Axes& keep) const {
  require_axes(*this, keep);
  std::vector<std::string> names;
  std::vector<std::size_t> cards;
  std::size_t cells = 1;
  for (std::size_t a : keep) {
    names.push_back(names_[a]);
    cards.push_back(cards_[a]);
    cells *= cards_[a];
  }
  std::vector<double> table(cells, 0.0);
  for (std::size_t cell = 0; cell < table_.size(); ++cell) {
    const auto idx = unflatten(cell);
    std::size_t out = 0;
    for (std::size_t a : keep) out = out * cards_[a] + idx[a];
    table[out] += table_[cell];
  }
  // Rounding in the sums can push the mass a few ulps off 1.
  const double mass = std::accumulate(table.begin(), table.end(), 0.0);
  for (double& p : table) p /= mass;
  return DiscreteJoint(std::move(names), std::move(cards), std::move(table));
}

DiscreteJoint DiscreteJoint::product(const DiscreteJoint& a, const DiscreteJoint& b) {
  std::vector<std::string> names = a.names_;
  names.insert(names.end(), b.names_.begin(), b.names_.end());
  std::vector<std::size_t> cards = a.cards_;
  cards.insert(cards.end(), b.cards_.begin(), b.cards_.end());
  if (a.cells() * b.cells() > kMaxCells) throw InputError("product joint exceeds the cell cap");
  std::vector<double> table;
  table.reserve(a.cells() * b.cells());
  for (double pa : a.table_)
    for (double pb : b.table_) table.push_back(pa * pb);
  const double mass = std::accumulate(table.begin(), table.end(), 0.0);
  for (double& p : table) p /= mass;
  return DiscreteJoint(std::move(names), std::move(cards), std::move(table));
}

double entropy(const DiscreteJoint& joint, const Axes& a) {
  if (a.empty()) return 0.0;
  double h = 0.0;
  const DiscreteJoint m = joint.marginal(a);
  for (double p : m.table())
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

double mutual_information(const DiscreteJoint& joint, const Axes& a, const Axes& b) {
  require_disjoint(a, b, "mutual information");
  if (a.empty() || b.empty()) return 0.0;
  const DiscreteJoint pab = joint.marginal(join(a, b));
  const DiscreteJoint pa = joint.marginal(a);
  const DiscreteJoint pb = joint.marginal(b);
  const std::size_t nb = pb.cells();
  double mi = 0.0;
  for (std::size_t i = 0; i < pa.cells(); ++i)
    for (std::size_t j = 0; j < nb; ++j) mi += plogpq(pab.table()[i * nb + j], pa.table()[i] * pb.table()[j]);
  return mi;
}

double conditional_mi(const DiscreteJoint& joint, const Axes& a, const Axes& b, const Axes& c) {
  require_disjoint(a, b, "conditional mutual information");
  require_disjoint(a, c, "conditional mutual information");
  require_disjoint(b, c, "conditional mutual information");
  if (c.empty()) return mutual_information(joint, a, b);
  if (a.empty() || b.empty()) return 0.0;
  const DiscreteJoint pabc = joint.marginal(join(join(a, b), c));
  const DiscreteJoint pac = joint.marginal(join(a, c));
  const DiscreteJoint pbc = joint.marginal(join(b, c));
  const DiscreteJoint pc = joint.marginal(c);
  const std::size_t nb = joint.marginal(b).cells();
  const std::size_t nc = pc.cells();
  const std::size_t na = pabc.cells() / (nb * nc);
  double mi = 0.0;
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j)
      for (std::size_t k = 0; k < nc; ++k) {
        const double p = pabc.table()[(i * nb + j) * nc + k];
        if (p == 0.0) continue;
        mi += plogpq(p, pac.table()[i * nc + k] * pbc.table()[j * nc + k] / pc.table()[k]);
      }
  return mi;
}

DiscreteJoint random_joint(std::vector<std::size_t> cards, std::mt19937_64& rng, double sparsity) {
  std::size_t cells = 1;
  for (std::size_t c : cards) cells *= c;
  if (cells > DiscreteJoint::kMaxCells) throw InputError("random joint exceeds the cell cap");
  std::exponential_distribution<double> weight(1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<double> table(cells);
  double mass = 0.0;
  for (double& p : table) {
    p = coin(rng) < sparsity ? 0.0 : weight(rng);
    mass += p;
  }
  if (mass == 0.0) {
    table[std::uniform_int_distribution<std::size_t>(0, cells - 1)(rng)] = 1.0;
    mass = 1.0;
  }
  for (double& p : table) p /= mass;
  std::vector<std::string> names;
  for (std::size_t a = 0; a < cards.size(); ++a) names.push_back("x" + std::to_string(a));
  return DiscreteJoint(std::move(names), std::move(cards), std::move(table));
}

double chain_rule_residual(const DiscreteJoint& joint, const Axes& a, std::span<const std::size_t> b_axes) {
  const Axes all(b_axes.begin(), b_axes.end());
  double sum = 0.0;
  Axes prefix;
  for (std::size_t b : b_axes) {
    sum += conditional_mi(joint, a, {b}, prefix);
    prefix.push_back(b);
  }
  return mutual_information(joint, a, all) - sum;
}

BoundCheck check_supervised_bound(const DiscreteJoint& joint, const Axes& z, std::span<const std::size_t> y_axes,
                                  double tolerance) {
  if (y_axes.empty()) throw InputError("supervised bound needs at least one label level");
  BoundCheck out;
  out.lhs = mutual_information(joint, z, Axes(y_axes.begin(), y_axes.end()));
  out.rhs = mutual_information(joint, z, {y_axes.back()});
  out.holds = out.lhs >= out.rhs - tolerance;
  return out;
}

BoundCheck check_unsupervised_bound(const DiscreteJoint& joint, const Axes& x, std::span<const std::size_t> y_axes,
                                    double tolerance) {
  if (y_axes.empty()) throw InputError("unsupervised bound needs at least one prediction level");
  const Axes y(y_axes.begin(), y_axes.end());
  BoundCheck out;
  out.lhs = (entropy(joint, join(x, y)) - entropy(joint, x)) - entropy(joint, y);
  out.rhs = -mutual_information(joint, x, {y_axes.back()});
  out.holds = out.lhs <= out.rhs + tolerance;
  return out;
}

BoundCheck check_combined_bound(const DiscreteJoint& labelled, const Axes& z, std::span<const std::size_t> y_axes,
                                const DiscreteJoint& unlabelled, const Axes& x, std::span<const std::size_t> yhat_axes,
                                double beta, double tolerance) {
  if (!(beta >= 0.0)) throw InputError("beta must be non-negative");
  const BoundCheck sup = check_supervised_bound(labelled, z, y_axes, tolerance);
  const BoundCheck unsup = check_unsupervised_bound(unlabelled, x, yhat_axes, tolerance);
  const Axes fine{yhat_axes.back()};
  const double fine_unsup = (entropy(unlabelled, join(x, fine)) - entropy(unlabelled, x)) - entropy(unlabelled, fine);
  BoundCheck out;
  out.lhs = -sup.lhs + beta * unsup.lhs;
  out.rhs = -sup.rhs + beta * fine_unsup;
  out.holds = out.lhs <= out.rhs + tolerance;
  return out;
}

IndependenceResidual check_independence_lemma(const DiscreteJoint& joint, const Axes& zl, const Axes& yl,
                                              const Axes& zu, const Axes& yu) {
  IndependenceResidual out;
  out.zl_yu_given_yl = conditional_mi(joint, zl, yu, yl);
  out.yl_zu_given_zl = conditional_mi(joint, yl, zu, zl);
  return out;
}

std::vector<TheoryCheck> run_theory_suite(std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw InputError("theory suite needs at least one trial");
  std::mt19937_64 rng(seed);
  auto card = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  auto sparsity = [&] { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.25 ? 0.3 : 0.0; };
  std::vector<TheoryCheck> checks;

  {  // MI and conditional MI are never negative.
    TheoryCheck c{"mi_non_negative", true, trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
      const DiscreteJoint j = random_joint({card(2, 4), card(2, 4), card(2, 4), card(2, 4)}, rng, sparsity());
      const double worst = std::min({mutual_information(j, {0}, {1}), mutual_information(j, {0, 1}, {2, 3}),
                                     conditional_mi(j, {0}, {1}, {2}), conditional_mi(j, {0}, {3}, {1, 2})});
      c.worst = std::min(c.worst, worst);
    }
    c.passed = c.worst >= -1e-12;
    checks.push_back(c);
  }
  {  // Chain rule under every ordering of the conditioning axes.
    TheoryCheck c{"chain_rule", true, trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
      const DiscreteJoint j = random_joint({card(2, 4), card(2, 4), card(2, 4), card(2, 4)}, rng, sparsity());
      std::vector<std::size_t> order{1, 2, 3};
      do {
        c.worst = std::max(c.worst, std::abs(chain_rule_residual(j, {0}, order)));
      } while (std::next_permutation(order.begin(), order.end()));
    }
    c.passed = c.worst < 1e-12;
    checks.push_back(c);
  }
  {
    TheoryCheck c{"supervised_bound", true, trials, 0.0};
    const std::vector<std::size_t> y{1, 2, 3};
    for (std::size_t t = 0; t < trials; ++t) {
      const DiscreteJoint j = random_joint({card(2, 4), card(2, 4), card(2, 4), card(2, 4)}, rng, sparsity());
      const BoundCheck b = check_supervised_bound(j, {0}, y);
      c.worst = std::max(c.worst, b.rhs - b.lhs);
      c.passed = c.passed && b.holds;
    }
    checks.push_back(c);
  }
  {
    TheoryCheck c{"unsupervised_bound", true, trials, 0.0};
    const std::vector<std::size_t> y{1, 2, 3};
    for (std::size_t t = 0; t < trials; ++t) {
      const DiscreteJoint j = random_joint({card(2, 4), card(2, 4), card(2, 4), card(2, 4)}, rng, sparsity());
      const BoundCheck b = check_unsupervised_bound(j, {0}, y);
      c.worst = std::max(c.worst, b.lhs - b.rhs);
      c.passed = c.passed && b.holds;
    }
    checks.push_back(c);
  }
  {
    TheoryCheck c{"combined_bound", true, trials, 0.0};
    const std::vector<std::size_t> y{1, 2};
    for (std::size_t t = 0; t < trials; ++t) {
      const DiscreteJoint l = random_joint({card(2, 4), card(2, 4), card(2, 4)}, rng, sparsity());
      const DiscreteJoint u = random_joint({card(2, 4), card(2, 4), card(2, 4)}, rng, sparsity());
      const double beta = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
      const BoundCheck b = check_combined_bound(l, {0}, y, u, {0}, y, beta);
      c.worst = std::max(c.worst, b.lhs - b.rhs);
      c.passed = c.passed && b.holds;
    }
    checks.push_back(c);
  }
  {  // Product joints satisfy both independence identities.
    TheoryCheck c{"independence_lemma", true, trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
      const DiscreteJoint l = random_joint({card(2, 4), card(2, 4)}, rng, sparsity());
      const DiscreteJoint u = random_joint({card(2, 4), card(2, 4)}, rng, sparsity());
      const DiscreteJoint j = DiscreteJoint::product(l, u);
      const IndependenceResidual r = check_independence_lemma(j, {0}, {1}, {2}, {3});
      c.worst = std::max({c.worst, std::abs(r.zl_yu_given_yl), std::abs(r.yl_zu_given_zl)});
    }
    c.passed = c.worst < 1e-12;
    checks.push_back(c);
  }
  {  // Z = Y_1 with Y_2 independent noise: the coarse level adds information.
    TheoryCheck c{"supervised_bound_strict", false, 1, 0.0};
    const DiscreteJoint j({"z", "y1", "y2"}, {2, 2, 2}, {0.25, 0.25, 0.0, 0.0, 0.0, 0.0, 0.25, 0.25});
    const std::vector<std::size_t> y{1, 2};
    const BoundCheck b = check_supervised_bound(j, {0}, y);
    c.worst = b.lhs - b.rhs;
    c.passed = b.holds && c.worst > 1e-6;
    checks.push_back(c);
  }
  {  // Coarse level a deterministic function of the fine one: equality.
    TheoryCheck c{"supervised_bound_equality", true, trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t nz = card(2, 4), nf = card(2, 4);
      const DiscreteJoint zf = random_joint({nz, nf}, rng, sparsity());
      const std::size_t nc = 2;
      std::vector<double> table(nz * nc * nf, 0.0);
      for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t f = 0; f < nf; ++f) table[(z * nc + f % nc) * nf + f] = zf.table()[z * nf + f];
      const DiscreteJoint j({"z", "y1", "y2"}, {nz, nc, nf}, table);
      const std::vector<std::size_t> y{1, 2};
      const BoundCheck b = check_supervised_bound(j, {0}, y);
      c.worst = std::max(c.worst, std::abs(b.lhs - b.rhs));
    }
    c.passed = c.worst < 1e-12;
    checks.push_back(c);
  }
  {  // Strictly tighter combined objective on the strict instance.
    TheoryCheck c{"combined_bound_strict", false, 1, 0.0};
    const DiscreteJoint l({"z", "y1", "y2"}, {2, 2, 2}, {0.25, 0.25, 0.0, 0.0, 0.0, 0.0, 0.25, 0.25});
    const DiscreteJoint u({"x", "y1", "y2"}, {2, 2, 2}, std::vector<double>(8, 0.125));
    const std::vector<std::size_t> y{1, 2};
    const BoundCheck b = check_combined_bound(l, {0}, y, u, {0}, y, 1.0);
    c.worst = b.rhs - b.lhs;
    c.passed = b.holds && c.worst > 1e-6;
    checks.push_back(c);
  }
  {  // Coupled blocks: the residual is reported and must be visible.
    TheoryCheck c{"independence_coupled_detected", false, 1, 0.0};
    std::vector<double> table(16, 0.0);
    // Z_l = Y_u, everything else uniform.
    for (std::size_t zl = 0; zl < 2; ++zl)
      for (std::size_t yl = 0; yl < 2; ++yl)
        for (std::size_t zu = 0; zu < 2; ++zu) table[((zl * 2 + yl) * 2 + zu) * 2 + zl] = 0.125;
    const DiscreteJoint j({"zl", "yl", "zu", "yu"}, {2, 2, 2, 2}, table);
    const IndependenceResidual r = check_independence_lemma(j, {0}, {1}, {2}, {3});
    c.worst = r.zl_yu_given_yl;
    c.passed = c.worst > 1e-6;
    checks.push_back(c);
  }
  return checks;
}

}  // namespace seal
