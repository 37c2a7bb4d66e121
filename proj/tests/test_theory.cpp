// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "seal/errors.hpp"
#include "seal/theory.hpp"

using namespace seal;

namespace {

oracle::Table as_table(const DiscreteJoint& j) { return oracle::Table{j.cards(), j.table()}; }

}  // namespace

TEST_CASE("joint construction and marginals") {
  const DiscreteJoint j({"a", "b"}, {2, 3}, {0.1, 0.2, 0.1, 0.3, 0.2, 0.1});
  CHECK(j.cells() == 6);
  CHECK(j.axis("b") == 1);
  const std::vector<std::size_t> idx{1, 0};
  CHECK(j.at(idx) == doctest::Approx(0.3));
  CHECK(j.unflatten(5) == std::vector<std::size_t>{1, 2});
  const auto m = j.marginal({1});
  CHECK(m.table()[0] == doctest::Approx(0.4));
  CHECK(m.table()[2] == doctest::Approx(0.2));
  CHECK_THROWS_AS(DiscreteJoint({"a"}, {2}, {0.5, 0.6}), InputError);
  CHECK_THROWS_AS(DiscreteJoint({"a"}, {2}, {1.5, -0.5}), InputError);
  CHECK_THROWS_AS(DiscreteJoint({"a"}, {3}, {0.5, 0.5}), InputError);
  CHECK_THROWS_AS(DiscreteJoint({"a", "b", "c", "d", "e", "f"}, {4, 4, 4, 4, 4, 2}, std::vector<double>(2048, 1.0 / 2048)),
                  InputError);
  CHECK_THROWS_AS(j.axis("zzz"), InputError);
  CHECK_THROWS_AS(mutual_information(j, {0}, {0}), InputError);
}

TEST_CASE("closed-form information values") {
  // perfectly correlated bits: I = ln 2
  const DiscreteJoint copy({"x", "y"}, {2, 2}, {0.5, 0.0, 0.0, 0.5});
  CHECK(mutual_information(copy, {0}, {1}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(entropy(copy, {0, 1}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const DiscreteJoint indep({"x", "y"}, {2, 2}, {0.25, 0.25, 0.25, 0.25});
  CHECK(std::abs(mutual_information(indep, {0}, {1})) <= 1e-15);
  // xor: pairwise independent but jointly determined
  std::vector<double> t(8, 0.0);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) t[a * 4 + b * 2 + (a ^ b)] = 0.25;
  const DiscreteJoint x({"a", "b", "c"}, {2, 2, 2}, t);
  CHECK(std::abs(mutual_information(x, {0}, {2})) <= 1e-15);
  CHECK(conditional_mi(x, {0}, {2}, {1}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("information measures agree with an entropy-based oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const DiscreteJoint j = random_joint({2 + rng() % 3, 2 + rng() % 3, 2 + rng() % 2, 2}, rng, trial % 3 ? 0.0 : 0.3);
    const auto t = as_table(j);
    CHECK(entropy(j, {0, 2}) == doctest::Approx(oracle::entropy(t, {0, 2})).epsilon(1e-10));
    CHECK(std::abs(mutual_information(j, {0}, {1, 3}) - oracle::mutual_information(t, {0}, {1, 3})) <= 1e-12);
    CHECK(std::abs(conditional_mi(j, {0}, {1}, {2, 3}) - oracle::conditional_mi(t, {0}, {1}, {2, 3})) <= 1e-12);
    CHECK(mutual_information(j, {0}, {1}) >= -1e-15);
    CHECK(conditional_mi(j, {1}, {2}, {0}) >= -1e-15);
  }
}

TEST_CASE("chain rule and bounds on random joints") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const DiscreteJoint j = random_joint({3, 2, 3, 4}, rng, trial % 4 ? 0.0 : 0.25);
    const std::vector<std::size_t> ys{1, 2, 3};
    CHECK(std::abs(chain_rule_residual(j, {0}, ys)) <= 1e-12);
    const auto sup = check_supervised_bound(j, {0}, ys);
    CHECK(sup.holds);
    CHECK(sup.lhs >= sup.rhs - 1e-12);
    const auto uns = check_unsupervised_bound(j, {0}, ys);
    CHECK(uns.holds);
    CHECK(uns.lhs <= uns.rhs + 1e-12);
    const DiscreteJoint u = random_joint({3, 2, 3, 4}, rng);
    CHECK(check_combined_bound(j, {0}, ys, u, {0}, ys, 0.7).holds);
  }
}

TEST_CASE("bounds are tight when the fine label determines the hierarchy") {
  // y1 = f(y2), so I(Z; Y1, Y2) = I(Z; Y2)
  std::mt19937_64 rng(9);
  std::vector<double> t(2 * 2 * 4, 0.0);
  double mass = 0.0;
  for (std::size_t z = 0; z < 2; ++z)
    for (std::size_t f = 0; f < 4; ++f) {
      const double w = 0.1 + static_cast<double>(rng() % 100) / 100.0;
      t[z * 8 + (f / 2) * 4 + f] = w;
      mass += w;
    }
  for (double& v : t) v /= mass;
  const DiscreteJoint j({"z", "y1", "y2"}, {2, 2, 4}, t);
  const std::vector<std::size_t> ys{1, 2};
  const auto b = check_supervised_bound(j, {0}, ys);
  CHECK(std::abs(b.lhs - b.rhs) <= 1e-12);
}

TEST_CASE("independence identities on product joints") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto l = random_joint({2 + rng() % 3, 2 + rng() % 3}, rng);
    const auto u = random_joint({2 + rng() % 3, 2 + rng() % 3}, rng);
    const auto j = DiscreteJoint::product(l, u);
    const auto r = check_independence_lemma(j, {0}, {1}, {2}, {3});
    CHECK(std::abs(r.zl_yu_given_yl) <= 1e-12);
    CHECK(std::abs(r.yl_zu_given_zl) <= 1e-12);
  }
  // fully tied variables carry nothing beyond their conditioners
  const DiscreteJoint coupled({"zl", "yl", "zu", "yu"}, {2, 2, 2, 2},
                              {0.5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0.5});
  const auto r = check_independence_lemma(coupled, {0}, {1}, {2}, {3});
  CHECK(r.zl_yu_given_yl == doctest::Approx(0.0));
  CHECK(r.yl_zu_given_zl == doctest::Approx(0.0));
  // yu copies zl while the rest is uniform
  std::vector<double> t(16, 0.0);
  for (std::size_t zl = 0; zl < 2; ++zl)
    for (std::size_t yl = 0; yl < 2; ++yl)
      for (std::size_t zu = 0; zu < 2; ++zu) t[zl * 8 + yl * 4 + zu * 2 + zl] = 0.125;
  const DiscreteJoint mix({"zl", "yl", "zu", "yu"}, {2, 2, 2, 2}, t);
  CHECK(check_independence_lemma(mix, {0}, {1}, {2}, {3}).zl_yu_given_yl == doctest::Approx(std::log(2.0)));
}

TEST_CASE("theory suite passes and is reproducible") {
  const auto a = run_theory_suite(100, 1);
  const auto b = run_theory_suite(100, 1);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() >= 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CAPTURE(a[i].name);
    CHECK(a[i].passed);
    CHECK(a[i].worst == b[i].worst);
  }
  CHECK_THROWS_AS(run_theory_suite(0, 1), InputError);
}
