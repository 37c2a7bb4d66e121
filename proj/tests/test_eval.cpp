// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "seal/errors.hpp"
#include "seal/eval.hpp"

using namespace seal;

TEST_CASE("assignment solves small problems exactly") {
  CHECK(max_weight_assignment({{1, 0}, {0, 1}}) == std::vector<std::size_t>{0, 1});
  CHECK(max_weight_assignment({{0, 5}, {5, 0}}) == std::vector<std::size_t>{1, 0});
  CHECK(max_weight_assignment({{7}}) == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(max_weight_assignment({{1, 2}}), InputError);

  // brute force over every permutation
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    std::vector<std::vector<std::int64_t>> w(n, std::vector<std::int64_t>(n));
    for (auto& row : w)
      for (auto& v : row) v = static_cast<std::int64_t>(rng() % 20);
    const auto a = max_weight_assignment(w);
    std::int64_t got = 0;
    for (std::size_t i = 0; i < n; ++i) got += w[i][a[i]];
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::int64_t best = 0;
    do {
      std::int64_t s = 0;
      for (std::size_t i = 0; i < n; ++i) s += w[i][p[i]];
      best = std::max(best, s);
    } while (std::next_permutation(p.begin(), p.end()));
    CHECK(got == best);
    std::vector<std::size_t> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  }
}

TEST_CASE("hungarian accuracy matches brute force on random labelings") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 1 + rng() % 7;
    const std::size_t clusters = 1 + rng() % 7;
    const std::size_t n = 1 + rng() % 40;
    std::vector<int> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng() % k);
      p[i] = static_cast<int>(rng() % clusters);
    }
    CAPTURE(trial);
    CHECK(hungarian_acc(y, p, k).acc == doctest::Approx(oracle::brute_force_acc(y, p, k)).epsilon(1e-12));
  }
}

TEST_CASE("hungarian accuracy worked example") {
  const std::vector<int> y{0, 0, 1, 1}, p{1, 1, 0, 2};
  const auto r = hungarian_acc(y, p, 3);
  CHECK(r.acc == doctest::Approx(0.75));
  CHECK(r.matched == 3);
  CHECK(r.assignment[1] == 0);
  CHECK(r.assignment[0] == 1);
  const std::vector<std::size_t> old{0};
  const auto s = split_acc(y, p, old, r.assignment);
  REQUIRE(s.old_acc);
  REQUIRE(s.new_acc);
  CHECK(*s.old_acc == doctest::Approx(1.0));
  CHECK(*s.new_acc == doctest::Approx(0.5));
}

TEST_CASE("accuracy is invariant to relabeling clusters") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> y(30), p(30);
    for (int i = 0; i < 30; ++i) {
      y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 5);
      p[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 5);
    }
    std::vector<int> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> q(30);
    for (std::size_t i = 0; i < 30; ++i) q[i] = perm[static_cast<std::size_t>(p[i])];
    CHECK(hungarian_acc(y, p, 5).acc == hungarian_acc(y, q, 5).acc);
  }
  const std::vector<int> y{0, 1, 2, 0, 1, 2};
  CHECK(hungarian_acc(y, y, 3).acc == 1.0);
}

TEST_CASE("accuracy errors") {
  const std::vector<int> empty;
  CHECK_THROWS_AS(hungarian_acc(empty, empty, 3), InputError);
  const std::vector<int> a{0, 1}, b{0};
  CHECK_THROWS_AS(hungarian_acc(a, b, 3), InputError);
  const std::vector<int> bad{0, 5};
  CHECK_THROWS_AS(hungarian_acc(bad, a, 3), InputError);
}

TEST_CASE("separate assignment is never worse than shared") {
  std::mt19937_64 rng(2);
  const std::vector<std::size_t> old{0, 1};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> y(24), p(24);
    for (std::size_t i = 0; i < 24; ++i) {
      y[i] = static_cast<int>(rng() % 4);
      p[i] = static_cast<int>(rng() % 4);
    }
    const auto shared = split_acc(y, p, old, hungarian_acc(y, p, 4).assignment);
    const auto sep = split_acc_separate(y, p, old, 4);
    if (shared.old_acc && sep.old_acc) CHECK(*sep.old_acc >= *shared.old_acc - 1e-12);
    if (shared.new_acc && sep.new_acc) CHECK(*sep.new_acc >= *shared.new_acc - 1e-12);
  }
}

TEST_CASE("consistency rate") {
  const HierarchySpec spec{{2, 4}, {{0, 0, 1, 1}}};
  const std::vector<int> fine{0, 1, 2, 3};
  const std::vector<std::vector<int>> all_right{{0, 0, 1, 1}};
  CHECK(consistency_rate(fine, all_right, spec) == std::vector<double>{1.0});
  const std::vector<std::vector<int>> half{{0, 1, 1, 0}};
  CHECK(consistency_rate(fine, half, spec) == std::vector<double>{0.5});
  // fine clusters are mapped to classes before the check
  const std::vector<int> assignment{2, 3, 0, 1};
  const std::vector<std::vector<int>> swapped{{1, 1, 0, 0}};
  CHECK(consistency_rate(fine, swapped, spec, assignment) == std::vector<double>{1.0});

  const HierarchySpec deep{{2, 3, 4}, {{0, 0, 1}, {0, 1, 2, 2}}};
  const std::vector<std::vector<int>> coarse{{0, 0, 1, 0}, {0, 1, 2, 2}};
  const auto c = consistency_rate(fine, coarse, deep);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == doctest::Approx(0.75));
  CHECK(c[1] == doctest::Approx(1.0));

  // one coarse class predicted everywhere, fine predictions balanced over 4 groups
  const auto wide = HierarchySpec{{4, 8}, {{0, 0, 1, 1, 2, 2, 3, 3}}};
  std::vector<int> many;
  for (int i = 0; i < 800; ++i) many.push_back(i % 8);
  const std::vector<std::vector<int>> constant{std::vector<int>(800, 2)};
  CHECK(consistency_rate(many, constant, wide)[0] == doctest::Approx(0.25));

  const HierarchySpec flat{{4}, {}};
  CHECK(consistency_rate(fine, std::vector<std::vector<int>>{}, flat).empty());
}

TEST_CASE("evaluate builds the full report") {
  const HierarchySpec spec{{2, 4}, {{0, 0, 1, 1}}};
  const std::vector<std::vector<int>> truth{{0, 0, 1, 1, 0}, {0, 1, 2, 3, -1}};
  const std::vector<std::vector<int>> pred{{0, 0, 1, 1, 0}, {3, 2, 1, 0, 1}};
  const std::vector<std::size_t> old{0, 1};
  const auto r = evaluate(truth, pred, spec, old);
  CHECK(r.samples == 4);
  CHECK(r.acc_all == doctest::Approx(1.0));
  CHECK(r.levels.size() == 2);
  CHECK(r.levels[0].all == doctest::Approx(1.0));
  REQUIRE(r.consistency.size() == 1);
  // fine clusters are mapped, coarse predictions are taken as they are
  CHECK(r.consistency[0] == doctest::Approx(1.0));
  const std::vector<std::vector<int>> flipped{{1, 1, 0, 0, 0}, {3, 2, 1, 0, 1}};
  const auto f = evaluate(truth, flipped, spec, old);
  CHECK(f.levels[0].all == doctest::Approx(1.0));
  CHECK(f.consistency[0] == doctest::Approx(0.0));
  const auto j = to_json(r);
  CHECK(j.contains("consistency"));
  CHECK(j.contains("levels"));
}
