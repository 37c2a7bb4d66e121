// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "seal/errors.hpp"
#include "seal/losses.hpp"

using namespace seal;

namespace {

Eigen::VectorXd flat(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

Eigen::MatrixXd shaped(const Eigen::VectorXd& v, Eigen::Index r, Eigen::Index c) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), r, c);
}

Eigen::MatrixXd random_rows_simplex(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Eigen::MatrixXd p(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) p(i, j) = e(rng);
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

// Hard-target cross-view contrastive loss written out directly.
double infonce_direct(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double lc) {
  const Eigen::Index n = a.rows();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto sim = [&](Eigen::Index j) {
      const Eigen::RowVectorXd u = a.row(i).normalized();
      const Eigen::RowVectorXd v = b.row(j).normalized();
      return lc * a.row(i).dot(b.row(j)) - (1.0 - lc) * (u - v).norm();
    };
    double denom = 0.0;
    for (Eigen::Index m = 0; m < n; ++m)
      if (m != i) denom += std::exp(sim(m));
    loss -= sim(i) - std::log(denom);
  }
  return loss / static_cast<double>(n);
}

TransitionMatrix random_transition(Eigen::Index fine, Eigen::Index coarse, std::mt19937_64& rng) {
  TransitionMatrix t;
  t.entries = random_rows_simplex(fine, coarse, rng);
  t.fixed.assign(static_cast<std::size_t>(fine), false);
  return t;
}

}  // namespace

TEST_CASE("cls_loss reference values") {
  LossConfig cfg;
  cfg.lambda_b = 0.0;
  SUBCASE("uniform prediction, one-hot target, no entropy term") {
    cfg.xi = 0.0;
    const Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(3, 5);
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(3, 5);
    q(0, 1) = q(1, 2) = q(2, 4) = 1.0;
    const std::vector<int> none(3, -1);
    CHECK(cls_loss(logits, q, none, cfg).value == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  }
  SUBCASE("entropy regulariser at a uniform mean") {
    cfg.xi = 1.0;
    Eigen::MatrixXd logits(2, 2);
    logits << 40.0, 0.0, 0.0, 40.0;
    // targets equal the (numerically one-hot) predictions: zero cross-entropy
    const Eigen::MatrixXd q = softmax_rows(logits);
    const std::vector<int> none(2, -1);
    const auto r = cls_loss(logits, q, none, cfg);
    CHECK(r.mean_entropy == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(r.value == doctest::Approx(-std::log(2.0)).epsilon(1e-9));
  }
  SUBCASE("supervised term is the labelled cross-entropy") {
    cfg.lambda_b = 1.0;
    Eigen::MatrixXd logits(2, 3);
    logits << 1.0, 2.0, 0.5, 0.0, 0.0, 0.0;
    const std::vector<int> labels{1, -1};
    const auto r = cls_loss(logits, Eigen::MatrixXd::Constant(2, 3, 1.0 / 3.0), labels, cfg);
    const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(0.5));
    CHECK(r.value == doctest::Approx(lse - 2.0).epsilon(1e-12));
  }
}

TEST_CASE("cls_loss errors") {
  LossConfig cfg;
  const std::vector<int> none;
  CHECK_THROWS_AS(cls_loss(Eigen::MatrixXd(0, 3), Eigen::MatrixXd(0, 3), none, cfg), InputError);
  const std::vector<int> labels{5, -1};
  CHECK_THROWS_AS(cls_loss(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Constant(2, 3, 1.0 / 3), labels, cfg),
                  InputError);
  const std::vector<int> short_labels{0};
  CHECK_THROWS_AS(cls_loss(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Constant(2, 3, 1.0 / 3), short_labels, cfg),
                  InputError);
}

TEST_CASE("cls_loss gradient matches finite differences") {
  std::mt19937_64 rng(21);
  LossConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd logits = 2.0 * oracle::random_matrix(6, 4, rng);
    const Eigen::MatrixXd q = random_rows_simplex(6, 4, rng);
    const std::vector<int> labels{0, -1, 3, -1, -1, 1};
    const auto r = cls_loss(logits, q, labels, cfg);
    auto f = [&](const Eigen::VectorXd& v) { return cls_loss(shaped(v, 6, 4), q, labels, cfg).value; };
    CHECK(oracle::relative_error(flat(r.grad), oracle::fd_gradient(f, flat(logits))) < 1e-5);
  }
}

TEST_CASE("sharpen lowers the temperature") {
  Eigen::MatrixXd s(1, 3);
  s << 0.9, 0.5, 0.1;
  const auto q = sharpen(s, 0.07);
  const auto p = softmax_rows(s, 0.1);
  CHECK(q(0, 0) > p(0, 0));
  CHECK(std::abs(q.row(0).sum() - 1.0) <= 1e-12);
  CHECK(q(0, 1) == doctest::Approx(std::exp((0.5 - 0.9) / 0.07) / (1 + std::exp(-0.4 / 0.07) + std::exp(-0.8 / 0.07))));
}

TEST_CASE("similarity_matrix") {
  CHECK(similarity_matrix(Eigen::MatrixXd::Identity(3, 3)) == Eigen::MatrixXd::Identity(3, 3));
  Eigen::MatrixXd twin(2, 3);
  twin << 1, 2, 3, 1, 2, 3;
  CHECK(similarity_matrix(twin)(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd z = oracle::random_matrix(3, 5, rng);
  const auto s = similarity_matrix(z);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      double dot = 0, ni = 0, nj = 0;
      for (Eigen::Index c = 0; c < 5; ++c) {
        dot += z(i, c) * z(j, c);
        ni += z(i, c) * z(i, c);
        nj += z(j, c) * z(j, c);
      }
      CHECK(std::abs(s(i, j) - dot / std::sqrt(ni * nj)) <= 1e-12);
    }
  CHECK_THROWS_AS(similarity_matrix(Eigen::MatrixXd::Zero(2, 3)), NumericError);
}

TEST_CASE("fuse_hierarchy") {
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  const std::vector<Eigen::MatrixXd> one{ones};
  CHECK(fuse_hierarchy(one) == ones);
  const std::vector<Eigen::MatrixXd> same{eye, eye};
  CHECK(fuse_hierarchy(same) == eye);
  const std::vector<Eigen::MatrixXd> mixed{ones, eye};
  Eigen::MatrixXd expect(2, 2);
  expect << 1, 0.5, 0.5, 1;
  CHECK(fuse_hierarchy(mixed) == expect);
  CHECK(fuse_hierarchy(mixed, FusionRule::Max) == ones);
  const std::vector<Eigen::MatrixXd> three{ones, eye, eye};
  CHECK(fuse_hierarchy(three, FusionRule::PairwiseMean) == eye);
  CHECK((fuse_hierarchy(three) - (ones + 2 * eye) / 3.0).norm() <= 1e-15);
  const std::vector<Eigen::MatrixXd> bad{ones, Eigen::MatrixXd::Ones(3, 3)};
  CHECK_THROWS_AS(fuse_hierarchy(bad), InputError);
  CHECK(fusion_rule_from_string(to_string(FusionRule::PairwiseMean)) == FusionRule::PairwiseMean);
  CHECK_THROWS_AS(fusion_rule_from_string("median"), InputError);
}

TEST_CASE("soft_labels") {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd s = similarity_matrix(oracle::random_matrix(4, 3, rng));
  CHECK(soft_labels(s, 0.0) == Eigen::MatrixXd::Identity(4, 4));
  CHECK(soft_labels(s, 1.0) == s);
  Eigen::MatrixXd half(2, 2), expect(2, 2);
  half << 1, 0.4, 0.4, 1;
  expect << 1, 0.2, 0.2, 1;
  CHECK((soft_labels(half, 0.5) - expect).norm() <= 1e-15);
  // affine in lambda_s
  const auto a = soft_labels(s, 0.3);
  const auto b = soft_labels(s, 0.7);
  CHECK((soft_labels(s, 0.5) - 0.5 * (a + b)).norm() <= 1e-15);
  // range and symmetry
  for (double ls : {0.0, 0.25, 0.6, 1.0}) {
    const auto y = soft_labels(s, ls);
    CHECK((y.diagonal().array() == 1.0).all());
    CHECK((y.array() >= -ls - 1e-15).all());
    CHECK((y.array() <= 1.0 + 1e-15).all());
    CHECK(y == y.transpose());
  }
  CHECK((soft_labels(s, 1.0, true).array() >= 0.0).all());
  CHECK_THROWS_AS(soft_labels(s, 1.5), InputError);

  const auto n = normalize_soft_labels(s);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(std::abs(n.row(i).sum() - 1.0) <= 1e-12);
  CHECK((n.array() >= 0.0).all());
  CHECK_THROWS_AS(normalize_soft_labels(-Eigen::MatrixXd::Identity(2, 2)), NumericError);
}

TEST_CASE("hybrid_sim") {
  Eigen::VectorXd a(2), b(2);
  a << 1, 0;
  for (double lc : {0.0, 0.3, 1.0}) CHECK(hybrid_sim(a, a, lc) == doctest::Approx(lc).epsilon(1e-15));
  CHECK(hybrid_sim(a, -a, 0.0) == doctest::Approx(-2.0).epsilon(1e-15));
  b << 0, 1;
  CHECK(hybrid_sim(a, b, 0.5) == doctest::Approx(-0.5 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(hybrid_sim(a, Eigen::VectorXd::Zero(2), 0.5), NumericError);
}

TEST_CASE("hscl_loss reference values") {
  std::mt19937_64 rng(12);
  SUBCASE("two samples, identity targets") {
    const Eigen::MatrixXd a = oracle::unit_rows(oracle::random_matrix(2, 3, rng));
    const Eigen::MatrixXd b = oracle::unit_rows(oracle::random_matrix(2, 3, rng));
    const double lc = 0.6;
    auto sim = [&](Eigen::Index i, Eigen::Index j) { return hybrid_sim(a.row(i), b.row(j), lc); };
    const double expect = -0.5 * ((sim(0, 0) - sim(0, 1)) + (sim(1, 1) - sim(1, 0)));
    CHECK(hscl_loss(a, b, Eigen::MatrixXd::Identity(2, 2), lc).value == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("zero targets") {
    const Eigen::MatrixXd a = oracle::random_matrix(4, 3, rng);
    const auto r = hscl_loss(a, a, Eigen::MatrixXd::Zero(4, 4), 0.5);
    CHECK(r.value == 0.0);
    CHECK(r.grad_a.norm() == 0.0);
    CHECK(r.grad_b.norm() == 0.0);
  }
  SUBCASE("identity targets equal the hard contrastive loss") {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Index n = 2 + trial % 7;
      const Eigen::MatrixXd a = oracle::unit_rows(oracle::random_matrix(n, 4, rng));
      const Eigen::MatrixXd b = oracle::unit_rows(oracle::random_matrix(n, 4, rng));
      const double lc = (trial % 5) / 4.0;
      CHECK(std::abs(hscl_loss(a, b, Eigen::MatrixXd::Identity(n, n), lc).value - infonce_direct(a, b, lc)) <= 1e-10);
    }
  }
  CHECK_THROWS_AS(hscl_loss(Eigen::MatrixXd::Ones(1, 3), Eigen::MatrixXd::Ones(1, 3), Eigen::MatrixXd::Ones(1, 1), 0.5),
                  InputError);
}

TEST_CASE("hscl_loss gradient matches finite differences") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    const Eigen::MatrixXd a = oracle::random_matrix(4, 3, rng);
    const Eigen::MatrixXd b = oracle::random_matrix(4, 3, rng);
    const Eigen::MatrixXd y = soft_labels(similarity_matrix(oracle::random_matrix(4, 3, rng)), 0.8);
    const double lc = trial / 7.0;
    const auto r = hscl_loss(a, b, y, lc);
    auto fa = [&](const Eigen::VectorXd& v) { return hscl_loss(shaped(v, 4, 3), b, y, lc).value; };
    auto fb = [&](const Eigen::VectorXd& v) { return hscl_loss(a, shaped(v, 4, 3), y, lc).value; };
    CHECK(oracle::relative_error(flat(r.grad_a), oracle::fd_gradient(fa, flat(a))) < 1e-5);
    CHECK(oracle::relative_error(flat(r.grad_b), oracle::fd_gradient(fb, flat(b))) < 1e-5);
  }
}

TEST_CASE("supcon_loss") {
  std::mt19937_64 rng(41);
  const std::vector<int> labels{0, 1, 0, 2, 1, 0};
  for (int trial = 0; trial < 6; ++trial) {
    const Eigen::MatrixXd z = oracle::unit_rows(oracle::random_matrix(6, 4, rng));
    const auto r = supcon_loss(z, labels, 0.07);
    auto f = [&](const Eigen::VectorXd& v) { return supcon_loss(shaped(v, 6, 4), labels, 0.07).value; };
    CHECK(oracle::relative_error(flat(r.grad), oracle::fd_gradient(f, flat(z), 1e-7)) < 1e-5);
    CHECK(r.value > 0.0);
  }
  // no positive pairs: nothing to learn
  const std::vector<int> distinct{0, 1, 2};
  const auto none = supcon_loss(oracle::random_matrix(3, 2, rng), distinct, 0.1);
  CHECK(none.value == 0.0);
  CHECK(none.grad.norm() == 0.0);
}

TEST_CASE("cgc_loss values") {
  LossConfig cfg;
  cfg.tau_c = 1.0;
  SUBCASE("coarse posteriors equal to the mapped fine posteriors") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd fine_logits = oracle::random_matrix(5, 4, rng);
    TransitionMatrix m;
    m.entries.resize(4, 2);
    m.entries << 1, 0, 1, 0, 0, 1, 0, 1;
    m.fixed.assign(4, true);
    const Eigen::MatrixXd target = softmax_rows(fine_logits) * m.entries;
    const std::vector<Eigen::MatrixXd> coarse{target.array().log().matrix()};
    const std::vector<TransitionMatrix> ms{m};
    CHECK(std::abs(cgc_loss(coarse, fine_logits, ms, cfg).value) <= 1e-12);
  }
  SUBCASE("one-hot coarse against an even target") {
    Eigen::MatrixXd coarse(1, 2);
    coarse << 60.0, 0.0;  // softmax is [1, ~1e-26]
    TransitionMatrix m;
    m.entries = Eigen::MatrixXd::Constant(2, 2, 0.5);
    m.fixed.assign(2, false);
    const std::vector<Eigen::MatrixXd> cl{coarse};
    const std::vector<TransitionMatrix> ms{m};
    CHECK(cgc_loss(cl, Eigen::MatrixXd::Zero(1, 2), ms, cfg).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("non-negative and zero only at agreement") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
      const auto m = random_transition(5, 3, rng);
      const std::vector<TransitionMatrix> ms{m};
      const std::vector<Eigen::MatrixXd> cl{3.0 * oracle::random_matrix(4, 3, rng)};
      const double v = cgc_loss(cl, 3.0 * oracle::random_matrix(4, 5, rng), ms, cfg).value;
      CHECK(v >= 0.0);
    }
  }
  CHECK_THROWS_AS(cgc_loss(std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(2, 2)}, Eigen::MatrixXd::Zero(2, 3),
                           std::vector<TransitionMatrix>{}, cfg),
                  InputError);
}

TEST_CASE("cgc_loss gradients match finite differences") {
  std::mt19937_64 rng(51);
  for (bool detach : {true, false}) {
    LossConfig cfg;
    cfg.cgc_detach_target = detach;
    const std::vector<TransitionMatrix> ms{random_transition(5, 2, rng), random_transition(5, 3, rng)};
    const std::vector<Eigen::MatrixXd> cl{oracle::random_matrix(4, 2, rng), oracle::random_matrix(4, 3, rng)};
    const Eigen::MatrixXd fl = oracle::random_matrix(4, 5, rng);
    const auto r = cgc_loss(cl, fl, ms, cfg);
    for (std::size_t h = 0; h < 2; ++h) {
      auto f = [&](const Eigen::VectorXd& v) {
        auto c = cl;
        c[h] = shaped(v, 4, cl[h].cols());
        return cgc_loss(c, fl, ms, cfg).value;
      };
      CHECK(oracle::relative_error(flat(r.grad_coarse[h]), oracle::fd_gradient(f, flat(cl[h]))) < 1e-5);
    }
    if (detach) {
      CHECK(r.grad_fine.norm() == 0.0);
    } else {
      auto f = [&](const Eigen::VectorXd& v) { return cgc_loss(cl, shaped(v, 4, 5), ms, cfg).value; };
      CHECK(oracle::relative_error(flat(r.grad_fine), oracle::fd_gradient(f, flat(fl))) < 1e-5);
    }
  }
}

TEST_CASE("total_loss") {
  LossComponents zero{{0, 0}, {0, 0}, 0};
  CHECK(total_loss(zero) == 0.0);
  LossComponents c{{0.5, 0.25}, {0.25, 0.125}, 0.1};
  CHECK(total_loss(c) == doctest::Approx(1.225).epsilon(1e-15));
  LossComponents single{{0.3}, {0.7}, 0.0};
  CHECK(total_loss(single) == doctest::Approx(1.0));
  c.cls[1] = std::nan("");
  try {
    total_loss(c);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("cls[2]") != std::string::npos);
  }
}

TEST_CASE("loss config validation") {
  LossConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.lambda_s = 1.2;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = LossConfig{};
  cfg.tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}
