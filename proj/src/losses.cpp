// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include "seal/losses.hpp"

#include <cmath>
#include <limits>

#include "seal/errors.hpp"

namespace seal {
namespace {

void require_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw InputError(std::string(name) + " must lie in [0,1]");
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) throw InputError(std::string(name) + " must be positive");
}

Eigen::MatrixXd normalized_rows(const Eigen::MatrixXd& m, Eigen::VectorXd& norms, const char* what) {
  norms = m.rowwise().norm();
  if ((norms.array() <= 0.0).any() || !norms.allFinite())
    throw NumericError(std::string(what) + " has a zero-norm or non-finite row");
  return m.array().colwise() / norms.array();
}

// Jacobian-transpose of x -> x/|x| for every row.
Eigen::MatrixXd normalize_backward(const Eigen::MatrixXd& grad, const Eigen::MatrixXd& unit, const Eigen::VectorXd& norm) {
  const Eigen::VectorXd radial = (grad.array() * unit.array()).rowwise().sum();
  Eigen::MatrixXd out = grad - (unit.array().colwise() * radial.array()).matrix();
  return out.array().colwise() / norm.array();
}

void require_distributions(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if ((m.row(i).array() < 0.0).any() || std::abs(m.row(i).sum() - 1.0) > 1e-9)
      throw InputError(std::string(what) + " row " + std::to_string(i) + " is not a probability distribution");
  }
}

}  // namespace

std::string to_string(FusionRule rule) {
  switch (rule) {
    case FusionRule::CumulativeMean: return "cumulative_mean";
    case FusionRule::Max: return "max";
    case FusionRule::PairwiseMean: return "pairwise_mean";
  }
  return "cumulative_mean";
}

FusionRule fusion_rule_from_string(const std::string& name) {
  if (name == "cumulative_mean") return FusionRule::CumulativeMean;
  if (name == "max") return FusionRule::Max;
  if (name == "pairwise_mean") return FusionRule::PairwiseMean;
  throw InputError("unknown fusion rule '" + name + "'");
}

void LossConfig::validate() const {
  require_positive(tau, "tau");
  require_positive(tau_sharp, "tau_sharp");
  require_positive(tau_c, "tau_c");
  require_positive(tau_supcon, "tau_supcon");
  require_unit_interval(lambda_b, "lambda_b");
  require_unit_interval(lambda_s, "lambda_s");
  require_unit_interval(lambda_c_start, "lambda_c_start");
  require_unit_interval(lambda_c_end, "lambda_c_end");
  require_unit_interval(transition_momentum, "transition_momentum");
  if (!(xi >= 0.0)) throw InputError("xi must be non-negative");
  if (!(beta >= 0.0)) throw InputError("beta must be non-negative");
  if (!(kl_floor > 0.0 && kl_floor < 1e-3)) throw InputError("kl_floor must lie in (0, 1e-3)");
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits, double temperature) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out.row(i) = ((logits.row(i).array() - m) / temperature).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Eigen::MatrixXd sharpen(const Eigen::MatrixXd& scores, double tau_sharp) {
  require_positive(tau_sharp, "tau_sharp");
  return softmax_rows(scores, tau_sharp);
}

ClsLoss cls_loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& targets, std::span<const int> labels,
                 const LossConfig& cfg) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index k = logits.cols();
  if (n == 0) throw InputError("classification loss on an empty batch");
  if (targets.rows() != n || targets.cols() != k) throw InputError("pseudo-labels do not match the logits");
  if (static_cast<Eigen::Index>(labels.size()) != n) throw InputError("one label slot per row is required");
  require_distributions(targets, "pseudo-label");

  const Eigen::MatrixXd p = softmax_rows(logits);
  const Eigen::MatrixXd log_p = [&] {
    Eigen::MatrixXd out(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = logits.row(i).maxCoeff();
      const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
      out.row(i) = logits.row(i).array() - lse;
    }
    return out;
  }();

  ClsLoss out;
  const double inv_n = 1.0 / static_cast<double>(n);
  // Unsupervised: mean cross-entropy to the pseudo-labels minus xi * H(mean p).
  const double ce = -(targets.array() * log_p.array()).sum() * inv_n;
  const Eigen::RowVectorXd mean_p = p.colwise().mean();
  double entropy = 0.0;
  Eigen::RowVectorXd log_mean(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    log_mean(j) = mean_p(j) > 0.0 ? std::log(mean_p(j)) : -std::numeric_limits<double>::infinity();
    if (mean_p(j) > 0.0) entropy -= mean_p(j) * log_mean(j);
  }
  out.mean_entropy = entropy;
  out.unsupervised = ce - cfg.xi * entropy;

  Eigen::MatrixXd grad_u = (p - targets) * inv_n;
  if (cfg.xi != 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double expect = 0.0;
      for (Eigen::Index j = 0; j < k; ++j)
        if (p(i, j) > 0.0) expect += p(i, j) * log_mean(j);
      for (Eigen::Index j = 0; j < k; ++j)
        if (p(i, j) > 0.0) grad_u(i, j) += cfg.xi * inv_n * p(i, j) * (log_mean(j) - expect);
    }
  }

  Eigen::MatrixXd grad_s = Eigen::MatrixXd::Zero(n, k);
  std::size_t n_labelled = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0) continue;
    if (y >= k) throw InputError("label " + std::to_string(y) + " out of range for " + std::to_string(k) + " classes");
    ++n_labelled;
  }
  if (n_labelled > 0) {
    const double inv_l = 1.0 / static_cast<double>(n_labelled);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int y = labels[static_cast<std::size_t>(i)];
      if (y < 0) continue;
      out.supervised -= log_p(i, y) * inv_l;
      grad_s.row(i) = p.row(i) * inv_l;
      grad_s(i, y) -= inv_l;
    }
  }

  out.value = (1.0 - cfg.lambda_b) * out.unsupervised + cfg.lambda_b * out.supervised;
  out.grad = (1.0 - cfg.lambda_b) * grad_u + cfg.lambda_b * grad_s;
  return out;
}

Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& features) {
  Eigen::VectorXd norms;
  const Eigen::MatrixXd unit = normalized_rows(features, norms, "similarity input");
  Eigen::MatrixXd s = unit * unit.transpose();
  s = 0.5 * (s + s.transpose()).eval();
  s.diagonal().setOnes();
  return s;
}

Eigen::MatrixXd fuse_hierarchy(std::span<const Eigen::MatrixXd> similarities, FusionRule rule) {
  if (similarities.empty()) throw InputError("nothing to fuse");
  const auto& first = similarities.front();
  for (const auto& s : similarities)
    if (s.rows() != first.rows() || s.cols() != first.cols() || s.rows() != s.cols())
      throw InputError("similarity matrices must be square and share one shape");
  const std::size_t h = similarities.size();
  switch (rule) {
    case FusionRule::CumulativeMean: {
      Eigen::MatrixXd out = first;
      for (std::size_t j = 1; j < h; ++j) out += similarities[j];
      return out / static_cast<double>(h);
    }
    case FusionRule::Max: {
      Eigen::MatrixXd out = first;
      for (std::size_t j = 1; j < h; ++j) out = out.cwiseMax(similarities[j]);
      return out;
    }
    case FusionRule::PairwiseMean:
      if (h == 1) return first;
      return 0.5 * (similarities[h - 2] + similarities[h - 1]);
  }
  return first;
}

Eigen::MatrixXd soft_labels(const Eigen::MatrixXd& fused, double lambda_s, bool clamp) {
  require_unit_interval(lambda_s, "lambda_s");
  if (fused.rows() != fused.cols()) throw InputError("soft labels need a square similarity matrix");
  Eigen::MatrixXd out = lambda_s * fused;
  if (clamp) out = out.cwiseMax(0.0);
  out.diagonal().array() += 1.0 - lambda_s;
  return out;
}

Eigen::MatrixXd normalize_soft_labels(const Eigen::MatrixXd& targets) {
  Eigen::MatrixXd out = targets.cwiseMax(0.0);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double mass = out.row(i).sum();
    if (!(mass > 0.0) || !std::isfinite(mass)) throw NumericError("soft-label row without positive mass");
    out.row(i) /= mass;
  }
  return out;
}

double hybrid_sim(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lambda_c) {
  require_unit_interval(lambda_c, "lambda_c");
  if (a.size() != b.size()) throw InputError("hybrid similarity of vectors with different sizes");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0) || !std::isfinite(na) || !std::isfinite(nb))
    throw NumericError("hybrid similarity of a zero-norm or non-finite vector");
  return lambda_c * a.dot(b) - (1.0 - lambda_c) * (a / na - b / nb).norm();
}

PairLoss hscl_loss(const Eigen::MatrixXd& anchors, const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& targets,
                   double lambda_c) {
  require_unit_interval(lambda_c, "lambda_c");
  const Eigen::Index b = anchors.rows();
  if (b < 2) throw InputError("soft contrastive loss needs at least two samples");
  if (candidates.rows() != b || candidates.cols() != anchors.cols()) throw InputError("the two views are not row-aligned");
  if (targets.rows() != b || targets.cols() != b) throw InputError("soft labels must be B x B");

  Eigen::VectorXd norm_a, norm_b;
  const Eigen::MatrixXd ua = normalized_rows(anchors, norm_a, "contrastive anchor");
  const Eigen::MatrixXd ub = normalized_rows(candidates, norm_b, "contrastive candidate");
  const Eigen::MatrixXd dot = anchors * candidates.transpose();
  const Eigen::MatrixXd cos = ua * ub.transpose();
  // |ua_i - ub_j| from the cosine, clamped against rounding below zero.
  const Eigen::MatrixXd dist = (2.0 - 2.0 * cos.array()).max(0.0).sqrt().matrix();
  const Eigen::MatrixXd sim = lambda_c * dot - (1.0 - lambda_c) * dist;

  PairLoss out;
  const double inv_b = 1.0 / static_cast<double>(b);
  Eigen::MatrixXd g(b, b);  // d loss / d sim
  for (Eigen::Index i = 0; i < b; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < b; ++j)
      if (j != i) m = std::max(m, sim(i, j));
    double z = 0.0;
    for (Eigen::Index j = 0; j < b; ++j)
      if (j != i) z += std::exp(sim(i, j) - m);
    const double lse = m + std::log(z);
    const double row_mass = targets.row(i).sum();
    for (Eigen::Index j = 0; j < b; ++j) {
      out.value -= inv_b * targets(i, j) * (sim(i, j) - lse);
      const double pi = j == i ? 0.0 : std::exp(sim(i, j) - lse);
      g(i, j) = -inv_b * (targets(i, j) - row_mass * pi);
    }
  }

  // Distance-term weights; coincident pairs contribute a zero subgradient.
  Eigen::MatrixXd w(b, b);
  for (Eigen::Index i = 0; i < b; ++i)
    for (Eigen::Index j = 0; j < b; ++j) w(i, j) = dist(i, j) > 0.0 ? (1.0 - lambda_c) * g(i, j) / dist(i, j) : 0.0;

  const Eigen::MatrixXd d_ua = -((ua.array().colwise() * w.rowwise().sum().array()).matrix() - w * ub);
  const Eigen::MatrixXd d_ub = -((ub.array().colwise() * w.colwise().sum().transpose().array()).matrix() - w.transpose() * ua);
  out.grad_a = lambda_c * g * candidates + normalize_backward(d_ua, ua, norm_a);
  out.grad_b = lambda_c * g.transpose() * anchors + normalize_backward(d_ub, ub, norm_b);
  return out;
}

SupConLoss supcon_loss(const Eigen::MatrixXd& features, std::span<const int> labels, double temperature) {
  require_positive(temperature, "supervised contrastive temperature");
  const Eigen::Index m = features.rows();
  if (static_cast<Eigen::Index>(labels.size()) != m) throw InputError("one label per supervised contrastive row");
  SupConLoss out;
  out.grad = Eigen::MatrixXd::Zero(m, features.cols());
  if (m < 2) return out;

  const Eigen::MatrixXd s = features * features.transpose() / temperature;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
  std::size_t anchors = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    std::size_t positives = 0;
    for (Eigen::Index j = 0; j < m; ++j)
      if (j != i && labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) ++positives;
    if (positives > 0) ++anchors;
  }
  if (anchors == 0) return out;
  const double inv_a = 1.0 / static_cast<double>(anchors);

  for (Eigen::Index i = 0; i < m; ++i) {
    const int yi = labels[static_cast<std::size_t>(i)];
    std::size_t positives = 0;
    for (Eigen::Index j = 0; j < m; ++j)
      if (j != i && labels[static_cast<std::size_t>(j)] == yi) ++positives;
    if (positives == 0) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j)
      if (j != i) mx = std::max(mx, s(i, j));
    double z = 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
      if (j != i) z += std::exp(s(i, j) - mx);
    const double lse = mx + std::log(z);
    const double inv_p = 1.0 / static_cast<double>(positives);
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      const bool pos = labels[static_cast<std::size_t>(j)] == yi;
      if (pos) out.value -= inv_a * inv_p * (s(i, j) - lse);
      g(i, j) = inv_a * (std::exp(s(i, j) - lse) - (pos ? inv_p : 0.0));
    }
  }
  out.grad = (g + g.transpose()) * features / temperature;
  return out;
}

double kl_rows(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q, double floor) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) throw InputError("KL between differently shaped tables");
  if (p.rows() == 0) throw InputError("KL over an empty batch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (p(i, j) > 0.0) total += p(i, j) * (std::log(p(i, j)) - std::log(std::max(q(i, j), floor)));
  return total / static_cast<double>(p.rows());
}

double cgc_divergence(std::span<const Eigen::MatrixXd> coarse_probs, const Eigen::MatrixXd& fine_probs,
                      std::span<const TransitionMatrix> transitions, double floor) {
  if (coarse_probs.size() != transitions.size()) throw InputError("one transition matrix per coarse level");
  double total = 0.0;
  for (std::size_t h = 0; h < coarse_probs.size(); ++h) {
    const auto& m = transitions[h].entries;
    if (fine_probs.cols() != m.rows() || coarse_probs[h].cols() != m.cols() || coarse_probs[h].rows() != fine_probs.rows())
      throw InputError("consistency inputs do not match transition matrix " + std::to_string(h + 1));
    total += kl_rows(coarse_probs[h], fine_probs * m, floor);
  }
  return total;
}

CgcLoss cgc_loss(std::span<const Eigen::MatrixXd> coarse_logits, const Eigen::MatrixXd& fine_logits,
                 std::span<const TransitionMatrix> transitions, const LossConfig& cfg) {
  if (coarse_logits.size() != transitions.size()) throw InputError("one transition matrix per coarse level");
  const Eigen::Index n = fine_logits.rows();
  if (n == 0) throw InputError("consistency loss on an empty batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  const double t = cfg.tau_c;
  const Eigen::MatrixXd pf = softmax_rows(fine_logits, t);

  CgcLoss out;
  out.grad_fine = Eigen::MatrixXd::Zero(n, fine_logits.cols());
  Eigen::MatrixXd d_pf = Eigen::MatrixXd::Zero(n, fine_logits.cols());
  for (std::size_t h = 0; h < coarse_logits.size(); ++h) {
    const auto& m = transitions[h].entries;
    const auto& lc = coarse_logits[h];
    if (lc.rows() != n || lc.cols() != m.cols() || fine_logits.cols() != m.rows())
      throw InputError("consistency logits do not match transition matrix " + std::to_string(h + 1));
    const Eigen::MatrixXd pc = softmax_rows(lc, t);
    const Eigen::MatrixXd target = pf * m;
    Eigen::MatrixXd grad(n, lc.cols());
    double level_total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::RowVectorXd r(lc.cols());
      double kl = 0.0;
      for (Eigen::Index j = 0; j < lc.cols(); ++j) {
        r(j) = pc(i, j) > 0.0 ? std::log(pc(i, j)) - std::log(std::max(target(i, j), cfg.kl_floor)) : 0.0;
        kl += pc(i, j) * r(j);
      }
      level_total += kl;
      grad.row(i) = (inv_n / t) * (pc.row(i).array() * (r.array() - kl)).matrix();
      if (!cfg.cgc_detach_target) {
        for (Eigen::Index j = 0; j < lc.cols(); ++j)
          if (target(i, j) > cfg.kl_floor) d_pf.row(i) -= inv_n * pc(i, j) / target(i, j) * m.col(j).transpose();
      }
    }
    out.per_level.push_back(level_total * inv_n);
    out.value += level_total * inv_n;
    out.grad_coarse.push_back(std::move(grad));
  }
  if (!cfg.cgc_detach_target) {
    const Eigen::VectorXd radial = (pf.array() * d_pf.array()).rowwise().sum();
    out.grad_fine = (pf.array() * (d_pf.array().colwise() - radial.array())).matrix() / t;
  }
  return out;
}

double total_loss(const LossComponents& c) {
  double total = 0.0;
  auto add = [&](double v, const std::string& name) {
    if (!std::isfinite(v)) throw NumericError("non-finite loss component " + name);
    total += v;
  };
  for (std::size_t h = 0; h < c.soft_rep.size(); ++h) add(c.soft_rep[h], "soft_rep[" + std::to_string(h + 1) + "]");
  for (std::size_t h = 0; h < c.cls.size(); ++h) add(c.cls[h], "cls[" + std::to_string(h + 1) + "]");
  add(c.cgc, "cgc");
  return total;
}

}  // namespace seal
