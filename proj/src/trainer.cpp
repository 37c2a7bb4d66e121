// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include "seal/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <thread>

#include "seal/errors.hpp"

namespace seal {
namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// Runs fn(begin, end, worker) over fixed-size row chunks, dealt round-robin
// to the workers. Chunk boundaries do not depend on the thread count, so
// results are bitwise identical for any `threads`.
constexpr Eigen::Index kRowChunk = 256;

template <typename Fn>
void parallel_rows(Eigen::Index rows, std::size_t threads, Fn&& fn) {
  const Eigen::Index chunks = (rows + kRowChunk - 1) / kRowChunk;
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, static_cast<std::size_t>(chunks)));
  auto work = [&](std::size_t w) {
    for (Eigen::Index c = static_cast<Eigen::Index>(w); c < chunks; c += static_cast<Eigen::Index>(workers))
      fn(c * kRowChunk, std::min(rows, (c + 1) * kRowChunk), w);
  };
  if (workers == 1) {
    work(0);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  for (auto& t : pool) t.join();
}

}  // namespace

std::string to_string(TransitionCadence cadence) { return cadence == TransitionCadence::Batch ? "batch" : "epoch"; }

TransitionCadence transition_cadence_from_string(const std::string& name) {
  if (name == "epoch") return TransitionCadence::Epoch;
  if (name == "batch") return TransitionCadence::Batch;
  throw InputError("unknown transition update cadence '" + name + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("epochs must be at least 1");
  if (batch_size < 2) throw InputError("batch_size must be at least 2");
  if (cosine) {
    if (!(lr_initial > lr_final && lr_final > 0.0)) throw InputError("cosine schedule needs lr_initial > lr_final > 0");
  } else if (!(lr_initial >= 0.0)) {
    throw InputError("lr_initial must be non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InputError("momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw InputError("weight_decay must be non-negative");
  if (!(view_noise >= 0.0)) throw InputError("view_noise must be non-negative");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw InputError("validation_fraction must lie in [0,1)");
  if (threads < 1) throw InputError("threads must be at least 1");
  if (model.proj_dim < 1) throw InputError("proj_dim must be positive");
}

double cosine_lr(std::size_t t, std::size_t total, double lr0, double lr_final) {
  if (total == 0) throw InputError("cosine schedule over zero steps");
  if (t > total) throw InputError("schedule step beyond the horizon");
  const double frac = static_cast<double>(t) / static_cast<double>(total);
  return lr_final + 0.5 * (lr0 - lr_final) * (1.0 + std::cos(std::numbers::pi * frac));
}

double curriculum_lambda(std::size_t t, std::size_t total) { return curriculum_lambda(t, total, 1.0, 0.0); }

double curriculum_lambda(std::size_t t, std::size_t total, double start, double end) {
  if (total == 0) return start;
  const double frac = static_cast<double>(std::min(t, total)) / static_cast<double>(total);
  return start + (end - start) * frac;
}

Eigen::MatrixXd perturb(const Eigen::MatrixXd& batch, double scale, std::mt19937_64& rng, bool renormalize) {
  if (!(scale >= 0.0)) throw InputError("view noise scale must be non-negative");
  if (scale == 0.0) return batch;
  std::normal_distribution<double> noise(0.0, scale);
  Eigen::MatrixXd out = batch;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += noise(rng);
    if (renormalize) {
      const double before = batch.row(i).norm();
      const double after = out.row(i).norm();
      if (after > 0.0) out.row(i) *= before / after;
    }
  }
  return out;
}

ViewPair make_views(const Eigen::MatrixXd& batch, double scale, std::mt19937_64& rng) {
  ViewPair views;
  views.a = perturb(batch, scale, rng);
  views.b = perturb(batch, scale, rng);
  return views;
}

ViewPair make_views(const Eigen::MatrixXd& batch, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return make_views(batch, scale, rng);
}

BatchSampler::BatchSampler(std::vector<std::size_t> labelled, std::vector<std::size_t> unlabelled,
                           std::size_t batch_size, std::uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
  if (batch_size < 2) throw InputError("batch size must be at least 2");
  if (labelled.empty() && unlabelled.empty()) throw InputError("no training samples");
  labelled_.items = std::move(labelled);
  unlabelled_.items = std::move(unlabelled);
  std::shuffle(labelled_.items.begin(), labelled_.items.end(), rng_);
  std::shuffle(unlabelled_.items.begin(), unlabelled_.items.end(), rng_);
}

void BatchSampler::take(Pool& pool, std::size_t count, std::vector<std::size_t>& out) {
  for (std::size_t i = 0; i < count; ++i) {
    if (pool.cursor == pool.items.size()) {
      std::shuffle(pool.items.begin(), pool.items.end(), rng_);
      pool.cursor = 0;
    }
    out.push_back(pool.items[pool.cursor++]);
  }
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> out;
  out.reserve(batch_size_);
  if (labelled_.items.empty()) {
    take(unlabelled_, batch_size_, out);
  } else if (unlabelled_.items.empty()) {
    take(labelled_, batch_size_, out);
  } else {
    const std::size_t half = batch_size_ / 2;
    take(labelled_, half, out);
    take(unlabelled_, batch_size_ - half, out);
  }
  return out;
}

std::size_t BatchSampler::steps_per_epoch() const {
  const std::size_t n = labelled_.items.size() + unlabelled_.items.size();
  return (n + batch_size_ - 1) / batch_size_;
}

ObjectiveResult evaluate_objective(const ModelState& state, const BatchInput& batch,
                                   std::span<const TransitionMatrix> transitions, const LossConfig& cfg,
                                   double lambda_c, const ObjectiveTerms& terms, const ForwardTrace* frozen_a,
                                   const ForwardTrace* frozen_b, bool with_gradients) {
  const std::size_t levels = state.levels();
  const Eigen::Index b = batch.view_a.rows();
  if (b < 2 || batch.view_b.rows() != b) throw InputError("a batch needs two aligned views of at least two rows");
  if (batch.labels.size() != levels) throw InputError("batch labels must cover every level");

  ObjectiveResult out;
  out.trace_a = forward(state, batch.view_a, frozen_a);
  out.trace_b = forward(state, batch.view_b, frozen_b);
  const ForwardTrace& fa = frozen_a ? *frozen_a : out.trace_a;
  const ForwardTrace& fb = frozen_b ? *frozen_b : out.trace_b;

  UpstreamGradients up_a = UpstreamGradients::zeros_like(state);
  UpstreamGradients up_b = UpstreamGradients::zeros_like(state);
  for (std::size_t h = 0; h < levels; ++h) {
    up_a.logits[h] = Eigen::MatrixXd::Zero(b, state.prototypes[h].rows());
    up_b.logits[h] = Eigen::MatrixXd::Zero(b, state.prototypes[h].rows());
    up_a.slices[h] = Eigen::MatrixXd::Zero(b, static_cast<Eigen::Index>(state.slice_width(h)));
    up_b.slices[h] = Eigen::MatrixXd::Zero(b, static_cast<Eigen::Index>(state.slice_width(h)));
  }

  out.components.soft_rep.assign(levels, 0.0);
  out.components.cls.assign(levels, 0.0);
  out.hscl.assign(levels, 0.0);
  out.supcon.assign(levels, 0.0);

  std::vector<Eigen::MatrixXd> similarities;
  for (std::size_t h = 0; h < levels; ++h) similarities.push_back(similarity_matrix(fa.slices[h]));

  for (std::size_t h = 0; h < levels; ++h) {
    if (terms.only_level && *terms.only_level != h) continue;
    const auto& labels = batch.labels[h];
    if (labels.size() != static_cast<std::size_t>(b)) throw InputError("batch labels are not row-aligned");

    if (terms.cls) {
      Eigen::MatrixXd logits(2 * b, state.prototypes[h].rows());
      logits << out.trace_a.logits[h], out.trace_b.logits[h];
      Eigen::MatrixXd targets(2 * b, state.prototypes[h].rows());
      targets << sharpen(fb.scores[h], state.tau_sharp), sharpen(fa.scores[h], state.tau_sharp);
      std::vector<int> stacked(labels.begin(), labels.end());
      stacked.insert(stacked.end(), labels.begin(), labels.end());
      const ClsLoss cls = cls_loss(logits, targets, stacked, cfg);
      out.components.cls[h] = cls.value;
      up_a.logits[h] += cls.grad.topRows(b);
      up_b.logits[h] += cls.grad.bottomRows(b);
    }

    if (terms.hscl && cfg.lambda_b < 1.0) {
      const Eigen::MatrixXd fused = fuse_hierarchy(std::span<const Eigen::MatrixXd>(similarities.data(), h + 1), cfg.fusion);
      Eigen::MatrixXd targets = soft_labels(fused, cfg.lambda_s, cfg.clamp_soft_labels);
      if (cfg.normalize_soft_labels) targets = normalize_soft_labels(targets);
      const PairLoss ab = hscl_loss(out.trace_a.slices[h], out.trace_b.slices[h], targets, lambda_c);
      const PairLoss ba = hscl_loss(out.trace_b.slices[h], out.trace_a.slices[h], targets.transpose(), lambda_c);
      out.hscl[h] = 0.5 * (ab.value + ba.value);
      const double w = 0.5 * (1.0 - cfg.lambda_b);
      up_a.slices[h] += w * (ab.grad_a + ba.grad_b);
      up_b.slices[h] += w * (ab.grad_b + ba.grad_a);
    }

    if (terms.supcon && cfg.supcon && cfg.lambda_b > 0.0) {
      std::vector<Eigen::Index> rows;
      for (Eigen::Index i = 0; i < b; ++i)
        if (labels[static_cast<std::size_t>(i)] >= 0) rows.push_back(i);
      if (rows.size() >= 1) {
        const Eigen::Index l = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd features(2 * l, static_cast<Eigen::Index>(state.slice_width(h)));
        std::vector<int> sup_labels(static_cast<std::size_t>(2 * l));
        for (Eigen::Index r = 0; r < l; ++r) {
          features.row(r) = out.trace_a.slices[h].row(rows[static_cast<std::size_t>(r)]);
          features.row(l + r) = out.trace_b.slices[h].row(rows[static_cast<std::size_t>(r)]);
          sup_labels[static_cast<std::size_t>(r)] = sup_labels[static_cast<std::size_t>(l + r)] =
              labels[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
        }
        const SupConLoss sc = supcon_loss(features, sup_labels, cfg.tau_supcon);
        out.supcon[h] = sc.value;
        for (Eigen::Index r = 0; r < l; ++r) {
          up_a.slices[h].row(rows[static_cast<std::size_t>(r)]) += cfg.lambda_b * sc.grad.row(r);
          up_b.slices[h].row(rows[static_cast<std::size_t>(r)]) += cfg.lambda_b * sc.grad.row(l + r);
        }
      }
    }
    out.components.soft_rep[h] = (1.0 - cfg.lambda_b) * out.hscl[h] + cfg.lambda_b * out.supcon[h];
  }

  if (terms.cgc && cfg.cgc && levels >= 2 && !terms.only_level) {
    const std::size_t fine = levels - 1;
    auto apply = [&](const ForwardTrace& live, const ForwardTrace& ref, UpstreamGradients& up, double weight) {
      std::vector<Eigen::MatrixXd> coarse(live.logits.begin(), live.logits.begin() + static_cast<std::ptrdiff_t>(fine));
      const Eigen::MatrixXd& fine_logits = cfg.cgc_detach_target ? ref.logits[fine] : live.logits[fine];
      const CgcLoss cgc = cgc_loss(coarse, fine_logits, transitions, cfg);
      out.components.cgc += weight * cgc.value;
      for (std::size_t h = 0; h < fine; ++h) up.logits[h] += weight * cgc.grad_coarse[h];
      if (!cfg.cgc_detach_target) up.logits[fine] += weight * cgc.grad_fine;
    };
    if (cfg.cgc_both_views) {
      apply(out.trace_a, fa, up_a, 0.5);
      apply(out.trace_b, fb, up_b, 0.5);
    } else {
      apply(out.trace_a, fa, up_a, 1.0);
    }
  }

  out.total = total_loss(out.components);
  if (with_gradients) {
    out.grads = backward(state, out.trace_a, up_a);
    out.grads += backward(state, out.trace_b, up_b);
  }
  return out;
}

SgdOptimizer::SgdOptimizer(const ModelState& state, double momentum, double weight_decay)
    : velocity_(ModelGradients::zeros_like(state)), momentum_(momentum), weight_decay_(weight_decay) {}

void SgdOptimizer::step(ModelState& state, ModelGradients grads, double lr) {
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    grads.layers[l].weight += weight_decay_ * state.layers[l].weight;
    grads.layers[l].bias += weight_decay_ * state.layers[l].bias;
  }
  project_prototype_gradients(state, grads);
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    velocity_.layers[l].weight = momentum_ * velocity_.layers[l].weight + grads.layers[l].weight;
    velocity_.layers[l].bias = momentum_ * velocity_.layers[l].bias + grads.layers[l].bias;
  }
  for (std::size_t h = 0; h < state.prototypes.size(); ++h)
    velocity_.prototypes[h] = momentum_ * velocity_.prototypes[h] + grads.prototypes[h];
  if (lr == 0.0) return;
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    state.layers[l].weight -= lr * velocity_.layers[l].weight;
    state.layers[l].bias -= lr * velocity_.layers[l].bias;
  }
  for (std::size_t h = 0; h < state.prototypes.size(); ++h) state.prototypes[h] -= lr * velocity_.prototypes[h];
  renormalize_prototypes(state);
}

std::vector<Eigen::MatrixXd> posteriors(const ModelState& state, const Eigen::MatrixXd& x, double temperature,
                                        std::size_t threads) {
  std::vector<Eigen::MatrixXd> out(state.levels());
  for (std::size_t h = 0; h < state.levels(); ++h) out[h].resize(x.rows(), state.prototypes[h].rows());
  if (x.rows() == 0) return out;
  parallel_rows(x.rows(), threads, [&](Eigen::Index begin, Eigen::Index end, std::size_t) {
    const ForwardTrace trace = forward(state, x.middleRows(begin, end - begin));
    for (std::size_t h = 0; h < state.levels(); ++h)
      out[h].middleRows(begin, end - begin) = softmax_rows(trace.logits[h], temperature);
  });
  return out;
}

std::vector<std::vector<int>> predict(const ModelState& state, const Eigen::MatrixXd& x, std::size_t threads) {
  std::vector<std::vector<int>> out(state.levels(), std::vector<int>(static_cast<std::size_t>(x.rows())));
  if (x.rows() == 0) return out;
  parallel_rows(x.rows(), threads, [&](Eigen::Index begin, Eigen::Index end, std::size_t) {
    const ForwardTrace trace = forward(state, x.middleRows(begin, end - begin));
    for (std::size_t h = 0; h < state.levels(); ++h)
      for (Eigen::Index r = 0; r < end - begin; ++r)
        out[h][static_cast<std::size_t>(begin + r)] = static_cast<int>(row_argmax(trace.scores[h], r));
  });
  return out;
}

EvalReport evaluate_model(const ModelState& state, std::span<const Sample> samples,
                          std::span<const std::size_t> indices, const HierarchySpec& spec,
                          std::span<const std::size_t> old_classes, std::size_t threads) {
  const Eigen::MatrixXd x = feature_matrix(samples, indices);
  const auto pred = predict(state, x, threads);
  std::vector<std::vector<int>> truth(spec.levels(), std::vector<int>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int fine = samples[indices[i]].fine_label();
    for (std::size_t h = 0; h < spec.levels(); ++h)
      truth[h][i] = fine < 0 ? -1 : static_cast<int>(fine_to_level(spec, static_cast<std::size_t>(fine), h));
  }
  return evaluate(truth, pred, spec, old_classes);
}

nlohmann::json to_json(const EpochRecord& r) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["lr"] = r.lr;
  j["lambda_c"] = r.lambda_c;
  j["loss"] = {{"total", r.total}, {"cgc", r.cgc},       {"soft_rep", r.soft_rep},
               {"cls", r.cls},     {"hscl", r.hscl},     {"supcon", r.supcon}};
  j["val_acc"] = r.val_acc;
  j["unlabelled"] = to_json(r.unlabelled);
  return j;
}

TrainResult train(std::span<const Sample> samples, const GcdSplit& split, std::span<const std::size_t> validation,
                  const HierarchySpec& spec, const TrainConfig& train_cfg, const LossConfig& loss_cfg,
                  const EpochCallback& on_epoch) {
  const auto started = std::chrono::steady_clock::now();
  train_cfg.validate();
  loss_cfg.validate();
  spec.validate();
  if (samples.empty()) throw InputError("training set is empty");
  const std::size_t levels = spec.levels();
  const std::size_t dim = samples.front().features.size();
  for (const auto& s : samples) {
    if (s.features.size() != dim) throw InputError("sample " + s.id + " has a different feature dimension");
    if (s.labels.empty() || s.fine_label() >= static_cast<int>(spec.fine_count()))
      throw InputError("sample " + s.id + " has a fine label outside the hierarchy");
  }
  for (std::size_t i : split.labelled)
    if (i >= samples.size() || samples[i].fine_label() < 0) throw InputError("labelled index without a fine label");
  for (std::size_t i : split.unlabelled)
    if (i >= samples.size()) throw InputError("unlabelled index out of range");

  ModelConfig model_cfg = train_cfg.model;
  model_cfg.input_dim = dim;
  TrainResult result;
  result.state = init_model(model_cfg, spec.counts, loss_cfg.tau, loss_cfg.tau_sharp, train_cfg.seed);
  result.transitions = init_transitions(spec, split.old_classes);
  ModelState& state = result.state;
  auto& transitions = result.transitions;

  // Level-h training labels for labelled samples, -1 elsewhere.
  std::vector<std::vector<int>> level_labels(levels, std::vector<int>(samples.size(), -1));
  for (std::size_t i : split.labelled)
    for (std::size_t h = 0; h < levels; ++h)
      level_labels[h][i] = static_cast<int>(fine_to_level(spec, static_cast<std::size_t>(samples[i].fine_label()), h));

  const Eigen::MatrixXd features = feature_matrix(samples, {});
  const Eigen::MatrixXd x_unlabelled = take_rows(features, split.unlabelled);
  const Eigen::MatrixXd x_validation = take_rows(features, validation);

  BatchSampler sampler(split.labelled, split.unlabelled, train_cfg.batch_size, derive_seed(train_cfg.seed, 1));
  std::mt19937_64 view_rng(derive_seed(train_cfg.seed, 2));
  SgdOptimizer optimizer(state, train_cfg.momentum, train_cfg.weight_decay);

  const std::size_t steps = sampler.steps_per_epoch();
  const std::size_t total_steps = steps * train_cfg.epochs;
  const std::size_t horizon = std::max<std::size_t>(total_steps - 1, 1);
  const std::size_t lc_horizon = loss_cfg.lambda_c_horizon > 0 ? loss_cfg.lambda_c_horizon : horizon;

  for (std::size_t epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.soft_rep.assign(levels, 0.0);
    rec.cls.assign(levels, 0.0);
    rec.hscl.assign(levels, 0.0);
    rec.supcon.assign(levels, 0.0);
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t t = epoch * steps + s;
      const double lr = train_cfg.cosine ? cosine_lr(t, horizon, train_cfg.lr_initial, train_cfg.lr_final)
                                         : train_cfg.lr_initial;
      const double lambda_c = curriculum_lambda(t, lc_horizon, loss_cfg.lambda_c_start, loss_cfg.lambda_c_end);
      const std::vector<std::size_t> idx = sampler.next();
      const Eigen::MatrixXd x = take_rows(features, idx);
      ViewPair views = make_views(x, train_cfg.view_noise, view_rng);
      BatchInput batch{std::move(views.a), std::move(views.b), std::vector<std::vector<int>>(levels)};
      for (std::size_t h = 0; h < levels; ++h)
        for (std::size_t i : idx) batch.labels[h].push_back(level_labels[h][i]);

      ObjectiveResult obj;
      try {
        obj = evaluate_objective(state, batch, transitions, loss_cfg, lambda_c);
        optimizer.step(state, std::move(obj.grads), lr);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) + " step " +
                           std::to_string(s + 1) + ": " + e.what());
      }

      if (train_cfg.transition_update == TransitionCadence::Batch && levels >= 2) {
        std::vector<Eigen::Index> rows;
        for (std::size_t r = 0; r < idx.size(); ++r)
          if (level_labels.back()[idx[r]] < 0) rows.push_back(static_cast<Eigen::Index>(r));
        if (!rows.empty()) {
          Eigen::MatrixXd fine(static_cast<Eigen::Index>(rows.size()), state.prototypes.back().rows());
          for (std::size_t r = 0; r < rows.size(); ++r)
            fine.row(static_cast<Eigen::Index>(r)) = obj.trace_a.logits.back().row(rows[r]);
          fine = softmax_rows(fine, loss_cfg.tau_c);
          for (std::size_t h = 0; h + 1 < levels; ++h) {
            Eigen::MatrixXd coarse(static_cast<Eigen::Index>(rows.size()), state.prototypes[h].rows());
            for (std::size_t r = 0; r < rows.size(); ++r)
              coarse.row(static_cast<Eigen::Index>(r)) = obj.trace_a.logits[h].row(rows[r]);
            transitions[h] = update_transition(transitions[h], softmax_rows(coarse, loss_cfg.tau_c), fine,
                                               loss_cfg.transition_momentum);
          }
        }
      }

      rec.lr = lr;
      rec.lambda_c = lambda_c;
      rec.total += obj.total / static_cast<double>(steps);
      rec.cgc += obj.components.cgc / static_cast<double>(steps);
      for (std::size_t h = 0; h < levels; ++h) {
        rec.soft_rep[h] += obj.components.soft_rep[h] / static_cast<double>(steps);
        rec.cls[h] += obj.components.cls[h] / static_cast<double>(steps);
        rec.hscl[h] += obj.hscl[h] / static_cast<double>(steps);
        rec.supcon[h] += obj.supcon[h] / static_cast<double>(steps);
      }
    }

    if (train_cfg.transition_update == TransitionCadence::Epoch && levels >= 2 && x_unlabelled.rows() > 0) {
      const auto probs = posteriors(state, x_unlabelled, loss_cfg.tau_c, train_cfg.threads);
      for (std::size_t h = 0; h + 1 < levels; ++h)
        transitions[h] = update_transition(transitions[h], probs[h], probs.back(), loss_cfg.transition_momentum);
    }

    if (x_validation.rows() > 0) {
      const auto pred = predict(state, x_validation, train_cfg.threads);
      for (std::size_t h = 0; h < levels; ++h) {
        std::vector<int> truth;
        for (std::size_t i : validation)
          truth.push_back(static_cast<int>(fine_to_level(spec, static_cast<std::size_t>(samples[i].fine_label()), h)));
        rec.val_acc.push_back(hungarian_acc(truth, pred[h], spec.counts[h]).acc);
      }
    }
    if (!split.unlabelled.empty())
      rec.unlabelled = evaluate_model(state, samples, split.unlabelled, spec, split.old_classes, train_cfg.threads);
    if (on_epoch) on_epoch(rec);
    result.record.epochs.push_back(std::move(rec));
  }

  result.record.final_report = result.record.epochs.back().unlabelled;
  result.record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace seal
