// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include "seal/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "seal/errors.hpp"

namespace seal {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x); }

void require_finite(const Eigen::MatrixXd& m, const std::string& what) {
  if (!m.allFinite()) throw NumericError("non-finite activations in " + what);
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

// Rows of x projected off their unit direction u and scaled by 1/norm:
// the Jacobian-transpose of x -> x/|x| applied to an upstream gradient.
Eigen::MatrixXd normalize_backward(const Eigen::MatrixXd& grad, const Eigen::MatrixXd& unit, const Eigen::VectorXd& norm) {
  const Eigen::VectorXd radial = (grad.array() * unit.array()).rowwise().sum();
  Eigen::MatrixXd out = grad - (unit.array().colwise() * radial.array()).matrix();
  return out.array().colwise() / norm.array();
}

}  // namespace

std::vector<std::size_t> make_slice_bounds(std::size_t proj_dim, std::size_t levels) {
  if (levels == 0) throw InputError("model needs at least one level");
  if (proj_dim < levels) throw InputError("projection dimension smaller than the number of levels");
  const std::size_t width = proj_dim / levels;
  std::vector<std::size_t> bounds(levels + 1, 0);
  for (std::size_t h = 0; h < levels; ++h) bounds[h + 1] = bounds[h] + width;
  bounds[levels] = proj_dim;
  return bounds;
}

ModelState init_model(const ModelConfig& config, std::span<const std::size_t> level_counts, double tau,
                      double tau_sharp, std::uint64_t seed) {
  if (config.input_dim == 0) throw InputError("input dimension must be positive");
  if (!(tau > 0.0) || !(tau_sharp > 0.0)) throw InputError("temperatures must be positive");
  ModelState state;
  state.tau = tau;
  state.tau_sharp = tau_sharp;
  state.slice_bounds = make_slice_bounds(config.proj_dim, level_counts.size());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t fan_in = config.input_dim;
  auto make_layer = [&](std::size_t out, double gain) {
    Layer l;
    l.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in));
    const double scale = gain / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = scale * normal(rng);
    l.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
    fan_in = out;
    return l;
  };
  for (std::size_t width : config.hidden) {
    if (width == 0) throw InputError("hidden widths must be positive");
    state.layers.push_back(make_layer(width, std::sqrt(2.0)));
  }
  state.layers.push_back(make_layer(config.proj_dim, 1.0));

  for (std::size_t n : level_counts) {
    if (n == 0) throw InputError("every level needs at least one class");
    Eigen::MatrixXd c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(config.proj_dim));
    for (Eigen::Index r = 0; r < c.rows(); ++r)
      for (Eigen::Index k = 0; k < c.cols(); ++k) c(r, k) = normal(rng);
    state.prototypes.push_back(std::move(c));
  }
  renormalize_prototypes(state);
  return state;
}

Aggregated aggregate(std::span<const Eigen::MatrixXd> slices, std::size_t level) {
  if (slices.empty() || level >= slices.size()) throw InputError("aggregate level out of range");
  Eigen::Index width = 0;
  for (const auto& s : slices) width += s.cols();
  Aggregated out;
  out.value.resize(slices.front().rows(), width);
  Eigen::Index offset = 0;
  for (const auto& s : slices) {
    out.value.middleCols(offset, s.cols()) = s;
    offset += s.cols();
  }
  out.norm = out.value.rowwise().norm();
  if ((out.norm.array() <= 0.0).any()) throw NumericError("aggregated feature has zero norm");
  out.value = out.value.array().colwise() / out.norm.array();
  out.pass.resize(slices.size());
  for (std::size_t j = 0; j < slices.size(); ++j) out.pass[j] = j <= level;
  return out;
}

ForwardTrace forward(const ModelState& state, const Eigen::MatrixXd& x, const ForwardTrace* frozen) {
  if (x.rows() == 0) throw InputError("forward needs a non-empty batch");
  if (state.layers.empty() || x.cols() != state.layers.front().weight.cols())
    throw InputError("feature dimension " + std::to_string(x.cols()) + " does not match the encoder input");
  if (frozen && (frozen->slices.size() != state.levels() || frozen->input.rows() != x.rows()))
    throw InputError("frozen trace does not match this batch");

  ForwardTrace t;
  t.input = x;
  const Eigen::MatrixXd* a = &t.input;
  const std::size_t n_hidden = state.layers.size() - 1;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    const Layer& layer = state.layers[l];
    Eigen::MatrixXd pre = (*a) * layer.weight.transpose();
    pre.rowwise() += layer.bias.transpose();
    require_finite(pre, "hidden layer " + std::to_string(l + 1));
    t.act.push_back(pre.unaryExpr([](double v) { return gelu(v); }));
    t.pre.push_back(std::move(pre));
    a = &t.act.back();
  }
  const Layer& proj = state.layers.back();
  t.projection = (*a) * proj.weight.transpose();
  t.projection.rowwise() += proj.bias.transpose();
  require_finite(t.projection, "projection layer");

  const std::size_t levels = state.levels();
  for (std::size_t h = 0; h < levels; ++h) {
    const auto lo = static_cast<Eigen::Index>(state.slice_bounds[h]);
    const auto w = static_cast<Eigen::Index>(state.slice_width(h));
    Eigen::MatrixXd raw = t.projection.middleCols(lo, w);
    Eigen::VectorXd norm = raw.rowwise().norm();
    if ((norm.array() <= 0.0).any()) throw NumericError("projection slice " + std::to_string(h + 1) + " has zero norm");
    t.slices.push_back(raw.array().colwise() / norm.array());
    t.slice_norms.push_back(std::move(norm));
  }

  for (std::size_t h = 0; h < levels; ++h) {
    Aggregated agg;
    if (frozen) {
      std::vector<Eigen::MatrixXd> mixed;
      for (std::size_t j = 0; j < levels; ++j) mixed.push_back(j <= h ? t.slices[j] : frozen->slices[j]);
      agg = aggregate(mixed, h);
    } else {
      agg = aggregate(t.slices, h);
    }
    Eigen::MatrixXd scores = agg.value * state.prototypes[h].transpose();
    Eigen::MatrixXd logits = scores / state.tau;
    require_finite(logits, "classifier head " + std::to_string(h + 1));
    t.probs.push_back(softmax_rows(logits));
    t.scores.push_back(std::move(scores));
    t.logits.push_back(std::move(logits));
    t.aggregated.push_back(std::move(agg.value));
    t.aggregated_norms.push_back(std::move(agg.norm));
  }
  return t;
}

UpstreamGradients UpstreamGradients::zeros_like(const ModelState& state) {
  UpstreamGradients u;
  u.logits.resize(state.levels());
  u.slices.resize(state.levels());
  return u;
}

ModelGradients ModelGradients::zeros_like(const ModelState& state) {
  ModelGradients g;
  for (const auto& l : state.layers)
    g.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  for (const auto& c : state.prototypes) g.prototypes.push_back(Eigen::MatrixXd::Zero(c.rows(), c.cols()));
  return g;
}

ModelGradients& ModelGradients::operator+=(const ModelGradients& other) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += other.layers[l].weight;
    layers[l].bias += other.layers[l].bias;
  }
  for (std::size_t h = 0; h < prototypes.size(); ++h) prototypes[h] += other.prototypes[h];
  return *this;
}

ModelGradients backward(const ModelState& state, const ForwardTrace& trace, const UpstreamGradients& upstream) {
  const std::size_t levels = state.levels();
  const std::size_t n_hidden = state.layers.size() - 1;
  if (trace.slices.size() != levels || trace.pre.size() != n_hidden ||
      trace.projection.cols() != static_cast<Eigen::Index>(state.proj_dim()))
    throw InputError("trace was not produced by this model");
  for (std::size_t l = 0; l < n_hidden; ++l)
    if (trace.pre[l].cols() != state.layers[l].weight.rows()) throw InputError("trace was not produced by this model");
  for (std::size_t h = 0; h < levels; ++h)
    if (trace.logits[h].cols() != state.prototypes[h].rows()) throw InputError("trace was not produced by this model");
  if (upstream.logits.size() != levels || upstream.slices.size() != levels)
    throw InputError("upstream gradients need one entry per level");

  const Eigen::Index batch = trace.input.rows();
  ModelGradients g = ModelGradients::zeros_like(state);

  std::vector<Eigen::MatrixXd> d_slice(levels);
  for (std::size_t j = 0; j < levels; ++j) {
    const auto w = static_cast<Eigen::Index>(state.slice_width(j));
    if (upstream.slices[j].size() == 0) {
      d_slice[j] = Eigen::MatrixXd::Zero(batch, w);
    } else {
      if (upstream.slices[j].rows() != batch || upstream.slices[j].cols() != w)
        throw InputError("slice gradient " + std::to_string(j + 1) + " has the wrong shape");
      d_slice[j] = upstream.slices[j];
    }
  }

  for (std::size_t h = 0; h < levels; ++h) {
    const Eigen::MatrixXd& dlogits = upstream.logits[h];
    if (dlogits.size() == 0) continue;
    if (dlogits.rows() != batch || dlogits.cols() != state.prototypes[h].rows())
      throw InputError("logit gradient " + std::to_string(h + 1) + " has the wrong shape");
    const Eigen::MatrixXd dscores = dlogits / state.tau;
    const Eigen::MatrixXd& zhat = trace.aggregated[h];
    g.prototypes[h] += dscores.transpose() * zhat;
    const Eigen::MatrixXd dzhat = dscores * state.prototypes[h];
    const Eigen::MatrixXd dcat = normalize_backward(dzhat, zhat, trace.aggregated_norms[h]);
    // Slices finer than h sit behind the gradient controller.
    for (std::size_t j = 0; j <= h; ++j)
      d_slice[j] += dcat.middleCols(static_cast<Eigen::Index>(state.slice_bounds[j]),
                                    static_cast<Eigen::Index>(state.slice_width(j)));
  }

  Eigen::MatrixXd dz(batch, static_cast<Eigen::Index>(state.proj_dim()));
  for (std::size_t j = 0; j < levels; ++j)
    dz.middleCols(static_cast<Eigen::Index>(state.slice_bounds[j]), static_cast<Eigen::Index>(state.slice_width(j))) =
        normalize_backward(d_slice[j], trace.slices[j], trace.slice_norms[j]);

  Eigen::MatrixXd dout = std::move(dz);
  for (std::size_t l = state.layers.size(); l-- > 0;) {
    const Eigen::MatrixXd& in = l == 0 ? trace.input : trace.act[l - 1];
    g.layers[l].weight = dout.transpose() * in;
    g.layers[l].bias = dout.colwise().sum().transpose();
    if (l == 0) break;
    Eigen::MatrixXd da = dout * state.layers[l].weight;
    dout = da.array() * trace.pre[l - 1].unaryExpr([](double v) { return gelu_grad(v); }).array();
  }
  return g;
}

void project_prototype_gradients(const ModelState& state, ModelGradients& grads) {
  for (std::size_t h = 0; h < state.levels(); ++h) {
    const Eigen::MatrixXd& c = state.prototypes[h];
    const Eigen::VectorXd radial = (grads.prototypes[h].array() * c.array()).rowwise().sum();
    grads.prototypes[h] -= (c.array().colwise() * radial.array()).matrix();
  }
}

void renormalize_prototypes(ModelState& state) {
  for (auto& c : state.prototypes) {
    const Eigen::VectorXd norm = c.rowwise().norm();
    if ((norm.array() <= 0.0).any() || !norm.allFinite()) throw NumericError("prototype collapsed to zero norm");
    c = c.array().colwise() / norm.array();
  }
}

double max_prototype_norm_error(const ModelState& state) {
  double worst = 0.0;
  for (const auto& c : state.prototypes)
    worst = std::max(worst, (c.rowwise().norm().array() - 1.0).abs().maxCoeff());
  return worst;
}

std::size_t parameter_count(const ModelState& state) {
  std::size_t n = 0;
  for (const auto& l : state.layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  for (const auto& c : state.prototypes) n += static_cast<std::size_t>(c.size());
  return n;
}

namespace {

template <typename LayersT, typename ProtosT, typename Fn>
void visit_blocks(LayersT& layers, ProtosT& protos, Fn&& fn) {
  for (auto& l : layers) {
    fn(l.weight.data(), l.weight.size());
    fn(l.bias.data(), l.bias.size());
  }
  for (auto& c : protos) fn(c.data(), c.size());
}

}  // namespace

Eigen::VectorXd flatten_parameters(const ModelState& state) {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count(state)));
  Eigen::Index offset = 0;
  visit_blocks(state.layers, state.prototypes, [&](const double* p, Eigen::Index n) {
    flat.segment(offset, n) = Eigen::Map<const Eigen::VectorXd>(p, n);
    offset += n;
  });
  return flat;
}

void assign_parameters(ModelState& state, const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count(state)))
    throw InputError("parameter vector has the wrong length");
  Eigen::Index offset = 0;
  visit_blocks(state.layers, state.prototypes, [&](double* p, Eigen::Index n) {
    Eigen::Map<Eigen::VectorXd>(p, n) = flat.segment(offset, n);
    offset += n;
  });
}

Eigen::VectorXd flatten_gradients(const ModelGradients& grads) {
  Eigen::Index total = 0;
  visit_blocks(grads.layers, grads.prototypes, [&](const double*, Eigen::Index n) { total += n; });
  Eigen::VectorXd flat(total);
  Eigen::Index offset = 0;
  visit_blocks(grads.layers, grads.prototypes, [&](const double* p, Eigen::Index n) {
    flat.segment(offset, n) = Eigen::Map<const Eigen::VectorXd>(p, n);
    offset += n;
  });
  return flat;
}

}  // namespace seal
