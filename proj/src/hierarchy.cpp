// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include "seal/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "seal/errors.hpp"

namespace seal {

void HierarchySpec::validate() const {
  if (counts.empty()) throw InputError("hierarchy has no levels");
  for (std::size_t h = 0; h < counts.size(); ++h) {
    if (counts[h] == 0) throw InputError("hierarchy level " + std::to_string(h + 1) + " has zero classes");
    if (h > 0 && counts[h] < counts[h - 1])
      throw InputError("hierarchy counts must be non-decreasing from coarse to fine");
  }
  if (parents.size() + 1 != counts.size())
    throw InputError("hierarchy needs " + std::to_string(counts.size() - 1) + " parent maps, got " +
                     std::to_string(parents.size()));
  for (std::size_t h = 0; h < parents.size(); ++h) {
    const auto& map = parents[h];
    if (map.size() != counts[h + 1])
      throw InputError("parent map into level " + std::to_string(h + 1) + " has " + std::to_string(map.size()) +
                       " entries, expected " + std::to_string(counts[h + 1]));
    std::vector<bool> seen(counts[h], false);
    for (std::size_t c = 0; c < map.size(); ++c) {
      if (map[c] >= counts[h])
        throw InputError("parent of class " + std::to_string(c) + " at level " + std::to_string(h + 2) +
                         " is out of range");
      seen[map[c]] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
      throw InputError("level " + std::to_string(h + 1) + " has a class without children");
  }
}

std::size_t fine_to_level(const HierarchySpec& spec, std::size_t fine_label, std::size_t level) {
  if (level >= spec.levels()) throw InputError("level " + std::to_string(level) + " out of range");
  if (fine_label >= spec.fine_count()) throw InputError("fine label " + std::to_string(fine_label) + " out of range");
  std::size_t c = fine_label;
  for (std::size_t h = spec.fine_level(); h > level; --h) c = spec.parents[h - 1][c];
  return c;
}

std::vector<std::size_t> level_map(const HierarchySpec& spec, std::size_t level) {
  std::vector<std::size_t> out(spec.fine_count());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = fine_to_level(spec, k, level);
  return out;
}

HierarchySpec flatten(const HierarchySpec& spec) { return HierarchySpec{{spec.fine_count()}, {}}; }

HierarchySpec random_hierarchy(const HierarchySpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  HierarchySpec out{spec.counts, {}};
  for (std::size_t h = 0; h + 1 < spec.levels(); ++h) {
    const std::size_t n_parent = spec.counts[h];
    const std::size_t n_child = spec.counts[h + 1];
    // The first n_parent shuffled children cover every parent once; the
    // rest draw parents uniformly.
    std::vector<std::size_t> map(n_child);
    std::vector<std::size_t> order(n_child);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<std::size_t> pick(0, n_parent - 1);
    for (std::size_t i = 0; i < n_child; ++i) map[order[i]] = i < n_parent ? i : pick(rng);
    out.parents.push_back(std::move(map));
  }
  out.validate();
  return out;
}

HierarchyDocument hierarchy_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw FormatError("hierarchy document must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (key != "counts" && key != "parents" && key != "known" && key != "names")
      throw FormatError("unknown hierarchy key '" + key + "'");
  HierarchyDocument out;
  try {
    out.spec.counts = doc.at("counts").get<std::vector<std::size_t>>();
    out.spec.parents = doc.value("parents", std::vector<std::vector<std::size_t>>{});
    out.known = doc.value("known", std::vector<std::size_t>{});
    out.names = doc.value("names", std::vector<std::vector<std::string>>{});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("hierarchy document: ") + e.what());
  }
  try {
    out.spec.validate();
  } catch (const InputError& e) {
    throw FormatError(std::string("hierarchy document: ") + e.what());
  }
  for (std::size_t k : out.known)
    if (k >= out.spec.fine_count()) throw FormatError("known class " + std::to_string(k) + " out of range");
  return out;
}

nlohmann::json hierarchy_to_json(const HierarchyDocument& doc) {
  nlohmann::json j;
  j["counts"] = doc.spec.counts;
  j["parents"] = doc.spec.parents;
  if (!doc.known.empty()) j["known"] = doc.known;
  if (!doc.names.empty()) j["names"] = doc.names;
  return j;
}

HierarchyDocument load_hierarchy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open hierarchy file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return hierarchy_from_json(doc);
}

void save_hierarchy(const HierarchyDocument& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << hierarchy_to_json(doc).dump(2) << '\n';
}

std::size_t row_argmax(const Eigen::MatrixXd& m, Eigen::Index r) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c)
    if (m(r, c) > m(r, best)) best = c;
  return static_cast<std::size_t>(best);
}

TransitionMatrix init_transition(const HierarchySpec& spec, std::span<const std::size_t> known_classes,
                                 std::size_t level) {
  if (level >= spec.fine_level()) throw InputError("no transition matrix for the fine level");
  const auto n_fine = static_cast<Eigen::Index>(spec.fine_count());
  const auto n_level = static_cast<Eigen::Index>(spec.counts[level]);
  TransitionMatrix m;
  m.level = level;
  m.entries = Eigen::MatrixXd::Constant(n_fine, n_level, 1.0 / static_cast<double>(n_level));
  m.fixed.assign(spec.fine_count(), false);
  for (std::size_t k : known_classes) {
    if (k >= spec.fine_count()) throw InputError("known class " + std::to_string(k) + " out of range");
    const auto r = static_cast<Eigen::Index>(k);
    m.entries.row(r).setZero();
    m.entries(r, static_cast<Eigen::Index>(fine_to_level(spec, k, level))) = 1.0;
    m.fixed[k] = true;
  }
  return m;
}

std::vector<TransitionMatrix> init_transitions(const HierarchySpec& spec, std::span<const std::size_t> known_classes) {
  std::vector<TransitionMatrix> out;
  for (std::size_t h = 0; h < spec.fine_level(); ++h) out.push_back(init_transition(spec, known_classes, h));
  return out;
}

TransitionMatrix update_transition(const TransitionMatrix& m, const Eigen::MatrixXd& coarse_probs,
                                   const Eigen::MatrixXd& fine_probs, double momentum) {
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw InputError("transition momentum must lie in [0,1]");
  if (coarse_probs.rows() != fine_probs.rows()) throw InputError("coarse and fine posteriors cover different samples");
  if (fine_probs.cols() != m.entries.rows() || coarse_probs.cols() != m.entries.cols())
    throw InputError("posterior widths do not match the transition matrix");

  const Eigen::Index n_fine = m.entries.rows();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_fine, m.entries.cols());
  std::vector<std::size_t> hits(static_cast<std::size_t>(n_fine), 0);
  for (Eigen::Index i = 0; i < fine_probs.rows(); ++i) {
    const std::size_t k = row_argmax(fine_probs, i);
    if (m.fixed[k]) continue;
    sums.row(static_cast<Eigen::Index>(k)) += coarse_probs.row(i);
    ++hits[k];
  }

  TransitionMatrix out = m;
  for (Eigen::Index k = 0; k < n_fine; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    if (m.fixed[ku] || hits[ku] == 0) continue;
    Eigen::RowVectorXd row =
        momentum * m.entries.row(k) + (1.0 - momentum) * (sums.row(k) / static_cast<double>(hits[ku]));
    row = row.cwiseMax(0.0);
    const double total = row.sum();
    if (!(total > 0.0) || !std::isfinite(total))
      throw NumericError("transition row " + std::to_string(k) + " lost all mass");
    out.entries.row(k) = row / total;
  }
  return out;
}

}  // namespace seal
