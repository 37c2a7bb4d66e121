// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include "seal/eval.hpp"

#include <algorithm>
#include <limits>

#include "seal/errors.hpp"

namespace seal {

std::vector<std::size_t> max_weight_assignment(const std::vector<std::vector<std::int64_t>>& weight) {
  const std::size_t n = weight.size();
  for (const auto& row : weight)
    if (row.size() != n) throw InputError("assignment matrix must be square");
  if (n == 0) return {};
  std::int64_t top = std::numeric_limits<std::int64_t>::min();
  for (const auto& row : weight)
    for (auto w : row) top = std::max(top, w);

  // Shortest augmenting path on cost = top - weight; 1-based potentials.
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<std::int64_t> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      std::int64_t delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = (top - weight[i0 - 1][j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

AccResult hungarian_acc(std::span<const int> y_true, std::span<const int> y_pred, std::size_t num_classes) {
  if (y_true.empty()) throw InputError("accuracy of an empty prediction set");
  if (y_true.size() != y_pred.size()) throw InputError("truth and prediction lengths differ");
  std::size_t dim = num_classes;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || static_cast<std::size_t>(y_true[i]) >= num_classes)
      throw InputError("true label " + std::to_string(y_true[i]) + " out of range");
    if (y_pred[i] < 0) throw InputError("negative predicted cluster id");
    dim = std::max(dim, static_cast<std::size_t>(y_pred[i]) + 1);
  }
  std::vector<std::vector<std::int64_t>> counts(dim, std::vector<std::int64_t>(dim, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i)
    ++counts[static_cast<std::size_t>(y_pred[i])][static_cast<std::size_t>(y_true[i])];
  const auto match = max_weight_assignment(counts);

  AccResult out;
  out.assignment.assign(dim, -1);
  for (std::size_t c = 0; c < dim; ++c) {
    if (match[c] < num_classes) out.assignment[c] = static_cast<int>(match[c]);
    out.matched += static_cast<std::size_t>(counts[c][match[c]]);
  }
  out.acc = static_cast<double>(out.matched) / static_cast<double>(y_true.size());
  return out;
}

SplitAcc split_acc(std::span<const int> y_true, std::span<const int> y_pred, std::span<const std::size_t> old_classes,
                   std::span<const int> assignment) {
  if (y_true.size() != y_pred.size()) throw InputError("truth and prediction lengths differ");
  std::size_t n_old = 0, n_new = 0, hit_old = 0, hit_new = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int c = y_pred[i];
    if (c < 0 || static_cast<std::size_t>(c) >= assignment.size())
      throw InputError("assignment is missing predicted cluster " + std::to_string(c));
    const bool old = std::find(old_classes.begin(), old_classes.end(), static_cast<std::size_t>(y_true[i])) !=
                     old_classes.end();
    const bool hit = assignment[static_cast<std::size_t>(c)] == y_true[i];
    if (old) {
      ++n_old;
      hit_old += hit;
    } else {
      ++n_new;
      hit_new += hit;
    }
  }
  SplitAcc out;
  if (n_old) out.old_acc = static_cast<double>(hit_old) / static_cast<double>(n_old);
  if (n_new) out.new_acc = static_cast<double>(hit_new) / static_cast<double>(n_new);
  return out;
}

SplitAcc split_acc_separate(std::span<const int> y_true, std::span<const int> y_pred,
                            std::span<const std::size_t> old_classes, std::size_t num_classes) {
  std::vector<int> t_old, p_old, t_new, p_new;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool old = std::find(old_classes.begin(), old_classes.end(), static_cast<std::size_t>(y_true[i])) !=
                     old_classes.end();
    (old ? t_old : t_new).push_back(y_true[i]);
    (old ? p_old : p_new).push_back(y_pred[i]);
  }
  SplitAcc out;
  if (!t_old.empty()) out.old_acc = hungarian_acc(t_old, p_old, num_classes).acc;
  if (!t_new.empty()) out.new_acc = hungarian_acc(t_new, p_new, num_classes).acc;
  return out;
}

std::vector<double> consistency_rate(std::span<const int> pred_fine, std::span<const std::vector<int>> pred_coarse,
                                     const HierarchySpec& spec, std::span<const int> fine_assignment) {
  std::vector<double> rates;
  if (spec.levels() < 2 || pred_fine.empty()) return rates;
  if (pred_coarse.size() != spec.fine_level()) throw InputError("one coarse prediction vector per coarse level");
  for (std::size_t h = 0; h < spec.fine_level(); ++h) {
    if (pred_coarse[h].size() != pred_fine.size()) throw InputError("coarse and fine predictions are not aligned");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < pred_fine.size(); ++i) {
      int fine = pred_fine[i];
      if (!fine_assignment.empty()) {
        if (fine < 0 || static_cast<std::size_t>(fine) >= fine_assignment.size())
          throw InputError("fine assignment is missing cluster " + std::to_string(fine));
        fine = fine_assignment[static_cast<std::size_t>(fine)];
      }
      if (fine < 0 || static_cast<std::size_t>(fine) >= spec.fine_count()) continue;
      agree += static_cast<int>(fine_to_level(spec, static_cast<std::size_t>(fine), h)) == pred_coarse[h][i];
    }
    rates.push_back(static_cast<double>(agree) / static_cast<double>(pred_fine.size()));
  }
  return rates;
}

EvalReport evaluate(std::span<const std::vector<int>> truth, std::span<const std::vector<int>> pred,
                    const HierarchySpec& spec, std::span<const std::size_t> old_classes, bool separate_assignment) {
  const std::size_t levels = spec.levels();
  if (truth.size() != levels || pred.size() != levels) throw InputError("evaluation needs one label vector per level");
  const std::size_t n = truth.back().size();
  for (std::size_t h = 0; h < levels; ++h)
    if (truth[h].size() != n || pred[h].size() != n) throw InputError("evaluation vectors are not aligned");

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (truth.back()[i] >= 0) keep.push_back(i);
  if (keep.empty()) throw InputError("no samples with known fine labels to evaluate");

  auto gather = [&](const std::vector<int>& v) {
    std::vector<int> out;
    out.reserve(keep.size());
    for (std::size_t i : keep) out.push_back(v[i]);
    return out;
  };
  std::vector<std::vector<int>> t(levels), p(levels);
  for (std::size_t h = 0; h < levels; ++h) {
    t[h] = gather(truth[h]);
    p[h] = gather(pred[h]);
  }

  EvalReport report;
  report.samples = keep.size();
  const AccResult fine = hungarian_acc(t.back(), p.back(), spec.fine_count());
  report.acc_all = fine.acc;
  report.assignment = fine.assignment;
  const SplitAcc split = separate_assignment ? split_acc_separate(t.back(), p.back(), old_classes, spec.fine_count())
                                             : split_acc(t.back(), p.back(), old_classes, fine.assignment);
  report.acc_old = split.old_acc;
  report.acc_new = split.new_acc;
  std::vector<bool> is_old(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i)
    is_old[i] = std::find(old_classes.begin(), old_classes.end(), static_cast<std::size_t>(t.back()[i])) !=
                old_classes.end();
  for (std::size_t h = 0; h < levels; ++h) {
    const AccResult level = hungarian_acc(t[h], p[h], spec.counts[h]);
    std::size_t n_old = 0, n_new = 0, hit_old = 0, hit_new = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      const bool hit = level.assignment[static_cast<std::size_t>(p[h][i])] == t[h][i];
      if (is_old[i]) {
        ++n_old;
        hit_old += hit;
      } else {
        ++n_new;
        hit_new += hit;
      }
    }
    LevelAcc acc{level.acc, {}, {}};
    if (n_old) acc.old_acc = static_cast<double>(hit_old) / static_cast<double>(n_old);
    if (n_new) acc.new_acc = static_cast<double>(hit_new) / static_cast<double>(n_new);
    report.levels.push_back(acc);
  }
  std::vector<std::vector<int>> coarse(p.begin(), p.end() - 1);
  report.consistency = consistency_rate(p.back(), coarse, spec, fine.assignment);
  return report;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["acc_all"] = r.acc_all;
  j["acc_old"] = optional_json(r.acc_old);
  j["acc_new"] = optional_json(r.acc_new);
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : r.levels) levels.push_back({{"all", l.all}, {"old", optional_json(l.old_acc)}, {"new", optional_json(l.new_acc)}});
  j["levels"] = levels;
  j["consistency"] = r.consistency;
  j["assignment"] = r.assignment;
  j["samples"] = r.samples;
  return j;
}

}  // namespace seal
