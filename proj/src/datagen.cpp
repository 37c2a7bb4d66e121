// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include "seal/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "seal/errors.hpp"

namespace seal {
namespace {

std::vector<double> random_direction(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = normal(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

std::vector<double> jitter(const std::vector<double>& centre, double scale, std::mt19937_64& rng) {
  std::vector<double> out = centre;
  if (scale == 0.0) return out;
  std::normal_distribution<double> normal(0.0, scale / std::sqrt(static_cast<double>(centre.size())));
  for (double& x : out) x += normal(rng);
  return out;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().remove_suffix(1);
  return out;
}

template <typename T>
T parse_field(std::string_view field, std::size_t row, const std::string& column) {
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw FormatError("row " + std::to_string(row) + ": cannot parse column " + column + " value '" +
                      std::string(field) + "'");
  return value;
}

void append_double(std::string& out, double v, FloatPrecision precision) {
  char buf[64];
  auto res = precision == FloatPrecision::Double ? std::to_chars(buf, buf + sizeof buf, v)
                                                 : std::to_chars(buf, buf + sizeof buf, static_cast<float>(v));
  out.append(buf, res.ptr);
}

}  // namespace

std::vector<Sample> generate_synthetic(const HierarchySpec& spec, const SyntheticOptions& options) {
  spec.validate();
  const std::size_t levels = spec.levels();
  if (options.per_class == 0) throw InputError("per_class must be positive");
  if (options.dim < levels) throw InputError("feature dimension must be at least the number of levels");
  if (options.spreads.size() != levels && options.spreads.size() != levels + 1)
    throw InputError("expected " + std::to_string(levels) + " or " + std::to_string(levels + 1) + " spreads");
  for (std::size_t h = 0; h < levels; ++h) {
    if (!(options.spreads[h] > 0.0)) throw InputError("level spreads must be positive");
    if (h > 0 && options.spreads[h] > options.spreads[h - 1])
      throw InputError("level spreads must decrease from coarse to fine");
  }
  const double noise = options.spreads.back();
  if (!(noise >= 0.0)) throw InputError("sample noise must be non-negative");
  if (!(options.imbalance_ratio >= 1.0)) throw InputError("imbalance ratio must be >= 1");

  std::mt19937_64 rng(options.seed);
  std::vector<std::vector<double>> centres;
  for (std::size_t c = 0; c < spec.counts[0]; ++c) {
    auto dir = random_direction(options.dim, rng);
    for (double& x : dir) x *= options.spreads[0];
    centres.push_back(std::move(dir));
  }
  for (std::size_t h = 1; h < levels; ++h) {
    std::vector<std::vector<double>> children;
    for (std::size_t c = 0; c < spec.counts[h]; ++c)
      children.push_back(jitter(centres[spec.parents[h - 1][c]], options.spreads[h], rng));
    centres = std::move(children);
  }

  const std::size_t n_fine = spec.fine_count();
  std::vector<std::vector<int>> label_rows(n_fine);
  for (std::size_t k = 0; k < n_fine; ++k)
    for (std::size_t h = 0; h < levels; ++h) label_rows[k].push_back(static_cast<int>(fine_to_level(spec, k, h)));

  std::vector<Sample> out;
  for (std::size_t k = 0; k < n_fine; ++k) {
    std::size_t n = options.per_class;
    if (options.imbalance_ratio > 1.0 && n_fine > 1) {
      const double t = static_cast<double>(k) / static_cast<double>(n_fine - 1);
      n = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(static_cast<double>(n) * std::pow(options.imbalance_ratio, -t))));
    }
    for (std::size_t i = 0; i < n; ++i) {
      Sample s;
      s.id = "s" + std::to_string(out.size());
      s.features = jitter(centres[k], noise, rng);
      s.labels = label_rows[k];
      out.push_back(std::move(s));
    }
  }
  return out;
}

bool GcdSplit::is_old(std::size_t fine_class) const {
  return std::binary_search(old_classes.begin(), old_classes.end(), fine_class);
}

GcdSplit make_gcd_split(std::span<const Sample> samples, const HierarchySpec& spec, double old_fraction,
                        double labelled_fraction, std::uint64_t seed) {
  if (!(old_fraction > 0.0 && old_fraction <= 1.0)) throw InputError("old_fraction must lie in (0,1]");
  const std::size_t k = spec.fine_count();
  const auto n_old = static_cast<std::size_t>(std::floor(old_fraction * static_cast<double>(k) + 1e-9));
  if (n_old < 1) throw InputError("old_fraction selects no known classes");
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(n_old);
  return make_gcd_split(samples, spec, order, labelled_fraction, seed + 1);
}

GcdSplit make_gcd_split(std::span<const Sample> samples, const HierarchySpec& spec,
                        std::span<const std::size_t> old_classes, double labelled_fraction, std::uint64_t seed) {
  if (!(labelled_fraction > 0.0 && labelled_fraction <= 1.0)) throw InputError("labelled_fraction must lie in (0,1]");
  GcdSplit split;
  split.old_classes.assign(old_classes.begin(), old_classes.end());
  std::sort(split.old_classes.begin(), split.old_classes.end());
  split.old_classes.erase(std::unique(split.old_classes.begin(), split.old_classes.end()), split.old_classes.end());
  for (std::size_t c : split.old_classes)
    if (c >= spec.fine_count()) throw InputError("old class " + std::to_string(c) + " out of range");
  if (split.old_classes.empty()) throw InputError("no known classes");
  split.all_classes.resize(spec.fine_count());
  std::iota(split.all_classes.begin(), split.all_classes.end(), 0);

  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int y = samples[i].fine_label();
    if (y >= 0 && split.is_old(static_cast<std::size_t>(y)))
      by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  std::vector<bool> labelled(samples.size(), false);
  std::mt19937_64 rng(seed);
  for (auto& [cls, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::floor(labelled_fraction * static_cast<double>(members.size()) + 1e-9));
    for (std::size_t j = 0; j < take; ++j) labelled[members[j]] = true;
  }
  for (std::size_t i = 0; i < samples.size(); ++i) (labelled[i] ? split.labelled : split.unlabelled).push_back(i);
  return split;
}

std::vector<std::size_t> reserve_validation(GcdSplit& split, std::span<const Sample> samples, double fraction,
                                            std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InputError("validation fraction must lie in [0,1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i : split.labelled) by_class[samples[i].fine_label()].push_back(i);
  std::vector<bool> held(samples.size(), false);
  std::mt19937_64 rng(seed);
  for (auto& [cls, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto take =
        static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size()) + 1e-9));
    for (std::size_t j = 0; j < take; ++j) held[members[j]] = true;
  }
  std::vector<std::size_t> validation, keep;
  for (std::size_t i : split.labelled) (held[i] ? validation : keep).push_back(i);
  split.labelled = std::move(keep);
  return validation;
}

void validate_samples(std::span<const Sample> samples, const HierarchySpec& spec) {
  const std::size_t levels = spec.levels();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.labels.size() != levels)
      throw FormatError("sample " + std::to_string(i) + " has " + std::to_string(s.labels.size()) + " labels");
    for (std::size_t h = 0; h < levels; ++h) {
      const int y = s.labels[h];
      if (y < -1 || y >= static_cast<int>(spec.counts[h]))
        throw FormatError("sample " + std::to_string(i) + ": level_" + std::to_string(h + 1) + " label " +
                          std::to_string(y) + " outside hierarchy");
    }
    for (std::size_t h = 0; h + 1 < levels; ++h) {
      const int child = s.labels[h + 1];
      const int parent = s.labels[h];
      if (child >= 0 && parent >= 0 && static_cast<int>(spec.parents[h][static_cast<std::size_t>(child)]) != parent)
        throw FormatError("sample " + std::to_string(i) + ": level_" + std::to_string(h + 2) + " label " +
                          std::to_string(child) + " is not a child of level_" + std::to_string(h + 1) + " label " +
                          std::to_string(parent));
    }
    for (double x : s.features)
      if (!std::isfinite(x)) throw FormatError("sample " + std::to_string(i) + " has non-finite features");
  }
}

void relabel(std::vector<Sample>& samples, const HierarchySpec& spec) {
  for (auto& s : samples) {
    const int y = s.labels.empty() ? -1 : s.fine_label();
    s.labels.assign(spec.levels(), -1);
    s.labels.back() = y;
    if (y < 0) continue;
    for (std::size_t h = 0; h < spec.levels(); ++h)
      s.labels[h] = static_cast<int>(fine_to_level(spec, static_cast<std::size_t>(y), h));
  }
}

void save_embeddings(std::span<const Sample> samples, std::size_t levels, const std::filesystem::path& path,
                     FloatPrecision precision) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  std::string line = "id";
  for (std::size_t h = 0; h < levels; ++h) line += ",level_" + std::to_string(h + 1);
  const std::size_t dim = samples.empty() ? 0 : samples.front().features.size();
  for (std::size_t f = 0; f < dim; ++f) line += ",f_" + std::to_string(f);
  out << line << '\n';
  for (const auto& s : samples) {
    line = s.id;
    for (int y : s.labels) line += "," + std::to_string(y);
    for (double x : s.features) {
      line += ',';
      append_double(line, x, precision);
    }
    out << line << '\n';
  }
}

std::vector<Sample> read_samples_csv(const std::filesystem::path& path, const HierarchySpec& spec,
                                     bool require_features) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open features file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  const auto header = split_fields(line);
  const std::size_t levels = spec.levels();
  if (header.size() < levels + 1 || header[0] != "id")
    throw FormatError(path.string() + ": header must start with id and " + std::to_string(levels) + " level columns");
  for (std::size_t h = 0; h < levels; ++h)
    if (header[h + 1] != "level_" + std::to_string(h + 1))
      throw FormatError(path.string() + ": expected column level_" + std::to_string(h + 1) + ", found '" +
                        std::string(header[h + 1]) + "'");
  const std::size_t dim = header.size() - levels - 1;
  if (require_features && dim == 0) throw FormatError(path.string() + ": no feature columns");

  std::vector<Sample> samples;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw FormatError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(header.size()));
    Sample s;
    s.id = std::string(fields[0]);
    for (std::size_t h = 0; h < levels; ++h)
      s.labels.push_back(parse_field<int>(fields[h + 1], row, "level_" + std::to_string(h + 1)));
    for (std::size_t f = 0; f < dim; ++f)
      s.features.push_back(parse_field<double>(fields[levels + 1 + f], row, std::string(header[levels + 1 + f])));
    try {
      validate_samples(std::span<const Sample>(&s, 1), spec);
    } catch (const FormatError& e) {
      std::string what = e.what();
      what.replace(0, what.find(':'), "row " + std::to_string(row));
      throw FormatError(path.string() + ": " + what);
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

LoadedDataset load_embeddings(const std::filesystem::path& features_path, const std::filesystem::path& hierarchy_path) {
  LoadedDataset out;
  out.hierarchy = load_hierarchy(hierarchy_path);
  out.samples = read_samples_csv(features_path, out.hierarchy.spec, true);
  relabel(out.samples, out.hierarchy.spec);
  return out;
}

Eigen::MatrixXd feature_matrix(std::span<const Sample> samples, std::span<const std::size_t> indices) {
  const std::size_t n = indices.empty() ? samples.size() : indices.size();
  const std::size_t dim = samples.empty() ? 0 : samples.front().features.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < n; ++r) {
    const auto& f = samples[indices.empty() ? r : indices[r]].features;
    if (f.size() != dim) throw InputError("samples have inconsistent feature dimensions");
    for (std::size_t c = 0; c < dim; ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = f[c];
  }
  return x;
}

}  // namespace seal
