// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include "seal/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "seal/errors.hpp"

namespace seal {
namespace {

constexpr char kMagic[4] = {'S', 'E', 'A', 'L'};

template <typename T>
void put(std::ostream& out, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  out.write(reinterpret_cast<const char*>(bits.data()), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& what) {
  std::array<unsigned char, sizeof(T)> bits{};
  if (!in.read(reinterpret_cast<char*>(bits.data()), sizeof(T))) throw FormatError("checkpoint truncated in " + what);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

CheckpointEntry matrix_entry(std::string name, const Eigen::MatrixXd& m) {
  CheckpointEntry e{std::move(name), {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())}, {}};
  e.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) e.data.push_back(m(r, c));
  return e;
}

CheckpointEntry vector_entry(std::string name, std::vector<double> v) {
  return {std::move(name), {static_cast<std::uint64_t>(v.size())}, std::move(v)};
}

Eigen::MatrixXd to_matrix(const CheckpointEntry& e) {
  if (e.shape.size() != 2) throw FormatError("checkpoint entry " + e.name + " is not a matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(e.shape[0]), static_cast<Eigen::Index>(e.shape[1]));
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = e.data[i++];
  return m;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, std::span<const CheckpointEntry> entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, entries.size());
  for (const auto& e : entries) {
    std::uint64_t expected = 1;
    for (auto d : e.shape) expected *= d;
    if (expected != e.data.size()) throw InputError("checkpoint entry " + e.name + " shape does not match its data");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) put<std::uint64_t>(out, d);
    for (double v : e.data) put<double>(out, v);
  }
  if (!out) throw InputError("failed writing checkpoint " + path.string());
}

std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw FormatError(path.string() + " is not a SEAL checkpoint");
  const auto version = get<std::uint32_t>(in, "header");
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto count = get<std::uint64_t>(in, "header");
  std::vector<CheckpointEntry> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const auto len = get<std::uint32_t>(in, "entry name");
    if (len > 4096) throw FormatError("checkpoint entry name too long");
    e.name.resize(len);
    if (!in.read(e.name.data(), len)) throw FormatError("checkpoint truncated in entry name");
    const auto rank = get<std::uint32_t>(in, e.name);
    if (rank > 8) throw FormatError("checkpoint entry " + e.name + " has rank " + std::to_string(rank));
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      e.shape.push_back(get<std::uint64_t>(in, e.name));
      n *= e.shape.back();
    }
    if (n > (1ull << 32)) throw FormatError("checkpoint entry " + e.name + " is implausibly large");
    e.data.resize(n);
    for (auto& v : e.data) v = get<double>(in, e.name);
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_model(const std::filesystem::path& path, const ModelState& state,
                std::span<const TransitionMatrix> transitions, const nlohmann::json& metadata) {
  std::vector<CheckpointEntry> entries;
  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    entries.push_back(matrix_entry("layer." + std::to_string(l) + ".weight", state.layers[l].weight));
    const auto& b = state.layers[l].bias;
    entries.push_back(vector_entry("layer." + std::to_string(l) + ".bias", std::vector<double>(b.data(), b.data() + b.size())));
  }
  for (std::size_t h = 0; h < state.prototypes.size(); ++h)
    entries.push_back(matrix_entry("prototype." + std::to_string(h), state.prototypes[h]));
  entries.push_back(vector_entry("slice_bounds", std::vector<double>(state.slice_bounds.begin(), state.slice_bounds.end())));
  entries.push_back(vector_entry("temperatures", {state.tau, state.tau_sharp}));
  for (const auto& m : transitions) {
    const std::string base = "transition." + std::to_string(m.level);
    entries.push_back(matrix_entry(base, m.entries));
    std::vector<double> fixed;
    for (bool f : m.fixed) fixed.push_back(f ? 1.0 : 0.0);
    entries.push_back(vector_entry(base + ".fixed", std::move(fixed)));
  }
  write_checkpoint(path, entries);

  nlohmann::json sidecar = metadata;
  sidecar["format_version"] = kCheckpointVersion;
  sidecar["levels"] = state.levels();
  sidecar["proj_dim"] = state.proj_dim();
  sidecar["slice_bounds"] = state.slice_bounds;
  std::vector<std::size_t> widths;
  for (const auto& l : state.layers) widths.push_back(static_cast<std::size_t>(l.weight.rows()));
  sidecar["layer_widths"] = widths;
  sidecar["input_dim"] = state.layers.front().weight.cols();
  std::ofstream meta(path.string() + ".json");
  if (!meta) throw InputError("cannot write checkpoint metadata for " + path.string());
  meta << sidecar.dump(2) << '\n';
}

ModelBundle load_model(const std::filesystem::path& path) {
  std::map<std::string, CheckpointEntry> by_name;
  for (auto& e : read_checkpoint(path)) by_name.emplace(e.name, std::move(e));
  auto take = [&](const std::string& name) -> const CheckpointEntry& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint is missing entry " + name);
    return it->second;
  };

  ModelBundle out;
  for (std::size_t l = 0; by_name.count("layer." + std::to_string(l) + ".weight"); ++l) {
    Layer layer;
    layer.weight = to_matrix(take("layer." + std::to_string(l) + ".weight"));
    const auto& b = take("layer." + std::to_string(l) + ".bias");
    layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data.data(), static_cast<Eigen::Index>(b.data.size()));
    out.state.layers.push_back(std::move(layer));
  }
  for (std::size_t h = 0; by_name.count("prototype." + std::to_string(h)); ++h)
    out.state.prototypes.push_back(to_matrix(take("prototype." + std::to_string(h))));
  for (double v : take("slice_bounds").data) out.state.slice_bounds.push_back(static_cast<std::size_t>(v));
  const auto& temps = take("temperatures").data;
  if (temps.size() != 2) throw FormatError("checkpoint temperatures entry has the wrong size");
  out.state.tau = temps[0];
  out.state.tau_sharp = temps[1];
  if (out.state.layers.empty() || out.state.slice_bounds.size() != out.state.prototypes.size() + 1)
    throw FormatError("checkpoint model structure is inconsistent");
  for (std::size_t h = 0; by_name.count("transition." + std::to_string(h)); ++h) {
    TransitionMatrix m;
    m.level = h;
    m.entries = to_matrix(take("transition." + std::to_string(h)));
    for (double f : take("transition." + std::to_string(h) + ".fixed").data) m.fixed.push_back(f != 0.0);
    out.transitions.push_back(std::move(m));
  }
  std::ifstream meta(path.string() + ".json");
  if (meta) {
    try {
      meta >> out.metadata;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("checkpoint metadata: " + std::string(e.what()));
    }
  }
  return out;
}

}  // namespace seal
