// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include "seal/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>

#include "seal/errors.hpp"

namespace seal {
namespace {

using nlohmann::json;

// Reads the keys of one config section, rejecting anything unknown.
class Section {
 public:
  Section(const json& doc, std::string name, std::initializer_list<const char*> keys) : doc_(doc), name_(std::move(name)) {
    if (!doc_.is_object()) throw FormatError("config section '" + name_ + "' must be an object");
    for (const auto& [key, value] : doc_.items()) {
      (void)value;
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
        throw FormatError("unknown key '" + key + "' in config section '" + name_ + "'");
    }
  }

  bool has(const char* key) const { return doc_.contains(key); }

  void number(const char* key, double& out) const {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_number()) throw FormatError(where(key) + " must be a number");
    out = v.get<double>();
  }

  template <typename T>
  void integer(const char* key, T& out) const {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_number_unsigned()) throw FormatError(where(key) + " must be a non-negative integer");
    out = static_cast<T>(v.get<std::uint64_t>());
  }

  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_boolean()) throw FormatError(where(key) + " must be true or false");
    out = v.get<bool>();
  }

  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_string()) throw FormatError(where(key) + " must be a string");
    out = v.get<std::string>();
  }

  void numbers(const char* key, std::vector<double>& out) const {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_array()) throw FormatError(where(key) + " must be an array of numbers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) throw FormatError(where(key) + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
  }

  void counts(const char* key, std::vector<std::size_t>& out) const {
    if (!has(key)) return;
    const json& v = doc_.at(key);
    if (!v.is_array()) throw FormatError(where(key) + " must be an array of non-negative integers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number_unsigned()) throw FormatError(where(key) + " must be an array of non-negative integers");
      out.push_back(e.get<std::size_t>());
    }
  }

  template <typename Fn>
  void parsed(const char* key, Fn&& fn) const {
    if (!has(key)) return;
    std::string text;
    string(key, text);
    try {
      fn(text);
    } catch (const InputError& e) {
      throw FormatError(where(key) + ": " + e.what());
    }
  }

 private:
  std::string where(const char* key) const { return "config key '" + name_ + "." + key + "'"; }

  const json& doc_;
  std::string name_;
};

}  // namespace

std::string to_string(HierarchyMode mode) {
  switch (mode) {
    case HierarchyMode::True: return "true";
    case HierarchyMode::Random: return "random";
    case HierarchyMode::Flat: return "flat";
  }
  return "true";
}

HierarchyMode hierarchy_mode_from_string(const std::string& name) {
  if (name == "true") return HierarchyMode::True;
  if (name == "random") return HierarchyMode::Random;
  if (name == "flat") return HierarchyMode::Flat;
  throw InputError("unknown hierarchy mode '" + name + "'");
}

void DataConfig::validate() const {
  if (features.empty()) {
    if (counts.empty()) throw InputError("synthetic data needs class counts");
    if (per_class == 0) throw InputError("per_class must be positive");
    if (dim < counts.size()) throw InputError("dim must be at least the number of levels");
    if (spreads.size() != counts.size() && spreads.size() != counts.size() + 1)
      throw InputError("spreads needs one value per level, optionally plus a noise scale");
  } else if (hierarchy.empty()) {
    throw InputError("an embeddings file needs a hierarchy file");
  }
  if (!(old_fraction > 0.0 && old_fraction <= 1.0)) throw InputError("old_fraction must lie in (0,1]");
  if (!(labelled_fraction > 0.0 && labelled_fraction <= 1.0)) throw InputError("labelled_fraction must lie in (0,1]");
  if (!(imbalance_ratio >= 1.0)) throw InputError("imbalance_ratio must be at least 1");
}

void RunConfig::validate() const {
  train.validate();
  loss.validate();
  data.validate();
}

RunConfig run_config_from_json(const json& doc) {
  RunConfig cfg;
  const Section top(doc, "root", {"train", "loss", "model", "data", "seed"});
  top.integer("seed", cfg.train.seed);

  if (doc.contains("train")) {
    const Section s(doc.at("train"), "train",
                    {"epochs", "batch_size", "lr_initial", "lr_final", "cosine", "momentum", "weight_decay", "seed",
                     "view_noise", "transition_update", "validation_fraction", "threads"});
    auto& t = cfg.train;
    s.integer("epochs", t.epochs);
    s.integer("batch_size", t.batch_size);
    s.number("lr_initial", t.lr_initial);
    s.number("lr_final", t.lr_final);
    s.boolean("cosine", t.cosine);
    s.number("momentum", t.momentum);
    s.number("weight_decay", t.weight_decay);
    s.integer("seed", t.seed);
    s.number("view_noise", t.view_noise);
    s.parsed("transition_update", [&](const std::string& v) { t.transition_update = transition_cadence_from_string(v); });
    s.number("validation_fraction", t.validation_fraction);
    s.integer("threads", t.threads);
  }
  if (doc.contains("model")) {
    const Section s(doc.at("model"), "model", {"hidden", "proj_dim"});
    s.counts("hidden", cfg.train.model.hidden);
    s.integer("proj_dim", cfg.train.model.proj_dim);
  }
  if (doc.contains("loss")) {
    const Section s(doc.at("loss"), "loss",
                    {"tau", "tau_sharp", "lambda_b", "xi", "tau_c", "lambda_s", "lambda_c_start", "lambda_c_end",
                     "lambda_c_horizon", "transition_momentum", "beta", "tau_supcon", "kl_floor", "fusion",
                     "clamp_soft_labels", "normalize_soft_labels", "supcon", "cgc", "cgc_detach_target", "cgc_both_views"});
    auto& l = cfg.loss;
    s.number("tau", l.tau);
    s.number("tau_sharp", l.tau_sharp);
    s.number("lambda_b", l.lambda_b);
    s.number("xi", l.xi);
    s.number("tau_c", l.tau_c);
    s.number("lambda_s", l.lambda_s);
    s.number("lambda_c_start", l.lambda_c_start);
    s.number("lambda_c_end", l.lambda_c_end);
    s.integer("lambda_c_horizon", l.lambda_c_horizon);
    s.number("transition_momentum", l.transition_momentum);
    s.number("beta", l.beta);
    s.number("tau_supcon", l.tau_supcon);
    s.number("kl_floor", l.kl_floor);
    s.parsed("fusion", [&](const std::string& v) { l.fusion = fusion_rule_from_string(v); });
    s.boolean("clamp_soft_labels", l.clamp_soft_labels);
    s.boolean("normalize_soft_labels", l.normalize_soft_labels);
    s.boolean("supcon", l.supcon);
    s.boolean("cgc", l.cgc);
    s.boolean("cgc_detach_target", l.cgc_detach_target);
    s.boolean("cgc_both_views", l.cgc_both_views);
  }
  if (doc.contains("data")) {
    const Section s(doc.at("data"), "data",
                    {"features", "hierarchy", "counts", "per_class", "dim", "spreads", "data_seed", "imbalance_ratio",
                     "old_fraction", "labelled_fraction", "split_seed", "hierarchy_mode", "hierarchy_seed"});
    auto& d = cfg.data;
    s.string("features", d.features);
    s.string("hierarchy", d.hierarchy);
    s.counts("counts", d.counts);
    s.integer("per_class", d.per_class);
    s.integer("dim", d.dim);
    s.numbers("spreads", d.spreads);
    s.integer("data_seed", d.data_seed);
    s.number("imbalance_ratio", d.imbalance_ratio);
    s.number("old_fraction", d.old_fraction);
    s.number("labelled_fraction", d.labelled_fraction);
    s.integer("split_seed", d.split_seed);
    s.parsed("hierarchy_mode", [&](const std::string& v) { d.hierarchy_mode = hierarchy_mode_from_string(v); });
    s.integer("hierarchy_seed", d.hierarchy_seed);
  }
  try {
    cfg.validate();
  } catch (const FormatError&) {
    throw;
  } catch (const InputError& e) {
    throw FormatError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

json to_json(const RunConfig& cfg) {
  const auto& t = cfg.train;
  const auto& l = cfg.loss;
  const auto& d = cfg.data;
  json j;
  j["seed"] = t.seed;
  j["train"] = {{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"lr_initial", t.lr_initial},
                {"lr_final", t.lr_final},
                {"cosine", t.cosine},
                {"momentum", t.momentum},
                {"weight_decay", t.weight_decay},
                {"seed", t.seed},
                {"view_noise", t.view_noise},
                {"transition_update", to_string(t.transition_update)},
                {"validation_fraction", t.validation_fraction},
                {"threads", t.threads}};
  j["model"] = {{"hidden", t.model.hidden}, {"proj_dim", t.model.proj_dim}};
  j["loss"] = {{"tau", l.tau},
               {"tau_sharp", l.tau_sharp},
               {"lambda_b", l.lambda_b},
               {"xi", l.xi},
               {"tau_c", l.tau_c},
               {"lambda_s", l.lambda_s},
               {"lambda_c_start", l.lambda_c_start},
               {"lambda_c_end", l.lambda_c_end},
               {"lambda_c_horizon", l.lambda_c_horizon},
               {"transition_momentum", l.transition_momentum},
               {"beta", l.beta},
               {"tau_supcon", l.tau_supcon},
               {"kl_floor", l.kl_floor},
               {"fusion", to_string(l.fusion)},
               {"clamp_soft_labels", l.clamp_soft_labels},
               {"normalize_soft_labels", l.normalize_soft_labels},
               {"supcon", l.supcon},
               {"cgc", l.cgc},
               {"cgc_detach_target", l.cgc_detach_target},
               {"cgc_both_views", l.cgc_both_views}};
  j["data"] = {{"features", d.features},
               {"hierarchy", d.hierarchy},
               {"counts", d.counts},
               {"per_class", d.per_class},
               {"dim", d.dim},
               {"spreads", d.spreads},
               {"data_seed", d.data_seed},
               {"imbalance_ratio", d.imbalance_ratio},
               {"old_fraction", d.old_fraction},
               {"labelled_fraction", d.labelled_fraction},
               {"split_seed", d.split_seed},
               {"hierarchy_mode", to_string(d.hierarchy_mode)},
               {"hierarchy_seed", d.hierarchy_seed}};
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw FormatError("malformed config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(doc);
}

HierarchySpec balanced_hierarchy(const std::vector<std::size_t>& counts) {
  HierarchySpec spec;
  spec.counts = counts;
  for (std::size_t h = 0; h + 1 < counts.size(); ++h) {
    std::vector<std::size_t> parents(counts[h + 1]);
    for (std::size_t c = 0; c < counts[h + 1]; ++c) parents[c] = c * counts[h] / counts[h + 1];
    spec.parents.push_back(std::move(parents));
  }
  spec.validate();
  return spec;
}

}  // namespace seal
