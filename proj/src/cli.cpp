// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#include "seal/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "seal/checkpoint.hpp"
#include "seal/errors.hpp"
#include "seal/eval.hpp"
#include "seal/theory.hpp"

namespace seal {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      if constexpr (std::is_floating_point_v<T>) {
        out.push_back(static_cast<T>(std::stod(item, &used)));
      } else {
        if (!item.empty() && item[0] == '-') throw std::invalid_argument("negative");
        out.push_back(static_cast<T>(std::stoull(item, &used)));
      }
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw InputError(flag + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw InputError(flag + " is empty");
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw InputError(what + " path is required");
  if (!fs::exists(path)) throw InputError(what + " not found: " + path);
}

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "seed overriding the configuration");
  cmd->add_option("--threads", f.threads, "worker threads for evaluation passes")->check(CLI::PositiveNumber);
  cmd->add_flag("--deterministic", f.deterministic, "single-threaded, reproducible execution");
}

RunConfig config_for(const CommonFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : (require_file(f.config, "config file"), load_run_config(f.config));
  if (f.seed) cfg.train.seed = *f.seed;
  cfg.train.threads = resolve_threads(f.threads, f.deterministic);
  cfg.validate();
  return cfg;
}

// Predicted labels per sample id, one column per level.
std::map<std::string, std::vector<int>> read_predictions(const fs::path& path, std::size_t levels) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open predictions " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty predictions file");
  std::map<std::string, std::vector<int>> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, cell;
    std::getline(ss, id, ',');
    std::vector<int> labels;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        labels.push_back(std::stoi(cell, &used));
        if (used != cell.size()) throw std::invalid_argument("trailing");
      } catch (const std::logic_error&) {
        throw FormatError(path.string() + " row " + std::to_string(row) + ": bad prediction '" + cell + "'");
      }
    }
    if (labels.size() != levels)
      throw FormatError(path.string() + " row " + std::to_string(row) + ": expected " + std::to_string(levels) +
                        " predicted levels");
    for (int y : labels)
      if (y < 0) throw FormatError(path.string() + " row " + std::to_string(row) + ": negative prediction");
    if (!out.emplace(id, std::move(labels)).second)
      throw FormatError(path.string() + " row " + std::to_string(row) + ": duplicate id " + id);
  }
  return out;
}

void write_predictions(const fs::path& path, std::span<const Sample> samples, std::span<const std::size_t> indices,
                       const std::vector<std::vector<int>>& pred) {
  std::string text = "id";
  for (std::size_t h = 0; h < pred.size(); ++h) text += ",level_" + std::to_string(h + 1);
  text += '\n';
  for (std::size_t i = 0; i < indices.size(); ++i) {
    text += samples[indices[i]].id;
    for (const auto& level : pred) text += "," + std::to_string(level[i]);
    text += '\n';
  }
  write_text(path, text);
}

int cmd_generate(const std::string& counts_text, const std::string& spreads_text, std::size_t per_class,
                 std::size_t dim, double imbalance, double old_fraction, const std::string& precision,
                 const std::string& hierarchy_path, const CommonFlags& f, std::ostream& out) {
  if (f.out.empty()) throw InputError("--out is required");
  HierarchyDocument doc;
  if (!hierarchy_path.empty()) {
    require_file(hierarchy_path, "hierarchy file");
    doc = load_hierarchy(hierarchy_path);
  } else {
    doc.spec = balanced_hierarchy(parse_list<std::size_t>(counts_text, "--counts"));
  }
  SyntheticOptions opt;
  opt.per_class = per_class;
  opt.dim = dim;
  opt.seed = f.seed.value_or(0);
  opt.imbalance_ratio = imbalance;
  if (!spreads_text.empty()) {
    opt.spreads = parse_list<double>(spreads_text, "--spreads");
  } else {
    // Coarse-to-fine halving down to a noise floor.
    double s = 4.0;
    for (std::size_t h = 0; h <= doc.spec.levels(); ++h, s *= 0.5) opt.spreads.push_back(s);
  }
  const auto samples = generate_synthetic(doc.spec, opt);
  if (doc.known.empty()) doc.known = make_gcd_split(samples, doc.spec, old_fraction, 1.0, opt.seed).old_classes;
  ensure_dir(f.out);
  if (precision != "double" && precision != "single") throw InputError("--precision must be double or single");
  save_embeddings(samples, doc.spec.levels(), fs::path(f.out) / "features.csv",
                  precision == "single" ? FloatPrecision::Single : FloatPrecision::Double);
  save_hierarchy(doc, fs::path(f.out) / "hierarchy.json");
  out << "wrote " << samples.size() << " samples to " << f.out << '\n';
  return 0;
}

int cmd_train(const CommonFlags& f, const std::string& features, const std::string& hierarchy, std::ostream& out) {
  if (f.out.empty()) throw InputError("--out is required");
  RunConfig cfg = config_for(f);
  if (!features.empty()) cfg.data.features = features;
  if (!hierarchy.empty()) cfg.data.hierarchy = hierarchy;
  cfg.validate();
  const Experiment exp = prepare_experiment(cfg);
  const fs::path dir(f.out);
  ensure_dir(dir);
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");

  std::ofstream metrics(dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
  if (!metrics) throw InputError("cannot write " + (dir / "metrics.jsonl").string());
  const TrainResult result = train(exp.samples, exp.split, exp.validation, exp.train_spec, cfg.train, cfg.loss,
                                   [&](const EpochRecord& rec) { metrics << to_json(rec).dump() << '\n' << std::flush; });

  HierarchyDocument train_doc{exp.train_spec, exp.split.old_classes, {}};
  save_hierarchy(train_doc, dir / "hierarchy.json");
  std::vector<Sample> truth;
  for (std::size_t i : exp.split.unlabelled) truth.push_back(exp.samples[i]);
  relabel(truth, exp.train_spec);
  for (auto& s : truth) s.features.clear();
  save_embeddings(truth, exp.train_spec.levels(), dir / "truth.csv");
  const auto pred = predict(result.state, feature_matrix(exp.samples, exp.split.unlabelled), cfg.train.threads);
  write_predictions(dir / "predictions.csv", exp.samples, exp.split.unlabelled, pred);

  json meta{{"seed", cfg.train.seed}, {"epochs", cfg.train.epochs}, {"levels", exp.train_spec.levels()}};
  save_model(dir / "model.seal", result.state, result.transitions, meta);

  json final_doc;
  final_doc["epochs"] = result.record.epochs.size();
  final_doc["unlabelled"] = to_json(result.record.final_report);
  final_doc["config"] = to_json(cfg);
  final_doc["wall_clock_seconds"] = result.record.wall_clock_seconds;
  write_text(dir / "final.json", final_doc.dump(2) + "\n");
  const auto& r = result.record.final_report;
  out << std::fixed << std::setprecision(4) << "All " << r.acc_all << "  Old " << r.acc_old.value_or(0.0) << "  New "
      << r.acc_new.value_or(0.0) << '\n';
  return 0;
}

void dump_embedding(const ModelState& state, std::span<const Sample> samples, const fs::path& path) {
  const ForwardTrace trace = forward(state, feature_matrix(samples, {}));
  const Eigen::MatrixXd& z = trace.aggregated.back();
  const Eigen::MatrixXd centred = z.rowwise() - z.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centred.transpose() * centred);
  const Eigen::Index d = z.cols();
  Eigen::MatrixXd axes(d, 2);
  axes.col(0) = eig.eigenvectors().col(d - 1);
  axes.col(1) = d > 1 ? Eigen::VectorXd(eig.eigenvectors().col(d - 2)) : Eigen::VectorXd::Zero(d);
  const Eigen::MatrixXd proj = centred * axes;
  std::ostringstream text;
  text << std::setprecision(17) << "id,x,y\n";
  for (Eigen::Index i = 0; i < proj.rows(); ++i)
    text << samples[static_cast<std::size_t>(i)].id << ',' << proj(i, 0) << ',' << proj(i, 1) << '\n';
  write_text(path, text.str());
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path, const std::string& hierarchy_path,
             bool separate, const std::string& model_path, const std::string& dump_path, std::ostream& out) {
  require_file(pred_path, "predictions file");
  require_file(truth_path, "truth file");
  require_file(hierarchy_path, "hierarchy file");
  const HierarchyDocument doc = load_hierarchy(hierarchy_path);
  const auto truth = read_samples_csv(truth_path, doc.spec, !dump_path.empty());
  const auto pred = read_predictions(pred_path, doc.spec.levels());
  std::vector<std::vector<int>> t(doc.spec.levels()), p(doc.spec.levels());
  for (const auto& s : truth) {
    const auto it = pred.find(s.id);
    if (it == pred.end()) throw InputError("no prediction for sample " + s.id);
    for (std::size_t h = 0; h < doc.spec.levels(); ++h) {
      t[h].push_back(s.labels[h]);
      p[h].push_back(it->second[h]);
    }
  }
  const EvalReport report = evaluate(t, p, doc.spec, doc.known, separate);
  out << to_json(report).dump(2) << '\n';
  if (!dump_path.empty()) {
    require_file(model_path, "model checkpoint");
    dump_embedding(load_model(model_path).state, truth, dump_path);
  }
  return 0;
}

int cmd_verify_theory(std::size_t trials, std::uint64_t seed, std::ostream& out) {
  const auto checks = run_theory_suite(trials, seed);
  bool ok = true;
  out << std::left << std::setw(32) << "check" << std::setw(8) << "trials" << std::setw(14) << "worst"
      << "result\n";
  for (const auto& c : checks) {
    out << std::left << std::setw(32) << c.name << std::setw(8) << c.trials << std::setw(14) << std::scientific
        << std::setprecision(3) << c.worst << std::defaultfloat << (c.passed ? "PASS" : "FAIL") << '\n';
    ok = ok && c.passed;
  }
  return ok ? 0 : 2;
}

}  // namespace

Experiment prepare_experiment(const RunConfig& config) {
  const DataConfig& d = config.data;
  d.validate();
  Experiment exp;
  if (d.features.empty()) {
    exp.truth.spec = balanced_hierarchy(d.counts);
    SyntheticOptions opt;
    opt.per_class = d.per_class;
    opt.dim = d.dim;
    opt.spreads = d.spreads;
    opt.seed = d.data_seed;
    opt.imbalance_ratio = d.imbalance_ratio;
    exp.samples = generate_synthetic(exp.truth.spec, opt);
  } else {
    require_file(d.features, "features file");
    require_file(d.hierarchy, "hierarchy file");
    LoadedDataset loaded = load_embeddings(d.features, d.hierarchy);
    exp.truth = std::move(loaded.hierarchy);
    exp.samples = std::move(loaded.samples);
  }
  exp.split = exp.truth.known.empty()
                  ? make_gcd_split(exp.samples, exp.truth.spec, d.old_fraction, d.labelled_fraction, d.split_seed)
                  : make_gcd_split(exp.samples, exp.truth.spec, exp.truth.known, d.labelled_fraction, d.split_seed);
  exp.validation = reserve_validation(exp.split, exp.samples, config.train.validation_fraction, d.split_seed + 2);
  switch (d.hierarchy_mode) {
    case HierarchyMode::True: exp.train_spec = exp.truth.spec; break;
    case HierarchyMode::Random: exp.train_spec = random_hierarchy(exp.truth.spec, d.hierarchy_seed); break;
    case HierarchyMode::Flat: exp.train_spec = flatten(exp.truth.spec); break;
  }
  return exp;
}

std::size_t resolve_threads(std::size_t requested, bool deterministic) {
  if (deterministic) return 1;
  if (const char* env = std::getenv("SEAL_THREADS"); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long long n = std::stoull(env, &used);
      if (used != std::strlen(env) || n == 0) throw std::invalid_argument("bad");
      return static_cast<std::size_t>(n);
    } catch (const std::logic_error&) {
      throw InputError(std::string("SEAL_THREADS must be a positive integer, got '") + env + "'");
    }
  }
  return std::max<std::size_t>(requested, 1);
}

void write_report(const fs::path& run_dir) {
  const fs::path metrics_path = run_dir / "metrics.jsonl";
  std::ifstream in(metrics_path);
  if (!in) throw InputError("cannot open " + metrics_path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      json row = json::parse(line);
      if (!row.contains("epoch") || !row.contains("loss") || !row.contains("unlabelled"))
        throw FormatError("missing fields");
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      throw FormatError(metrics_path.string() + " line " + std::to_string(number) + " is corrupt: " + e.what());
    }
  }
  if (rows.empty()) throw InputError(metrics_path.string() + " has no epochs");

  try {
    const json& last = rows.back();
    json summary;
    summary["epochs"] = rows.size();
    summary["final"] = last.at("unlabelled");
    summary["consistency"] = last.at("unlabelled").at("consistency");
    summary["val_acc"] = last.at("val_acc");
    write_text(run_dir / "summary.json", summary.dump(2) + "\n");

    const std::size_t levels = last.at("loss").at("cls").size();
    std::ostringstream csv;
    csv << std::setprecision(17) << "epoch,total,cgc";
    for (std::size_t h = 0; h < levels; ++h) csv << ",soft_rep_" << h + 1;
    for (std::size_t h = 0; h < levels; ++h) csv << ",cls_" << h + 1;
    csv << ",lr,lambda_c\n";
    for (const auto& r : rows) {
      const json& loss = r.at("loss");
      csv << r.at("epoch").get<std::size_t>() << ',' << loss.at("total").get<double>() << ','
          << loss.at("cgc").get<double>();
      for (std::size_t h = 0; h < levels; ++h) csv << ',' << loss.at("soft_rep").at(h).get<double>();
      for (std::size_t h = 0; h < levels; ++h) csv << ',' << loss.at("cls").at(h).get<double>();
      csv << ',' << r.at("lr").get<double>() << ',' << r.at("lambda_c").get<double>() << '\n';
    }
    write_text(run_dir / "curves.csv", csv.str());
  } catch (const json::exception& e) {
    throw FormatError(metrics_path.string() + ": inconsistent records: " + e.what());
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic-aware hierarchical learning for generalized category discovery", "seal"};
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags;
  std::string counts = "4,12,24", spreads, precision = "double", gen_hierarchy;
  std::size_t per_class = 100, dim = 32;
  double imbalance = 1.0, old_fraction = 0.5;
  auto* gen = app.add_subcommand("generate", "write a synthetic hierarchical dataset");
  add_common(gen, gen_flags);
  gen->add_option("--counts", counts, "classes per level, coarse to fine");
  gen->add_option("--spreads", spreads, "per-level spreads plus an optional noise scale");
  gen->add_option("--per-class", per_class, "samples per fine class");
  gen->add_option("--dim", dim, "feature dimension");
  gen->add_option("--imbalance", imbalance, "largest/smallest class size ratio");
  gen->add_option("--old-fraction", old_fraction, "fraction of fine classes marked known");
  gen->add_option("--precision", precision, "double or single");
  gen->add_option("--hierarchy", gen_hierarchy, "use this hierarchy instead of --counts");

  std::string features, train_hierarchy;
  auto* trn = app.add_subcommand("train", "train a model and write a run directory");
  add_common(trn, train_flags);
  trn->add_option("--features", features, "embeddings CSV (overrides the config)");
  trn->add_option("--hierarchy", train_hierarchy, "hierarchy JSON (overrides the config)");

  std::string pred, truth, eval_hierarchy, model, dump;
  bool separate = false;
  auto* ev = app.add_subcommand("eval", "score predictions against ground truth");
  ev->add_option("--pred", pred, "prediction CSV")->required();
  ev->add_option("--truth", truth, "truth CSV")->required();
  ev->add_option("--hierarchy", eval_hierarchy, "hierarchy JSON")->required();
  ev->add_flag("--separate-assignment", separate, "match Old and New subsets separately");
  ev->add_option("--model", model, "checkpoint used by --dump-embedding");
  ev->add_option("--dump-embedding", dump, "write a 2-column projection of the truth samples");

  std::size_t trials = 100;
  std::uint64_t theory_seed = 0;
  auto* th = app.add_subcommand("verify-theory", "check the information-theoretic inequalities");
  th->add_option("--trials", trials, "random joints per check")->check(CLI::PositiveNumber);
  th->add_option("--seed", theory_seed, "seed");

  std::string run_dir;
  auto* rep = app.add_subcommand("report", "summarize a run directory");
  rep->add_option("run_dir", run_dir, "run directory containing metrics.jsonl")->required();

  std::vector<std::string> argv_store{"seal"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "seal: error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (gen->parsed())
      return cmd_generate(counts, spreads, per_class, dim, imbalance, old_fraction, precision, gen_hierarchy,
                          gen_flags, out);
    if (trn->parsed()) return cmd_train(train_flags, features, train_hierarchy, out);
    if (ev->parsed()) return cmd_eval(pred, truth, eval_hierarchy, separate, model, dump, out);
    if (th->parsed()) return cmd_verify_theory(trials, theory_seed, out);
    if (rep->parsed()) {
      write_report(run_dir);
      out << "wrote " << (fs::path(run_dir) / "summary.json").string() << '\n';
      return 0;
    }
  } catch (const NumericError& e) {
    err << "seal: numeric failure: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    err << "seal: error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "seal: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "seal: failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace seal
