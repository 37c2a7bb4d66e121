// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "seal/config.hpp"
#include "seal/datagen.hpp"
#include "seal/hierarchy.hpp"
#include "seal/trainer.hpp"

namespace seal {

// Dataset, split and training taxonomy resolved from a run config.
struct Experiment {
  HierarchyDocument truth;     // the taxonomy the data was drawn from
  HierarchySpec train_spec;    // the taxonomy the model is trained with
  std::vector<Sample> samples;
  GcdSplit split;
  std::vector<std::size_t> validation;
};

Experiment prepare_experiment(const RunConfig& config);

// Thread count after SEAL_THREADS and --deterministic are applied.
std::size_t resolve_threads(std::size_t requested, bool deterministic);

// Writes summary.json and curves.csv next to metrics.jsonl.
void write_report(const std::filesystem::path& run_dir);

// Entry point; returns the process exit code (0 ok, 1 input error,
// 2 numeric failure).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace seal
