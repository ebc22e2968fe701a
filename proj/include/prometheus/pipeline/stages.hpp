#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace prometheus::pipeline {

struct RunOptions {
  std::filesystem::path config;
  // "F0".."F4". Unset: pipeline runs every fold, single stages use F4.
  std::optional<std::string> fold;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  bool quiet = false;
};

/// gen-data, train, explain, aggregate, prune, refine, evaluate, fidelity,
/// report, pipeline.
const std::vector<std::string>& subcommands();

/// Stages other than gen-data and report write to <out>/<stage>/<fold>/.
/// Each stage writes a manifest.json next to its outputs and throws
/// DependencyError naming the first missing input. The run directory is
/// resolved as --out, then $PRTH_OUT, then the config's out_dir.
void run(const std::string& subcommand, const RunOptions& options);

}  // namespace prometheus::pipeline
