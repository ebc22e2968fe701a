#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prometheus/core/loader.hpp"
#include "prometheus/nn/model_spec.hpp"
#include "prometheus/nn/train.hpp"
#include "prometheus/synth/generator.hpp"

namespace prometheus::pipeline {

struct DataConfig {
  bool synthetic = true;
  synth::SynthConfig synth;
  DatasetPaths paths;  // resolved against the config file's directory
  SchemaConfig schema;
  bool derived_ws = false;
};

// Optional fields override the variant defaults of nn::default_spec.
struct ModelConfig {
  nn::Variant variant = nn::Variant::LTrans;
  // Channel kinds (RL_KPI, WS, DERIVED_WS, POSITIONAL), "WS@k<n>" for one
  // neighbour's WS channels, or channel names. Empty selects every channel.
  std::vector<std::string> inputs;
  std::optional<int> d_model, n_heads, n_encoder_blocks, k, gnn_dim, static_hidden, head_hidden;
  std::optional<std::vector<int>> lstm_layer_sizes;
  std::optional<bool> use_static_branch;
  std::optional<nn::Activation> activation;
};

struct ExplainConfig {
  std::size_t permutations = 256;
  std::uint64_t seed = 0;
  bool normalize = true;
  std::size_t background_size = 32;
  std::size_t max_instances = 64;
};

struct PruneConfig {
  double coverage = 0.95;
  int alpha = 0;
};

struct EvalConfig {
  std::uint64_t random_seed = 0;
  int random_rankings = 10;
  double threshold = 0.5;
};

struct PipelineConfig {
  DataConfig data;
  ModelConfig model;
  nn::TrainConfig train;
  ExplainConfig explain;
  PruneConfig prune;
  EvalConfig eval;
  std::filesystem::path out_dir;
  // Canonical JSON of the parsed file; hashed into every manifest.
  nlohmann::ordered_json source;

  void override_seeds(std::uint64_t seed);
  nlohmann::ordered_json seeds() const;
};

/// Every violated constraint of a parsed config document, one message each.
/// Relative data paths are checked against `base_dir`.
std::vector<std::string> validate_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Reads the file (JSON with // and /* */ comments) and validates it. Throws
/// IoError when unreadable; a syntax error is reported as a violation.
std::vector<std::string> validate_config_file(const std::filesystem::path& path);

/// Throws ConfigError listing every violation.
PipelineConfig load_config(const std::filesystem::path& path);

/// Channels of `data` matched by the selectors, in dataset order.
std::vector<int> select_channels(const TimeSeriesDataset& data, const std::vector<std::string>& selectors);

nn::ModelSpec build_spec(const ModelConfig& model, const TimeSeriesDataset& data);

}  // namespace prometheus::pipeline
