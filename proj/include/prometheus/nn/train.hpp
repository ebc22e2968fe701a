#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prometheus/core/dataset.hpp"
#include "prometheus/core/folds.hpp"
#include "prometheus/nn/model.hpp"

namespace prometheus::nn {

enum class ClassWeighting { None, InverseFrequency };

std::string to_string(ClassWeighting w);
ClassWeighting class_weighting_from_string(const std::string& s);

struct TrainConfig {
  int batch_size = 1024;
  double learning_rate = 1e-3;
  int epochs = 100;
  ClassWeighting class_weighting = ClassWeighting::InverseFrequency;
  std::uint64_t seed = 1;
  int early_stop_patience = 0;  // 0 disables early stopping
  double weight_decay = 0.0;    // decoupled, applied to ".w" matrices only
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
};

/// Normalized dataset plus the fold's instance split.
struct FoldData {
  TimeSeriesDataset data;
  SplitIndices split;
  NormStats norm;
};

FoldData prepare_fold(const TimeSeriesDataset& raw, const FoldSpec& fold);

struct TrainedModel {
  Model model;
  NormStats norm_stats;
  std::size_t param_count = 0;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> train_log;
  int best_epoch = 0;

  const ModelSpec& spec() const { return model.spec(); }
};

struct FitResult {
  std::vector<EpochRecord> log;
  int best_epoch = 0;
};

/// Adam on the class-weighted cross-entropy. Keeps the weights of the epoch
/// with the best validation F1 (ties: lower validation loss); without a
/// validation set the lowest training loss wins.
FitResult fit(Network& net, const InstanceBatch& train, std::span<const int> train_labels,
              const InstanceBatch& val, std::span<const int> val_labels, const TrainConfig& cfg);

TrainedModel train(const ModelSpec& spec, const FoldData& fold, const TrainConfig& cfg);

/// Rows of `data` in the model's channel view.
InstanceBatch model_batch(const ModelSpec& spec, const TimeSeriesDataset& data,
                          std::span<const std::size_t> rows);

std::vector<double> predict_rows(const Model& model, const TimeSeriesDataset& data,
                                 std::span<const std::size_t> rows);

std::vector<int> labels_of(const TimeSeriesDataset& data, std::span<const std::size_t> rows);

/// Copies instances `rows` of `batch`.
InstanceBatch subset(const InstanceBatch& batch, std::span<const std::size_t> rows);

}  // namespace prometheus::nn
