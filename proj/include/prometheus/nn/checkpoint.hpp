#pragma once

#include <filesystem>

#include "prometheus/nn/train.hpp"

namespace prometheus::nn {

inline constexpr int kCheckpointVersion = 1;

/// uint64 little-endian header length, JSON header (spec, norm_stats,
/// param_count, seed, train_log, weight names), then one PRTH block per
/// weight tensor in header order.
void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace prometheus::nn
