#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prometheus/explain/shapley.hpp"

namespace prometheus::eval {

enum class FidelityMode { Insertion, Deletion };
enum class RankingSource { Shap, Random };

std::string to_string(FidelityMode m);
std::string to_string(RankingSource s);

struct FidelityCurve {
  FidelityMode mode = FidelityMode::Insertion;
  RankingSource ranking_source = RankingSource::Shap;
  std::string granularity = "channel";
  std::vector<std::pair<std::size_t, double>> steps;  // (channels changed, F1)
  double auc = 0.0;
};

/// Mean over background instances and steps, per channel.
std::vector<double> channel_means(const explain::BackgroundSet& background);

/// Step k: the top-k ranked channels keep their values and every other
/// channel is replaced by its background mean (step 0 masks everything).
/// Channels whose meta says prunable=false (positional encodings) are
/// structural and are never masked; pass empty meta to mask every channel.
FidelityCurve insertion_test(const explain::BatchModelFn& f, const InstanceBatch& test,
                             std::span<const int> labels, std::span<const std::size_t> ranking,
                             std::span<const double> means, RankingSource source = RankingSource::Shap,
                             std::span<const ChannelMeta> meta = {});

/// Step k: the top-k ranked channels are replaced by background means.
FidelityCurve deletion_test(const explain::BatchModelFn& f, const InstanceBatch& test,
                            std::span<const int> labels, std::span<const std::size_t> ranking,
                            std::span<const double> means, RankingSource source = RankingSource::Shap,
                            std::span<const ChannelMeta> meta = {});

std::vector<std::size_t> random_ranking(std::size_t channels, std::uint64_t seed);

/// Trapezoid rule over x = k / (n - 1) for n equally spaced values.
double trapezoid_auc(std::span<const double> ys);

/// Pointwise mean of curves sharing mode and step grid; AUC recomputed.
FidelityCurve mean_curve(std::span<const FidelityCurve> curves);

}  // namespace prometheus::eval
