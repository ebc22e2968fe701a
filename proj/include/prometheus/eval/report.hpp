#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prometheus/eval/fidelity.hpp"
#include "prometheus/eval/metrics.hpp"

namespace prometheus::eval {

struct ModelResult {
  std::string role;  // e.g. "original", "refined"
  ClassificationReport report;
  std::size_t param_count = 0;
};

struct ShapValuePair {
  std::string channel;
  double value = 0.0;
  double phi = 0.0;
};

struct FoldReport {
  std::string fold_id;
  std::vector<ModelResult> models;
  std::vector<FidelityCurve> curves;
  std::vector<std::string> channel_names;
  std::vector<double> global_importance;
  std::vector<ShapValuePair> shap_vs_value;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

MeanStd mean_std(std::span<const double> xs);

/// Writes summary.json, boxplot.csv, importance_bar.csv, fidelity_curves.csv
/// and shap_vs_value.csv. Folds must form a contiguous F-range and every
/// model role must keep one variant across folds.
void write_report(const std::filesystem::path& dir, std::span<const FoldReport> folds);

}  // namespace prometheus::eval
