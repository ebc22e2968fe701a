#include "prometheus/eval/fidelity.hpp"

#include <algorithm>

#include "prometheus/core/error.hpp"
#include "prometheus/core/random.hpp"
#include "prometheus/eval/metrics.hpp"

namespace prometheus::eval {

namespace {

void check_permutation(std::span<const std::size_t> ranking, std::size_t channels) {
  std::vector<char> seen(channels, 0);
  bool ok = ranking.size() == channels;
  for (std::size_t c : ranking) {
    ok = ok && c < channels && !seen[c];
    if (c < channels) seen[c] = 1;
  }
  if (!ok) throw ArgumentError("ranking is not a permutation of the " + std::to_string(channels) + " channels");
}

FidelityCurve run_curve(FidelityMode mode, const explain::BatchModelFn& f, const InstanceBatch& test,
                        std::span<const int> labels, std::span<const std::size_t> ranking,
                        std::span<const double> means, RankingSource source,
                        std::span<const ChannelMeta> meta) {
  check_permutation(ranking, test.channels);
  if (means.size() != test.channels) throw ShapeError("channel means do not match the test batch");
  if (labels.size() != test.size) throw ShapeError("labels do not match the test batch");
  if (!meta.empty() && meta.size() != test.channels) throw ShapeError("channel meta does not match the test batch");
  FidelityCurve curve;
  curve.mode = mode;
  curve.ranking_source = source;
  std::vector<double> ys;
  for (std::size_t k = 0; k <= test.channels; ++k) {
    std::vector<char> masked(test.channels, mode == FidelityMode::Insertion ? 1 : 0);
    for (std::size_t j = 0; j < k; ++j) masked[ranking[j]] = mode == FidelityMode::Insertion ? 0 : 1;
    for (std::size_t c = 0; c < meta.size(); ++c) {
      if (!meta[c].prunable) masked[c] = 0;
    }
    InstanceBatch b = test;
    for (std::size_t i = 0; i < b.size; ++i) {
      for (std::size_t c = 0; c < b.channels; ++c) {
        if (!masked[c]) continue;
        for (std::size_t t = 0; t < b.steps; ++t) b.values[(i * b.channels + c) * b.steps + t] = means[c];
      }
    }
    const double f1 = prf1(f(b), labels).f1;
    curve.steps.emplace_back(k, f1);
    ys.push_back(f1);
  }
  curve.auc = trapezoid_auc(ys);
  return curve;
}

}  // namespace

std::string to_string(FidelityMode m) { return m == FidelityMode::Insertion ? "INSERTION" : "DELETION"; }
std::string to_string(RankingSource s) { return s == RankingSource::Shap ? "SHAP" : "RANDOM"; }

std::vector<double> channel_means(const explain::BackgroundSet& background) {
  if (background.instances.empty()) throw ArgumentError("background set is empty");
  const std::size_t c = background.instances.front().values.rows();
  const std::size_t t = background.instances.front().values.cols();
  std::vector<double> means(c, 0.0);
  for (const Instance& b : background.instances) {
    for (std::size_t i = 0; i < c; ++i) {
      for (double v : b.values.row(i)) means[i] += v;
    }
  }
  for (double& m : means) m /= static_cast<double>(background.size() * t);
  return means;
}

FidelityCurve insertion_test(const explain::BatchModelFn& f, const InstanceBatch& test,
                             std::span<const int> labels, std::span<const std::size_t> ranking,
                             std::span<const double> means, RankingSource source,
                             std::span<const ChannelMeta> meta) {
  return run_curve(FidelityMode::Insertion, f, test, labels, ranking, means, source, meta);
}

FidelityCurve deletion_test(const explain::BatchModelFn& f, const InstanceBatch& test,
                            std::span<const int> labels, std::span<const std::size_t> ranking,
                            std::span<const double> means, RankingSource source,
                            std::span<const ChannelMeta> meta) {
  return run_curve(FidelityMode::Deletion, f, test, labels, ranking, means, source, meta);
}

std::vector<std::size_t> random_ranking(std::size_t channels, std::uint64_t seed) {
  if (channels < 1) throw ArgumentError("random_ranking needs C >= 1");
  return Rng(seed).permutation(channels);
}

double trapezoid_auc(std::span<const double> ys) {
  if (ys.empty()) return 0.0;
  if (ys.size() == 1) return ys.front();
  double area = 0.0;
  for (std::size_t i = 1; i < ys.size(); ++i) area += 0.5 * (ys[i - 1] + ys[i]);
  return area / static_cast<double>(ys.size() - 1);
}

FidelityCurve mean_curve(std::span<const FidelityCurve> curves) {
  if (curves.empty()) throw ArgumentError("mean_curve needs at least one curve");
  FidelityCurve out = curves.front();
  for (std::size_t i = 1; i < curves.size(); ++i) {
    if (curves[i].mode != out.mode || curves[i].steps.size() != out.steps.size()) {
      throw ShapeError("curves differ in mode or length");
    }
    for (std::size_t k = 0; k < out.steps.size(); ++k) out.steps[k].second += curves[i].steps[k].second;
  }
  std::vector<double> ys;
  for (auto& [k, y] : out.steps) {
    y /= static_cast<double>(curves.size());
    ys.push_back(y);
  }
  out.auc = trapezoid_auc(ys);
  return out;
}

}  // namespace prometheus::eval
