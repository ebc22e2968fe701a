#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "prometheus/core/dataset.hpp"
#include "prometheus/nn/model.hpp"

namespace prometheus::explain {

/// Probability of failure for every instance of a batch. Must be pure and
/// safe to call from several threads at once.
using BatchModelFn = std::function<std::vector<double>(const InstanceBatch&)>;

BatchModelFn model_fn(const nn::Network& net);

struct SaliencyMap {
  Matrix phi;  // C x T
  // Attribution of the static feature vector, treated as one extra player
  // when the explained instance carries statics.
  double static_phi = 0.0;
  bool has_static = false;
  double base_value = 0.0;
  double model_output = 0.0;
  std::string instance_id;
  std::size_t P_used = 0;
  std::uint64_t seed = 0;

  double additivity_residual() const;
};

struct BackgroundSet {
  std::vector<Instance> instances;

  std::size_t size() const { return instances.size(); }
  void check_compatible(const Instance& x) const;
};

/// min(B, |pool|) rows drawn without replacement from `pool`, ascending.
std::vector<std::size_t> background_rows(std::span<const std::size_t> pool, std::size_t b, std::uint64_t seed);

/// B instances drawn without replacement from `pool` (dataset rows).
BackgroundSet sample_background(const TimeSeriesDataset& data, std::span<const std::size_t> pool,
                                std::size_t b, std::uint64_t seed, std::span<const int> channels,
                                bool with_static);

/// C x T inclusion flags, row-major; true keeps the explained value.
struct CoalitionMask {
  std::size_t channels = 0;
  std::size_t steps = 0;
  std::vector<char> included;

  CoalitionMask(std::size_t c, std::size_t t, bool value = false)
      : channels(c), steps(t), included(c * t, value ? 1 : 0) {}
  bool operator()(std::size_t c, std::size_t t) const { return included[c * steps + t] != 0; }
  void set(std::size_t c, std::size_t t, bool v) { included[c * steps + t] = v ? 1 : 0; }
};

/// Keeps x where the mask is set and takes the background value elsewhere.
/// Statics come from the background unless `keep_statics`.
Instance mask_with_background(const Instance& x, const CoalitionMask& mask, const Instance& background,
                              bool keep_statics = false);

inline constexpr std::size_t kExactShapMaxFeatures = 20;

/// Exact Shapley values by enumerating every coalition; the value of a
/// coalition is the mean prediction over the background set. Throws SizeError
/// beyond kExactShapMaxFeatures players.
SaliencyMap exact_shap(const BatchModelFn& f, const Instance& x, const BackgroundSet& background);

struct SamplingOptions {
  std::size_t permutations = 1000;
  std::uint64_t seed = 0;
  bool normalize = true;
  std::size_t workers = 1;
};

/// Permutation-prefix Monte Carlo estimate, one background instance per
/// permutation. Permutation p draws from derive_seed(seed, p) and the
/// estimate is reduced in permutation order, so any worker count gives the
/// same bits. With normalize, the residual f(x) - base - sum(phi) is spread
/// over the features in proportion to |phi|.
SaliencyMap sampling_shap(const BatchModelFn& f, const Instance& x, const BackgroundSet& background,
                          const SamplingOptions& options);

struct BatchExplanation {
  std::vector<SaliencyMap> maps;
  std::vector<std::size_t> explained;  // dataset rows, parallel to maps
  std::vector<std::pair<std::size_t, std::string>> failures;
};

/// One sampling_shap per selected dataset row, with seed ^ row. An instance
/// that throws is recorded in `failures` and skipped.
BatchExplanation batch_explain(const nn::Model& model, const TimeSeriesDataset& data,
                               std::span<const std::size_t> selection, const BackgroundSet& background,
                               const SamplingOptions& options);

}  // namespace prometheus::explain
