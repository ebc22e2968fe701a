#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prometheus/attribution/importance.hpp"
#include "prometheus/core/dataset.hpp"
#include "prometheus/nn/model_spec.hpp"

namespace prometheus::attribution {

struct PrunedFeatureSet {
  std::vector<std::size_t> kept_channels;  // ascending input positions
  std::vector<std::size_t> ranking;        // every channel, by |psi| descending
  double tau = 0.0;
  double coverage = 0.0;
  double coverage_requested = 0.0;
  std::vector<std::size_t> exempt_channels;
  bool has_static = false;
  bool static_kept = false;
};

/// Ranks channels (and the static group, if any) by |psi| descending, ties to
/// the lower index, and keeps the shortest prefix whose share of the total
/// |psi| reaches `coverage`. Non-prunable channels are always kept. tau is the
/// |psi| of the last kept prunable entry.
PrunedFeatureSet prune(const ChannelImportance& importance, double coverage,
                       const std::vector<ChannelMeta>& channel_meta);

/// GENTRAP without surviving WS channels becomes LTRANS (half the width, no
/// static branch); LSTM_PLUS with at least half its channels or its static
/// group pruned becomes LLSTM_PLUS over the last two layer sizes. Otherwise
/// the inputs are filtered. For GENTRAP a WS base channel survives only if all of its
/// neighbour copies survive, since W is shared across neighbours.
nn::ModelSpec derive_pruned_spec(const nn::ModelSpec& original, const PrunedFeatureSet& pruned);

/// importance.json: per channel {name, psi, abs_share, kept, exempt}.
void write_importance(const std::filesystem::path& path, const ChannelImportance& importance,
                      const PrunedFeatureSet& pruned, const std::vector<std::string>& channel_names);

void write_pruning_report(const std::filesystem::path& path, const PrunedFeatureSet& pruned,
                          const std::vector<std::string>& channel_names, const nn::ModelSpec& original,
                          const nn::ModelSpec& derived);

}  // namespace prometheus::attribution
