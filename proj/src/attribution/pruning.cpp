#include "prometheus/attribution/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"
#include "prometheus/core/error.hpp"
#include "prometheus/nn/model.hpp"

namespace prometheus::attribution {

namespace {

constexpr double kCoverageSlack = 1e-12;

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

}  // namespace

PrunedFeatureSet prune(const ChannelImportance& importance, double coverage,
                       const std::vector<ChannelMeta>& channel_meta) {
  if (!(coverage > 0.0 && coverage <= 1.0)) throw ArgumentError("coverage must lie in (0, 1]");
  const std::size_t c = importance.global.size();
  if (channel_meta.size() != c) {
    throw ShapeError("importance has " + std::to_string(c) + " channels, metadata " +
                     std::to_string(channel_meta.size()));
  }
  // Entry c (one past the channels) is the static group.
  const std::size_t entries = c + (importance.has_static ? 1 : 0);
  auto magnitude = [&](std::size_t i) {
    return std::abs(i < c ? importance.global[i] : importance.global_static);
  };
  auto prunable = [&](std::size_t i) { return i >= c || channel_meta[i].prunable; };

  double total = 0.0;
  for (std::size_t i = 0; i < entries; ++i) total += magnitude(i);
  if (!(total > 0.0)) throw PruningError("all channel importances are zero; nothing to rank");

  std::vector<std::size_t> order(entries);
  for (std::size_t i = 0; i < entries; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return magnitude(a) > magnitude(b); });

  PrunedFeatureSet out;
  out.coverage_requested = coverage;
  out.has_static = importance.has_static;
  std::set<std::size_t> kept;
  double cumulative = 0.0;
  for (std::size_t i : order) {
    if (cumulative / total >= coverage - kCoverageSlack) break;
    cumulative += magnitude(i);
    kept.insert(i);
    if (prunable(i)) out.tau = magnitude(i);
  }
  for (std::size_t i = 0; i < c; ++i) {
    if (!channel_meta[i].prunable) {
      out.exempt_channels.push_back(i);
      kept.insert(i);
    }
  }
  double achieved = 0.0;
  for (std::size_t i : kept) achieved += magnitude(i);
  out.coverage = achieved / total;
  for (std::size_t i : kept) {
    if (i < c) {
      out.kept_channels.push_back(i);
    } else {
      out.static_kept = true;
    }
  }
  for (std::size_t i : order) {
    if (i < c) out.ranking.push_back(i);
  }
  return out;
}

nn::ModelSpec derive_pruned_spec(const nn::ModelSpec& original, const PrunedFeatureSet& pruned) {
  original.validate();
  if (pruned.kept_channels.empty()) throw ArgumentError("pruned feature set keeps no channels");
  const std::size_t c = original.channels();
  std::set<std::size_t> kept;
  for (std::size_t i : pruned.kept_channels) {
    if (i >= c) {
      throw ArgumentError("kept channel " + std::to_string(i) + " is not an input of the original model");
    }
    kept.insert(i);
  }
  const bool static_dropped = original.use_static_branch && pruned.has_static && !pruned.static_kept;
  const bool removed_any = kept.size() < c || static_dropped;
  nn::ModelSpec out = original;
  if (!removed_any) {
    out.provenance = "unchanged by pruning (" + std::to_string(c) + " channels kept)";
    return out;
  }

  auto select = [&](const std::vector<std::size_t>& positions) {
    out.input_channels.clear();
    out.input_meta.clear();
    for (std::size_t p : positions) {
      out.input_channels.push_back(original.input_channels[p]);
      out.input_meta.push_back(original.input_meta[p]);
    }
  };
  std::vector<std::size_t> filtered(kept.begin(), kept.end());
  std::string note;

  switch (original.variant) {
    case nn::Variant::GenTrap: {
      const nn::InputLayout layout = nn::input_layout(original);
      std::set<std::size_t> ws_positions;
      for (const auto& g : layout.ws) ws_positions.insert(g.begin(), g.end());
      std::set<std::size_t> keep_ws;
      for (std::size_t j = 0; j < layout.ws_bases(); ++j) {
        bool all = true;
        for (const auto& g : layout.ws) all = all && kept.count(g[j]) > 0;
        if (all) {
          for (const auto& g : layout.ws) keep_ws.insert(g[j]);
        }
      }
      std::vector<std::size_t> positions;
      for (std::size_t p = 0; p < c; ++p) {
        if (ws_positions.count(p) ? keep_ws.count(p) > 0 : kept.count(p) > 0) positions.push_back(p);
      }
      if (keep_ws.empty()) {
        out.variant = nn::Variant::LTrans;
        out.use_static_branch = false;
        out.static_dim = 0;
        out.k = 1;
        out.d_model = std::max(out.n_heads, (original.d_model / 2 / out.n_heads) * out.n_heads);
        note = "all WS channels pruned, GNN and static branch removed";
      } else {
        out.use_static_branch = original.use_static_branch && !static_dropped;
        if (!out.use_static_branch) out.static_dim = 0;
      }
      if (positions.empty()) throw ArgumentError("no model inputs survive pruning");
      select(positions);
      break;
    }
    case nn::Variant::LstmPlus: {
      select(filtered);
      if (2 * (c - kept.size()) >= c || static_dropped) {
        out.variant = nn::Variant::LLstmPlus;
        const auto& sizes = original.lstm_layer_sizes;
        out.lstm_layer_sizes = sizes.size() >= 2 ? std::vector<int>(sizes.end() - 2, sizes.end())
                                                 : std::vector<int>{sizes.back(), sizes.back()};
        out.use_static_branch = false;
        out.static_dim = 0;
        note = static_dropped && 2 * (c - kept.size()) < c ? "static features pruned, reduced to two LSTM layers"
                                                           : "at least half the channels pruned, reduced to two LSTM layers";
      } else {
        out.use_static_branch = original.use_static_branch && !static_dropped;
        if (!out.use_static_branch) out.static_dim = 0;
      }
      break;
    }
    case nn::Variant::LTrans:
    case nn::Variant::LLstmPlus:
      select(filtered);
      break;
  }

  out.provenance = "derived from " + to_string(original.variant) + ": kept " +
                   std::to_string(out.channels()) + " of " + std::to_string(c) + " channels";
  if (static_dropped) out.provenance += ", static features dropped";
  if (!note.empty()) out.provenance += "; " + note;
  out.validate();
  return out;
}

void write_importance(const std::filesystem::path& path, const ChannelImportance& importance,
                      const PrunedFeatureSet& pruned, const std::vector<std::string>& channel_names) {
  if (channel_names.size() != importance.global.size()) {
    throw ShapeError("channel names do not match importance vector");
  }
  double total = importance.has_static ? std::abs(importance.global_static) : 0.0;
  for (double v : importance.global) total += std::abs(v);
  const std::set<std::size_t> kept(pruned.kept_channels.begin(), pruned.kept_channels.end());
  const std::set<std::size_t> exempt(pruned.exempt_channels.begin(), pruned.exempt_channels.end());
  auto channels = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < channel_names.size(); ++c) {
    channels.push_back({{"name", channel_names[c]},
                        {"psi", importance.global[c]},
                        {"abs_share", total > 0.0 ? std::abs(importance.global[c]) / total : 0.0},
                        {"kept", kept.count(c) > 0},
                        {"exempt", exempt.count(c) > 0}});
  }
  if (importance.has_static) {
    channels.push_back({{"name", "static"},
                        {"psi", importance.global_static},
                        {"abs_share", total > 0.0 ? std::abs(importance.global_static) / total : 0.0},
                        {"kept", pruned.static_kept},
                        {"exempt", false}});
  }
  nlohmann::ordered_json j;
  j["alpha"] = importance.alpha;
  j["n_instances"] = importance.n_instances;
  j["channels"] = channels;
  write_json(path, j);
}

void write_pruning_report(const std::filesystem::path& path, const PrunedFeatureSet& pruned,
                          const std::vector<std::string>& channel_names, const nn::ModelSpec& original,
                          const nn::ModelSpec& derived) {
  auto names = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    for (std::size_t i : idx) out.push_back(channel_names.at(i));
    return out;
  };
  nlohmann::ordered_json j;
  j["coverage_requested"] = pruned.coverage_requested;
  j["coverage_achieved"] = pruned.coverage;
  j["tau"] = pruned.tau;
  j["kept_channels"] = names(pruned.kept_channels);
  j["kept_indices"] = pruned.kept_channels;
  j["exempt_channels"] = names(pruned.exempt_channels);
  j["ranking"] = names(pruned.ranking);
  j["ranking_indices"] = pruned.ranking;
  if (pruned.has_static) j["static_kept"] = pruned.static_kept;
  j["original_param_count"] = nn::param_count(original);
  j["derived_param_count"] = nn::param_count(derived);
  j["derived_spec"] = nn::spec_to_json(derived);
  write_json(path, j);
}

}  // namespace prometheus::attribution
