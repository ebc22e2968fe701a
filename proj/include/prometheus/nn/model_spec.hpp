#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "prometheus/core/dataset.hpp"
#include "prometheus/nn/autograd.hpp"

namespace prometheus::nn {

enum class Variant { GenTrap, LTrans, LstmPlus, LLstmPlus };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct ModelSpec {
  Variant variant = Variant::LTrans;
  int d_model = 8;
  int n_heads = 2;
  int n_encoder_blocks = 1;
  std::vector<int> lstm_layer_sizes;
  int k = 3;
  bool use_static_branch = false;
  // Dataset channel indices the model consumes, in input order, and the
  // metadata of those channels (GENTRAP needs kinds and neighbour ranks).
  std::vector<int> input_channels;
  std::vector<ChannelMeta> input_meta;
  int steps = 4;
  int static_dim = 0;
  Activation activation = Activation::Gelu;
  int gnn_dim = 8;        // GENTRAP: width of the per-station projection W
  int static_hidden = 8;  // static dense branch width
  int head_hidden = 16;   // hidden width of the classification head
  std::string provenance;

  std::size_t channels() const { return input_channels.size(); }
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Channel layout GENTRAP and the LSTM models rely on: RL channels, WS
/// channels grouped per neighbour (same base names in the same order for
/// every neighbour), derived WS channels and the positional channel.
struct InputLayout {
  std::vector<std::size_t> rl;
  std::vector<std::vector<std::size_t>> ws;  // [neighbour][base]
  std::vector<std::size_t> derived;
  std::vector<std::size_t> positional;

  std::size_t ws_bases() const { return ws.empty() ? 0 : ws.front().size(); }
};

InputLayout input_layout(const ModelSpec& spec);

/// Spec over `channels` of `data` with the desk-scale defaults of `variant`.
ModelSpec default_spec(Variant variant, const TimeSeriesDataset& data,
                       const std::vector<int>& channels);

nlohmann::ordered_json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

}  // namespace prometheus::nn
