#include "prometheus/nn/model_spec.hpp"

#include <algorithm>
#include <map>

#include "prometheus/core/error.hpp"

namespace prometheus::nn {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::GenTrap: return "GENTRAP";
    case Variant::LTrans: return "LTRANS";
    case Variant::LstmPlus: return "LSTM_PLUS";
    case Variant::LLstmPlus: return "LLSTM_PLUS";
  }
  return "LTRANS";
}

Variant variant_from_string(const std::string& s) {
  if (s == "GENTRAP") return Variant::GenTrap;
  if (s == "LTRANS") return Variant::LTrans;
  if (s == "LSTM_PLUS") return Variant::LstmPlus;
  if (s == "LLSTM_PLUS") return Variant::LLstmPlus;
  throw ArgumentError("unknown model variant '" + s + "'");
}

void ModelSpec::validate() const {
  if (input_channels.empty()) throw ArgumentError("model has no input channels");
  if (input_meta.size() != input_channels.size()) {
    throw ShapeError("input_meta length differs from input_channels");
  }
  if (steps < 1) throw ArgumentError("T must be positive");
  if (static_dim < 0) throw ArgumentError("static_dim must be non-negative");
  if (use_static_branch && static_dim == 0) {
    throw ArgumentError("static branch enabled without static features");
  }
  const bool transformer = variant == Variant::GenTrap || variant == Variant::LTrans;
  if (transformer) {
    if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0) {
      throw ArgumentError("d_model (" + std::to_string(d_model) + ") must be divisible by n_heads (" +
                          std::to_string(n_heads) + ")");
    }
    if (n_encoder_blocks < 1) throw ArgumentError("need at least one encoder block");
  } else {
    if (lstm_layer_sizes.empty()) throw ArgumentError("LSTM model needs layer sizes");
    for (int h : lstm_layer_sizes) {
      if (h < 1) throw ArgumentError("LSTM layer sizes must be positive");
    }
  }
  if (variant == Variant::LLstmPlus && lstm_layer_sizes.size() != 2) {
    throw ArgumentError("LLSTM_PLUS has exactly two LSTM layers");
  }
  if ((variant == Variant::LTrans || variant == Variant::LLstmPlus) && use_static_branch) {
    throw ArgumentError(to_string(variant) + " has no static branch");
  }
  if (variant == Variant::GenTrap) {
    if (gnn_dim < 1) throw ArgumentError("gnn_dim must be positive");
    const InputLayout layout = input_layout(*this);
    if (!layout.ws.empty() && static_cast<int>(layout.ws.size()) != k) {
      throw ShapeError("GENTRAP expects WS channels for " + std::to_string(k) +
                       " neighbours, found " + std::to_string(layout.ws.size()));
    }
  }
  if (use_static_branch && static_hidden < 1) throw ArgumentError("static_hidden must be positive");
  if (head_hidden < 1) throw ArgumentError("head_hidden must be positive");
}

InputLayout input_layout(const ModelSpec& spec) {
  InputLayout out;
  std::map<int, std::vector<std::size_t>> by_neighbor;
  for (std::size_t i = 0; i < spec.input_meta.size(); ++i) {
    const ChannelMeta& m = spec.input_meta[i];
    switch (m.kind) {
      case ChannelKind::RlKpi: out.rl.push_back(i); break;
      case ChannelKind::Ws: by_neighbor[m.neighbor].push_back(i); break;
      case ChannelKind::DerivedWs: out.derived.push_back(i); break;
      case ChannelKind::Positional: out.positional.push_back(i); break;
    }
  }
  for (auto& [nb, idx] : by_neighbor) out.ws.push_back(std::move(idx));
  for (std::size_t g = 1; g < out.ws.size(); ++g) {
    bool same = out.ws[g].size() == out.ws[0].size();
    for (std::size_t j = 0; same && j < out.ws[g].size(); ++j) {
      same = spec.input_meta[out.ws[g][j]].base_name == spec.input_meta[out.ws[0][j]].base_name;
    }
    if (!same) throw ShapeError("WS channels differ between neighbours");
  }
  return out;
}

ModelSpec default_spec(Variant variant, const TimeSeriesDataset& data,
                       const std::vector<int>& channels) {
  ModelSpec s;
  s.variant = variant;
  s.input_channels = channels;
  for (int c : channels) {
    if (c < 0 || static_cast<std::size_t>(c) >= data.channels) {
      throw ArgumentError("channel index " + std::to_string(c) + " out of range");
    }
    s.input_meta.push_back(data.channel_meta[static_cast<std::size_t>(c)]);
  }
  s.steps = static_cast<int>(data.steps);
  const int sdim = static_cast<int>(data.static_dim());
  switch (variant) {
    case Variant::GenTrap: {
      s.d_model = 16;
      s.use_static_branch = sdim > 0;
      s.static_dim = s.use_static_branch ? sdim : 0;
      const InputLayout layout = input_layout(s);
      s.k = layout.ws.empty() ? 1 : static_cast<int>(layout.ws.size());
      break;
    }
    case Variant::LTrans:
      s.d_model = 8;
      s.k = 1;
      break;
    case Variant::LstmPlus:
      s.lstm_layer_sizes = {128, 64, 32, 16};
      s.use_static_branch = sdim > 0;
      s.static_dim = s.use_static_branch ? sdim : 0;
      break;
    case Variant::LLstmPlus:
      s.lstm_layer_sizes = {32, 16};
      break;
  }
  s.validate();
  return s;
}

nlohmann::ordered_json spec_to_json(const ModelSpec& s) {
  nlohmann::ordered_json j;
  j["variant"] = to_string(s.variant);
  j["d_model"] = s.d_model;
  j["n_heads"] = s.n_heads;
  j["n_encoder_blocks"] = s.n_encoder_blocks;
  j["lstm_layer_sizes"] = s.lstm_layer_sizes;
  j["k"] = s.k;
  j["use_static_branch"] = s.use_static_branch;
  j["input_channels"] = s.input_channels;
  auto meta = nlohmann::ordered_json::array();
  for (const auto& m : s.input_meta) {
    meta.push_back({{"name", m.name},
                    {"kind", to_string(m.kind)},
                    {"unit", m.unit},
                    {"prunable", m.prunable},
                    {"neighbor", m.neighbor},
                    {"base_name", m.base_name}});
  }
  j["input_meta"] = meta;
  j["T"] = s.steps;
  j["static_dim"] = s.static_dim;
  j["activation"] = to_string(s.activation);
  j["gnn_dim"] = s.gnn_dim;
  j["static_hidden"] = s.static_hidden;
  j["head_hidden"] = s.head_hidden;
  j["provenance"] = s.provenance;
  return j;
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  try {
    s.variant = variant_from_string(j.at("variant").get<std::string>());
    s.d_model = j.at("d_model").get<int>();
    s.n_heads = j.at("n_heads").get<int>();
    s.n_encoder_blocks = j.at("n_encoder_blocks").get<int>();
    s.lstm_layer_sizes = j.at("lstm_layer_sizes").get<std::vector<int>>();
    s.k = j.at("k").get<int>();
    s.use_static_branch = j.at("use_static_branch").get<bool>();
    s.input_channels = j.at("input_channels").get<std::vector<int>>();
    for (const auto& m : j.at("input_meta")) {
      ChannelMeta cm;
      cm.name = m.at("name").get<std::string>();
      cm.kind = channel_kind_from_string(m.at("kind").get<std::string>());
      cm.unit = m.at("unit").get<std::string>();
      cm.prunable = m.at("prunable").get<bool>();
      cm.neighbor = m.at("neighbor").get<int>();
      cm.base_name = m.at("base_name").get<std::string>();
      s.input_meta.push_back(std::move(cm));
    }
    s.steps = j.at("T").get<int>();
    s.static_dim = j.at("static_dim").get<int>();
    s.activation = activation_from_string(j.at("activation").get<std::string>());
    s.gnn_dim = j.at("gnn_dim").get<int>();
    s.static_hidden = j.at("static_hidden").get<int>();
    s.head_hidden = j.at("head_hidden").get<int>();
    s.provenance = j.value("provenance", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed model spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace prometheus::nn
