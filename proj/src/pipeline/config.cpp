#include "prometheus/pipeline/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "prometheus/core/error.hpp"

namespace prometheus::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Walks the document, filling a PipelineConfig and collecting violations
// instead of stopping at the first one.
class Reader {
 public:
  Reader(std::vector<std::string>& violations) : v_(violations) {}

  void fail(const std::string& msg) { v_.push_back(msg); }

  const json* object(const json& parent, const std::string& key, const std::string& path, bool required) {
    if (!parent.contains(key)) {
      if (required) fail("missing required section " + path);
      return nullptr;
    }
    const json& j = parent.at(key);
    if (!j.is_object()) {
      fail(path + " must be an object");
      return nullptr;
    }
    return &j;
  }

  void known_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, _] : obj.items()) {
      if (!allowed.count(k)) fail("unknown field " + (path.empty() ? k : path + "." + k));
    }
  }

  template <class T>
  void field(const json& obj, const std::string& key, const std::string& path, T& out) {
    if (!obj.contains(key)) return;
    read(obj.at(key), path, out);
  }

  void seed(const json& obj, const std::string& key, const std::string& path, std::uint64_t& out) {
    if (!obj.contains(key)) {
      fail("missing required seed field " + path);
      return;
    }
    read(obj.at(key), path, out);
  }

  void read(const json& j, const std::string& path, std::uint64_t& out) {
    if (j.is_number_unsigned()) out = j.get<std::uint64_t>();
    else fail(path + " must be a non-negative integer");
  }
  void read(const json& j, const std::string& path, int& out) {
    if (j.is_number_integer()) out = j.get<int>();
    else fail(path + " must be an integer");
  }
  void read(const json& j, const std::string& path, double& out) {
    if (j.is_number()) out = j.get<double>();
    else fail(path + " must be a number");
  }
  void read(const json& j, const std::string& path, bool& out) {
    if (j.is_boolean()) out = j.get<bool>();
    else fail(path + " must be true or false");
  }
  void read(const json& j, const std::string& path, std::string& out) {
    if (j.is_string()) out = j.get<std::string>();
    else fail(path + " must be a string");
  }
  template <class T>
  void read(const json& j, const std::string& path, std::vector<T>& out) {
    if (!j.is_array()) {
      fail(path + " must be an array");
      return;
    }
    out.clear();
    for (std::size_t i = 0; i < j.size(); ++i) {
      T x{};
      read(j[i], path + "[" + std::to_string(i) + "]", x);
      out.push_back(x);
    }
  }
  template <class T>
  void read(const json& j, const std::string& path, std::optional<T>& out) {
    T x{};
    const std::size_t before = v_.size();
    read(j, path, x);
    if (v_.size() == before) out = x;
  }

  // Enum fields parsed through their from_string functions.
  template <class E, class F>
  void enum_field(const json& obj, const std::string& key, const std::string& path, E& out, F parse) {
    if (!obj.contains(key)) return;
    std::string s;
    const std::size_t before = v_.size();
    read(obj.at(key), path, s);
    if (v_.size() != before) return;
    try {
      out = parse(s);
    } catch (const Error& e) {
      fail(path + ": " + e.what());
    }
  }

 private:
  std::vector<std::string>& v_;
};

void read_data(Reader& r, const json& root, const fs::path& base, DataConfig& d) {
  const json* data = r.object(root, "data", "data", true);
  if (!data) return;
  r.known_keys(*data, "data", {"synth", "paths", "schema", "derived_ws"});
  r.field(*data, "derived_ws", "data.derived_ws", d.derived_ws);
  const bool has_synth = data->contains("synth");
  const bool has_paths = data->contains("paths");
  if (has_synth == has_paths) {
    r.fail("data must contain exactly one of data.synth and data.paths");
    return;
  }
  d.synthetic = has_synth;
  if (has_synth) {
    const json* s = r.object(*data, "synth", "data.synth", true);
    if (!s) return;
    r.known_keys(*s, "data.synth",
                 {"seed", "n_links", "n_stations", "n_days", "window_days", "target_failure_rate",
                  "failure_rule", "geometry_extent_km", "k", "distractor_ratio", "coupled_ws_channel",
                  "start_date"});
    synth::SynthConfig& c = d.synth;
    r.seed(*s, "seed", "data.synth.seed", c.seed);
    r.field(*s, "n_links", "data.synth.n_links", c.n_links);
    r.field(*s, "n_stations", "data.synth.n_stations", c.n_stations);
    r.field(*s, "n_days", "data.synth.n_days", c.n_days);
    r.field(*s, "window_days", "data.synth.window_days", c.window_days);
    r.field(*s, "target_failure_rate", "data.synth.target_failure_rate", c.target_failure_rate);
    r.field(*s, "geometry_extent_km", "data.synth.geometry_extent_km", c.geometry_extent_km);
    r.field(*s, "k", "data.synth.k", c.k);
    r.field(*s, "distractor_ratio", "data.synth.distractor_ratio", c.distractor_ratio);
    r.field(*s, "coupled_ws_channel", "data.synth.coupled_ws_channel", c.coupled_ws_channel);
    r.field(*s, "start_date", "data.synth.start_date", c.start_date);
    if (const json* f = r.object(*s, "failure_rule", "data.synth.failure_rule", false)) {
      r.known_keys(*f, "data.synth.failure_rule",
                   {"trigger_channels", "thresholds", "threshold_percentile", "combination", "noise_flip_prob"});
      synth::FailureRule& fr = c.failure_rule;
      r.field(*f, "trigger_channels", "data.synth.failure_rule.trigger_channels", fr.trigger_channels);
      r.field(*f, "thresholds", "data.synth.failure_rule.thresholds", fr.thresholds);
      r.field(*f, "threshold_percentile", "data.synth.failure_rule.threshold_percentile",
              fr.threshold_percentile);
      r.field(*f, "noise_flip_prob", "data.synth.failure_rule.noise_flip_prob", fr.noise_flip_prob);
      r.enum_field(*f, "combination", "data.synth.failure_rule.combination", fr.combination,
                   synth::combination_from_string);
    }
    try {
      c.validate();
    } catch (const Error& e) {
      r.fail(std::string("data.synth: ") + e.what());
    }
    d.schema.neighbors = c.k;
    d.schema.window_days = c.window_days;
    return;
  }
  const json* p = r.object(*data, "paths", "data.paths", true);
  if (!p) return;
  r.known_keys(*p, "data.paths", {"rl_kpi", "ws", "static", "distances"});
  auto path_field = [&](const char* key, fs::path& out) {
    const std::string path = std::string("data.paths.") + key;
    if (!p->contains(key)) {
      r.fail("missing required field " + path);
      return;
    }
    std::string s;
    r.read(p->at(key), path, s);
    if (s.empty()) return;
    out = fs::path(s).is_absolute() ? fs::path(s) : base / s;
    if (!fs::exists(out)) r.fail(path + ": file not found: " + out.string());
  };
  path_field("rl_kpi", d.paths.rl_kpi);
  path_field("ws", d.paths.ws);
  path_field("static", d.paths.statics);
  path_field("distances", d.paths.distances);
  if (const json* s = r.object(*data, "schema", "data.schema", false)) {
    r.known_keys(*s, "data.schema",
                 {"rl_channels", "ws_channels", "summed_ws_channels", "static_columns", "label_column",
                  "neighbors", "window_days"});
    SchemaConfig& sc = d.schema;
    r.field(*s, "rl_channels", "data.schema.rl_channels", sc.rl_channels);
    r.field(*s, "ws_channels", "data.schema.ws_channels", sc.ws_channels);
    r.field(*s, "summed_ws_channels", "data.schema.summed_ws_channels", sc.summed_ws_channels);
    r.field(*s, "static_columns", "data.schema.static_columns", sc.static_columns);
    r.field(*s, "label_column", "data.schema.label_column", sc.label_column);
    r.field(*s, "neighbors", "data.schema.neighbors", sc.neighbors);
    r.field(*s, "window_days", "data.schema.window_days", sc.window_days);
  }
  try {
    d.schema.validate();
  } catch (const Error& e) {
    r.fail(std::string("data.schema: ") + e.what());
  }
}

void read_model(Reader& r, const json& root, ModelConfig& m) {
  const json* j = r.object(root, "model", "model", true);
  if (!j) return;
  r.known_keys(*j, "model",
               {"variant", "inputs", "d_model", "n_heads", "n_encoder_blocks", "k", "gnn_dim", "static_hidden",
                "head_hidden", "lstm_layer_sizes", "use_static_branch", "activation"});
  if (!j->contains("variant")) r.fail("missing required field model.variant");
  r.enum_field(*j, "variant", "model.variant", m.variant, nn::variant_from_string);
  r.field(*j, "inputs", "model.inputs", m.inputs);
  r.field(*j, "d_model", "model.d_model", m.d_model);
  r.field(*j, "n_heads", "model.n_heads", m.n_heads);
  r.field(*j, "n_encoder_blocks", "model.n_encoder_blocks", m.n_encoder_blocks);
  r.field(*j, "k", "model.k", m.k);
  r.field(*j, "gnn_dim", "model.gnn_dim", m.gnn_dim);
  r.field(*j, "static_hidden", "model.static_hidden", m.static_hidden);
  r.field(*j, "head_hidden", "model.head_hidden", m.head_hidden);
  r.field(*j, "lstm_layer_sizes", "model.lstm_layer_sizes", m.lstm_layer_sizes);
  r.field(*j, "use_static_branch", "model.use_static_branch", m.use_static_branch);
  if (j->contains("activation")) {
    nn::Activation a{};
    r.enum_field(*j, "activation", "model.activation", a, nn::activation_from_string);
    m.activation = a;
  }
  auto positive = [&](const std::optional<int>& x, const char* name) {
    if (x && *x < 1) r.fail(std::string("model.") + name + " must be >= 1");
  };
  positive(m.d_model, "d_model");
  positive(m.n_heads, "n_heads");
  positive(m.n_encoder_blocks, "n_encoder_blocks");
  positive(m.k, "k");
  positive(m.gnn_dim, "gnn_dim");
  positive(m.static_hidden, "static_hidden");
  positive(m.head_hidden, "head_hidden");
  if (m.d_model && m.n_heads && *m.n_heads >= 1 && *m.d_model % *m.n_heads != 0) {
    r.fail("model.d_model must be a multiple of model.n_heads");
  }
  if (m.lstm_layer_sizes) {
    if (m.lstm_layer_sizes->empty()) r.fail("model.lstm_layer_sizes must not be empty");
    for (int s : *m.lstm_layer_sizes) {
      if (s < 1) r.fail("model.lstm_layer_sizes entries must be >= 1");
    }
  }
}

void read_train(Reader& r, const json& root, nn::TrainConfig& t) {
  const json* j = r.object(root, "train", "train", true);
  if (!j) {
    r.fail("missing required seed field train.seed");
    return;
  }
  r.known_keys(*j, "train",
               {"batch_size", "learning_rate", "epochs", "class_weighting", "seed", "early_stop_patience",
                "weight_decay"});
  r.seed(*j, "seed", "train.seed", t.seed);
  r.field(*j, "batch_size", "train.batch_size", t.batch_size);
  r.field(*j, "learning_rate", "train.learning_rate", t.learning_rate);
  r.field(*j, "epochs", "train.epochs", t.epochs);
  r.field(*j, "early_stop_patience", "train.early_stop_patience", t.early_stop_patience);
  r.field(*j, "weight_decay", "train.weight_decay", t.weight_decay);
  r.enum_field(*j, "class_weighting", "train.class_weighting", t.class_weighting,
               nn::class_weighting_from_string);
  if (t.batch_size < 1) r.fail("train.batch_size must be >= 1");
  if (t.epochs < 1) r.fail("train.epochs must be >= 1");
  if (!(t.learning_rate > 0.0)) r.fail("train.learning_rate must be > 0");
  if (t.early_stop_patience < 0) r.fail("train.early_stop_patience must be >= 0");
  if (t.weight_decay < 0.0) r.fail("train.weight_decay must be >= 0");
}

void read_explain(Reader& r, const json& root, ExplainConfig& e) {
  const json* j = r.object(root, "explain", "explain", true);
  if (!j) {
    r.fail("missing required seed field explain.seed");
    return;
  }
  r.known_keys(*j, "explain", {"permutations", "seed", "normalize", "background_size", "max_instances"});
  r.seed(*j, "seed", "explain.seed", e.seed);
  r.field(*j, "permutations", "explain.permutations", e.permutations);
  r.field(*j, "normalize", "explain.normalize", e.normalize);
  r.field(*j, "background_size", "explain.background_size", e.background_size);
  r.field(*j, "max_instances", "explain.max_instances", e.max_instances);
  if (e.permutations < 1) r.fail("explain.permutations must be >= 1");
  if (e.background_size < 1) r.fail("explain.background_size must be >= 1");
  if (e.max_instances < 1) r.fail("explain.max_instances must be >= 1");
}

void read_prune(Reader& r, const json& root, PruneConfig& p) {
  const json* j = r.object(root, "prune", "prune", false);
  if (!j) return;
  r.known_keys(*j, "prune", {"coverage", "alpha"});
  r.field(*j, "coverage", "prune.coverage", p.coverage);
  r.field(*j, "alpha", "prune.alpha", p.alpha);
  if (!(p.coverage > 0.0 && p.coverage <= 1.0)) r.fail("prune.coverage ∈ (0,1]");
  if (p.alpha != 0 && p.alpha != 1) r.fail("prune.alpha ∈ {0,1}");
}

void read_eval(Reader& r, const json& root, EvalConfig& e) {
  const json* j = r.object(root, "eval", "eval", true);
  if (!j) {
    r.fail("missing required seed field eval.random_seed");
    return;
  }
  r.known_keys(*j, "eval", {"random_seed", "random_rankings", "threshold"});
  r.seed(*j, "random_seed", "eval.random_seed", e.random_seed);
  r.field(*j, "random_rankings", "eval.random_rankings", e.random_rankings);
  r.field(*j, "threshold", "eval.threshold", e.threshold);
  if (e.random_rankings < 1) r.fail("eval.random_rankings must be >= 1");
  if (!(e.threshold > 0.0 && e.threshold < 1.0)) r.fail("eval.threshold ∈ (0,1)");
}

std::vector<std::string> parse(const json& doc, const fs::path& base, PipelineConfig& cfg) {
  std::vector<std::string> violations;
  Reader r(violations);
  if (!doc.is_object()) {
    r.fail("config must be a JSON object");
    return violations;
  }
  r.known_keys(doc, "", {"data", "model", "train", "explain", "prune", "eval", "out_dir"});
  read_data(r, doc, base, cfg.data);
  read_model(r, doc, cfg.model);
  read_train(r, doc, cfg.train);
  read_explain(r, doc, cfg.explain);
  read_prune(r, doc, cfg.prune);
  read_eval(r, doc, cfg.eval);
  std::string out = "runs";
  r.field(doc, "out_dir", "out_dir", out);
  if (out.empty()) r.fail("out_dir must not be empty");
  cfg.out_dir = out;
  cfg.source = doc;
  return violations;
}

json read_document(const fs::path& path, std::string* syntax_error) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return json::parse(ss.str(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    *syntax_error = std::string("config is not valid JSON: ") + e.what();
    return json();
  }
}

}  // namespace

void PipelineConfig::override_seeds(std::uint64_t seed) {
  data.synth.seed = seed;
  train.seed = seed;
  explain.seed = seed;
  eval.random_seed = seed;
  if (data.synthetic) source["data"]["synth"]["seed"] = seed;
  source["train"]["seed"] = seed;
  source["explain"]["seed"] = seed;
  source["eval"]["random_seed"] = seed;
}

nlohmann::ordered_json PipelineConfig::seeds() const {
  nlohmann::ordered_json j;
  if (data.synthetic) j["data.synth.seed"] = data.synth.seed;
  j["train.seed"] = train.seed;
  j["explain.seed"] = explain.seed;
  j["eval.random_seed"] = eval.random_seed;
  return j;
}

std::vector<std::string> validate_config(const json& doc, const fs::path& base_dir) {
  PipelineConfig cfg;
  return parse(doc, base_dir, cfg);
}

std::vector<std::string> validate_config_file(const fs::path& path) {
  std::string syntax;
  const json doc = read_document(path, &syntax);
  if (!syntax.empty()) return {syntax};
  return validate_config(doc, path.parent_path());
}

PipelineConfig load_config(const fs::path& path) {
  std::string syntax;
  const json doc = read_document(path, &syntax);
  if (!syntax.empty()) throw ConfigError(syntax);
  PipelineConfig cfg;
  const auto violations = parse(doc, path.parent_path(), cfg);
  if (!violations.empty()) {
    std::string msg;
    for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v;
    throw ConfigError(msg);
  }
  return cfg;
}

std::vector<int> select_channels(const TimeSeriesDataset& data, const std::vector<std::string>& selectors) {
  std::vector<char> chosen(data.channels, selectors.empty() ? 1 : 0);
  for (const std::string& sel : selectors) {
    bool matched = false;
    std::optional<ChannelKind> kind;
    try {
      kind = channel_kind_from_string(sel);
    } catch (const ArgumentError&) {
    }
    int neighbor = -1;
    if (sel.rfind("WS@k", 0) == 0) {
      try {
        neighbor = std::stoi(sel.substr(4));
      } catch (const std::exception&) {
        throw ArgumentError("bad input selector '" + sel + "'");
      }
    }
    for (std::size_t c = 0; c < data.channels; ++c) {
      const ChannelMeta& m = data.channel_meta[c];
      const bool hit = (kind && m.kind == *kind) ||
                       (neighbor >= 0 && m.kind == ChannelKind::Ws && m.neighbor == neighbor) || m.name == sel;
      if (hit) chosen[c] = 1, matched = true;
    }
    if (!matched) throw ArgumentError("input selector '" + sel + "' matches no channel");
  }
  std::vector<int> out;
  for (std::size_t c = 0; c < data.channels; ++c) {
    if (chosen[c]) out.push_back(static_cast<int>(c));
  }
  return out;
}

nn::ModelSpec build_spec(const ModelConfig& m, const TimeSeriesDataset& data) {
  nn::ModelSpec spec = nn::default_spec(m.variant, data, select_channels(data, m.inputs));
  if (m.d_model) spec.d_model = *m.d_model;
  if (m.n_heads) spec.n_heads = *m.n_heads;
  if (m.n_encoder_blocks) spec.n_encoder_blocks = *m.n_encoder_blocks;
  if (m.k) spec.k = *m.k;
  if (m.gnn_dim) spec.gnn_dim = *m.gnn_dim;
  if (m.static_hidden) spec.static_hidden = *m.static_hidden;
  if (m.head_hidden) spec.head_hidden = *m.head_hidden;
  if (m.lstm_layer_sizes) spec.lstm_layer_sizes = *m.lstm_layer_sizes;
  if (m.use_static_branch) {
    spec.use_static_branch = *m.use_static_branch;
    spec.static_dim = spec.use_static_branch ? static_cast<int>(data.static_dim()) : 0;
  }
  if (m.activation) spec.activation = *m.activation;
  spec.validate();
  return spec;
}

}  // namespace prometheus::pipeline
