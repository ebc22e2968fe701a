#include "prometheus/nn/model.hpp"

#include <cmath>

#include "prometheus/core/error.hpp"
#include "prometheus/core/random.hpp"

namespace prometheus::nn {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void add_dense(ParameterSet& p, const std::string& name, std::size_t in, std::size_t out) {
  p.add(name + ".w", in, out);
  p.add(name + ".b", 1, out);
}

void add_layer_norm(ParameterSet& p, const std::string& name, std::size_t d) {
  p.add(name + ".gamma", 1, d);
  p.add(name + ".beta", 1, d);
}

// Rows b*T+t of the returned matrix hold instance b at step t, restricted to
// `cols` (input-channel positions).
Matrix tokens(const InstanceBatch& batch, const std::vector<std::size_t>& cols) {
  Matrix m(batch.size * batch.steps, cols.size());
  for (std::size_t b = 0; b < batch.size; ++b) {
    for (std::size_t t = 0; t < batch.steps; ++t) {
      for (std::size_t j = 0; j < cols.size(); ++j) {
        m(b * batch.steps + t, j) = batch.at(b, cols[j], t);
      }
    }
  }
  return m;
}

Matrix statics_matrix(const InstanceBatch& batch) {
  return Matrix(batch.size, batch.static_dim, batch.statics);
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

void Network::init(std::uint64_t seed) {
  Rng rng(seed);
  for (Parameter& p : params_) {
    if (ends_with(p.name, ".b") || ends_with(p.name, ".beta")) {
      p.value.fill(0.0);
    } else if (ends_with(p.name, ".gamma")) {
      p.value.fill(1.0);
    } else {
      const double bound = 1.0 / std::sqrt(static_cast<double>(p.value.rows()));
      for (double& x : p.value.data()) {
        x = static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
      }
    }
  }
}

std::vector<double> Network::predict(const InstanceBatch& batch) const {
  std::vector<double> out(batch.size);
  if (batch.size == 0) return out;
  Graph g(false);
  const Matrix& l = g.value(logits(g, batch));
  for (std::size_t b = 0; b < batch.size; ++b) {
    out[b] = 1.0 / (1.0 + std::exp(l(b, 0) - l(b, 1)));
  }
  return out;
}

double Network::predict(const Instance& x) const {
  InstanceBatch batch(x.values.rows(), x.values.cols(), x.statics.size());
  batch.push(x);
  return predict(batch).front();
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const std::size_t d = static_cast<std::size_t>(spec_.d_model);
  const std::size_t hh = static_cast<std::size_t>(spec_.head_hidden);
  const std::size_t sh = static_cast<std::size_t>(spec_.static_hidden);
  const std::size_t sdim = static_cast<std::size_t>(spec_.static_dim);
  const std::size_t c = spec_.channels();
  auto add_encoder = [&] {
    for (int i = 0; i < spec_.n_encoder_blocks; ++i) {
      const std::string pre = "enc" + std::to_string(i);
      for (const char* m : {".q", ".k", ".v", ".o"}) add_dense(params_, pre + m, d, d);
      add_layer_norm(params_, pre + ".ln1", d);
      add_dense(params_, pre + ".ff1", d, 2 * d);
      add_dense(params_, pre + ".ff2", 2 * d, d);
      add_layer_norm(params_, pre + ".ln2", d);
    }
  };

  switch (spec_.variant) {
    case Variant::LTrans:
      add_dense(params_, "embed", c, d);
      add_encoder();
      add_dense(params_, "head", d, hh);
      add_dense(params_, "out", hh, 2);
      break;
    case Variant::GenTrap: {
      layout_ = input_layout(spec_);
      const std::size_t link = layout_.rl.size() + layout_.derived.size();
      const std::size_t wsb = layout_.ws_bases();
      const std::size_t g = static_cast<std::size_t>(spec_.gnn_dim);
      if (wsb > 0) add_dense(params_, "gnn", wsb, g);
      add_dense(params_, "embed", link + (wsb > 0 ? g : 0) + layout_.positional.size(), d);
      add_encoder();
      if (spec_.use_static_branch) add_dense(params_, "static", sdim, sh);
      add_dense(params_, "head", d + (spec_.use_static_branch ? sh : 0), hh);
      add_dense(params_, "out", hh, 2);
      break;
    }
    case Variant::LstmPlus:
    case Variant::LLstmPlus: {
      std::size_t in = c;
      for (std::size_t i = 0; i < spec_.lstm_layer_sizes.size(); ++i) {
        const std::size_t h = static_cast<std::size_t>(spec_.lstm_layer_sizes[i]);
        const std::string pre = "lstm" + std::to_string(i);
        params_.add(pre + ".wx", in, 4 * h);
        params_.add(pre + ".wh", h, 4 * h);
        params_.add(pre + ".b", 1, 4 * h);
        in = h;
      }
      if (spec_.variant == Variant::LstmPlus) {
        if (spec_.use_static_branch) add_dense(params_, "static", sdim, sh);
        add_dense(params_, "head", in + (spec_.use_static_branch ? sh : 0), hh);
        add_dense(params_, "out", hh, 2);
      } else {
        add_dense(params_, "out", in, 2);
      }
      break;
    }
  }
}

std::size_t Model::slot(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw ArgumentError("model has no parameter '" + name + "'");
}

void Model::check_input(const InstanceBatch& batch) const {
  const bool statics_ok = !spec_.use_static_branch ||
                          batch.static_dim == static_cast<std::size_t>(spec_.static_dim);
  if (batch.channels != spec_.channels() || batch.steps != static_cast<std::size_t>(spec_.steps) ||
      !statics_ok) {
    throw ShapeError("model expects C=" + std::to_string(spec_.channels()) +
                     " T=" + std::to_string(spec_.steps) + " S=" + std::to_string(spec_.static_dim) +
                     ", got C=" + std::to_string(batch.channels) + " T=" +
                     std::to_string(batch.steps) + " S=" + std::to_string(batch.static_dim));
  }
}

Var Model::dense(Graph& g, Var x, const std::string& layer) const {
  const Var w = g.parameter(params_, slot(layer + ".w"));
  const Var b = g.parameter(params_, slot(layer + ".b"));
  return g.add_bias(g.matmul(x, w), b);
}

Var Model::encoder(Graph& g, Var x, std::size_t groups) const {
  const std::size_t seq = static_cast<std::size_t>(spec_.steps);
  const std::size_t heads = static_cast<std::size_t>(spec_.n_heads);
  for (int i = 0; i < spec_.n_encoder_blocks; ++i) {
    const std::string pre = "enc" + std::to_string(i);
    const Var q = dense(g, x, pre + ".q");
    const Var k = dense(g, x, pre + ".k");
    const Var v = dense(g, x, pre + ".v");
    const Var att = dense(g, g.self_attention(q, k, v, groups, seq, heads), pre + ".o");
    const Var x1 = g.layer_norm(g.add(x, att), g.parameter(params_, slot(pre + ".ln1.gamma")),
                                g.parameter(params_, slot(pre + ".ln1.beta")));
    const Var ff = dense(g, g.activation(dense(g, x1, pre + ".ff1"), spec_.activation), pre + ".ff2");
    x = g.layer_norm(g.add(x1, ff), g.parameter(params_, slot(pre + ".ln2.gamma")),
                     g.parameter(params_, slot(pre + ".ln2.beta")));
  }
  return x;
}

Var Model::transformer_logits(Graph& g, const InstanceBatch& batch) const {
  const Var x = g.constant(tokens(batch, iota(batch.channels)));
  const Var h = encoder(g, dense(g, x, "embed"), batch.size);
  const Var pooled = g.mean_rows(h, batch.size, batch.steps);
  return dense(g, g.activation(dense(g, pooled, "head"), spec_.activation), "out");
}

Var Model::gentrap_logits(Graph& g, const InstanceBatch& batch) const {
  std::vector<std::size_t> link_cols = layout_.rl;
  link_cols.insert(link_cols.end(), layout_.derived.begin(), layout_.derived.end());
  const Var link = g.constant(tokens(batch, link_cols));
  const Var pos = g.constant(tokens(batch, layout_.positional));
  const std::size_t groups = layout_.ws.empty() ? 1 : layout_.ws.size();

  std::vector<Var> pair_embeddings;
  for (std::size_t k = 0; k < groups; ++k) {
    std::vector<Var> parts{link};
    if (!layout_.ws.empty()) {
      const Var ws = g.constant(tokens(batch, layout_.ws[k]));
      parts.push_back(g.activation(dense(g, ws, "gnn"), spec_.activation));
    }
    parts.push_back(pos);
    const Var tok = g.concat_cols(parts);
    const Var h = encoder(g, dense(g, tok, "embed"), batch.size);
    pair_embeddings.push_back(g.mean_rows(h, batch.size, batch.steps));
  }
  Var z = g.max_elementwise(pair_embeddings);
  if (spec_.use_static_branch) {
    const Var s = g.activation(dense(g, g.constant(statics_matrix(batch)), "static"), spec_.activation);
    const Var parts[] = {z, s};
    z = g.concat_cols(parts);
  }
  return dense(g, g.activation(dense(g, z, "head"), spec_.activation), "out");
}

Var Model::lstm_logits(Graph& g, const InstanceBatch& batch) const {
  const std::size_t steps = batch.steps;
  std::vector<Var> seq;
  for (std::size_t t = 0; t < steps; ++t) {
    Matrix xt(batch.size, batch.channels);
    for (std::size_t b = 0; b < batch.size; ++b) {
      for (std::size_t c = 0; c < batch.channels; ++c) xt(b, c) = batch.at(b, c, t);
    }
    seq.push_back(g.constant(std::move(xt)));
  }
  for (std::size_t layer = 0; layer < spec_.lstm_layer_sizes.size(); ++layer) {
    const std::size_t h = static_cast<std::size_t>(spec_.lstm_layer_sizes[layer]);
    const std::string pre = "lstm" + std::to_string(layer);
    const Var wx = g.parameter(params_, slot(pre + ".wx"));
    const Var wh = g.parameter(params_, slot(pre + ".wh"));
    const Var bias = g.parameter(params_, slot(pre + ".b"));
    Var hs = g.constant(Matrix(batch.size, h));
    Var cs = g.constant(Matrix(batch.size, h));
    std::vector<Var> out;
    for (std::size_t t = 0; t < steps; ++t) {
      const Var gates = g.add_bias(g.add(g.matmul(seq[t], wx), g.matmul(hs, wh)), bias);
      const Var i = g.sigmoid(g.slice_cols(gates, 0, h));
      const Var f = g.sigmoid(g.slice_cols(gates, h, h));
      const Var c = g.tanh(g.slice_cols(gates, 2 * h, h));
      const Var o = g.sigmoid(g.slice_cols(gates, 3 * h, h));
      cs = g.add(g.mul(f, cs), g.mul(i, c));
      hs = g.mul(o, g.tanh(cs));
      out.push_back(hs);
    }
    seq = std::move(out);
  }
  Var z = seq.back();
  if (spec_.variant == Variant::LLstmPlus) return dense(g, z, "out");
  if (spec_.use_static_branch) {
    const Var s = g.activation(dense(g, g.constant(statics_matrix(batch)), "static"), spec_.activation);
    const Var parts[] = {z, s};
    z = g.concat_cols(parts);
  }
  return dense(g, g.activation(dense(g, z, "head"), spec_.activation), "out");
}

Var Model::logits(Graph& g, const InstanceBatch& batch) const {
  check_input(batch);
  switch (spec_.variant) {
    case Variant::LTrans: return transformer_logits(g, batch);
    case Variant::GenTrap: return gentrap_logits(g, batch);
    case Variant::LstmPlus:
    case Variant::LLstmPlus: return lstm_logits(g, batch);
  }
  throw ArgumentError("unknown variant");
}

std::vector<Matrix> Model::attention_maps(const InstanceBatch& batch) const {
  Graph g(false);
  logits(g, batch);
  return g.attention_maps();
}

DenseNetwork::DenseNetwork(std::size_t channels, std::size_t steps, std::size_t static_dim,
                           std::vector<int> hidden, Activation activation)
    : channels_(channels), steps_(steps), static_dim_(static_dim), hidden_(std::move(hidden)),
      activation_(activation) {
  std::size_t in = channels * steps + static_dim;
  for (std::size_t i = 0; i < hidden_.size(); ++i) {
    const std::size_t out = static_cast<std::size_t>(hidden_[i]);
    add_dense(params_, "dense" + std::to_string(i), in, out);
    in = out;
  }
  add_dense(params_, "out", in, 2);
}

Var DenseNetwork::logits(Graph& g, const InstanceBatch& batch) const {
  if (batch.channels != channels_ || batch.steps != steps_ || batch.static_dim != static_dim_) {
    throw ShapeError("dense network input mismatch");
  }
  const std::size_t width = channels_ * steps_;
  Matrix x(batch.size, width + static_dim_);
  for (std::size_t b = 0; b < batch.size; ++b) {
    for (std::size_t j = 0; j < width; ++j) x(b, j) = batch.values[b * width + j];
    for (std::size_t s = 0; s < static_dim_; ++s) x(b, width + s) = batch.statics[b * static_dim_ + s];
  }
  Var h = g.constant(std::move(x));
  std::size_t s = 0;
  for (std::size_t i = 0; i <= hidden_.size(); ++i) {
    h = g.add_bias(g.matmul(h, g.parameter(params_, s)), g.parameter(params_, s + 1));
    s += 2;
    if (i < hidden_.size()) h = g.activation(h, activation_);
  }
  return h;
}

std::size_t dense_params(std::size_t in, std::size_t out) { return in * out + out; }
std::size_t lstm_params(std::size_t in, std::size_t h) { return 4 * (in * h + h * h + h); }
std::size_t attention_params(std::size_t d) { return 4 * d * d + 4 * d; }
std::size_t encoder_block_params(std::size_t d) {
  return attention_params(d) + dense_params(d, 2 * d) + dense_params(2 * d, d) + 2 * (2 * d);
}

std::size_t param_count(const ModelSpec& spec) {
  spec.validate();
  const std::size_t d = static_cast<std::size_t>(spec.d_model);
  const std::size_t hh = static_cast<std::size_t>(spec.head_hidden);
  const std::size_t sh = static_cast<std::size_t>(spec.static_hidden);
  const std::size_t sdim = static_cast<std::size_t>(spec.static_dim);
  const std::size_t blocks = static_cast<std::size_t>(spec.n_encoder_blocks);
  const std::size_t static_branch = spec.use_static_branch ? dense_params(sdim, sh) : 0;
  const std::size_t static_width = spec.use_static_branch ? sh : 0;
  switch (spec.variant) {
    case Variant::LTrans:
      return dense_params(spec.channels(), d) + blocks * encoder_block_params(d) +
             dense_params(d, hh) + dense_params(hh, 2);
    case Variant::GenTrap: {
      const InputLayout l = input_layout(spec);
      const std::size_t g = static_cast<std::size_t>(spec.gnn_dim);
      const std::size_t wsb = l.ws_bases();
      const std::size_t token = l.rl.size() + l.derived.size() + l.positional.size() + (wsb ? g : 0);
      return (wsb ? dense_params(wsb, g) : 0) + dense_params(token, d) +
             blocks * encoder_block_params(d) + static_branch +
             dense_params(d + static_width, hh) + dense_params(hh, 2);
    }
    case Variant::LstmPlus:
    case Variant::LLstmPlus: {
      std::size_t n = 0, in = spec.channels();
      for (int h : spec.lstm_layer_sizes) {
        n += lstm_params(in, static_cast<std::size_t>(h));
        in = static_cast<std::size_t>(h);
      }
      if (spec.variant == Variant::LLstmPlus) return n + dense_params(in, 2);
      return n + static_branch + dense_params(in + static_width, hh) + dense_params(hh, 2);
    }
  }
  return 0;
}

}  // namespace prometheus::nn
