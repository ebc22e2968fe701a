#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "prometheus/core/matrix.hpp"

namespace prometheus::nn {

enum class Activation { Identity, Relu, Tanh, Sigmoid, Gelu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);
double activate(Activation a, double x);

struct Parameter {
  std::string name;
  Matrix value;
};

/// Ordered, named weight tensors. Slot indices are stable for the lifetime of
/// the set and are what the tape refers to.
class ParameterSet {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  std::size_t element_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
};

struct Var {
  int id = -1;
};

/// Reverse-mode tape over matrix-valued nodes. A Graph is built per forward
/// pass and thrown away; parameters are read through pointers, so several
/// graphs may read one ParameterSet concurrently as long as nobody writes it.
class Graph {
 public:
  explicit Graph(bool track_gradients = true) : track_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix m);
  Var parameter(const ParameterSet& set, std::size_t slot);

  const Matrix& value(Var v) const;
  const Matrix& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }

  Var matmul(Var a, Var b);
  Var add_bias(Var a, Var bias);  // bias is 1 x cols, broadcast over rows
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var activation(Var a, Activation act);
  Var sigmoid(Var a) { return activation(a, Activation::Sigmoid); }
  Var tanh(Var a) { return activation(a, Activation::Tanh); }
  Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5);
  Var concat_cols(std::span<const Var> parts);
  Var slice_cols(Var a, std::size_t begin, std::size_t count);
  // q, k, v are (groups*seq) x d; attention is restricted to each group of
  // `seq` consecutive rows and split into `heads` column blocks.
  Var self_attention(Var q, Var k, Var v, std::size_t groups, std::size_t seq, std::size_t heads);
  // (groups*seq) x d -> groups x d, averaging each group.
  Var mean_rows(Var a, std::size_t groups, std::size_t seq);
  Var max_elementwise(std::span<const Var> parts);
  // Mean over rows of weight_i * cross-entropy(softmax(logits_i), label_i).
  Var weighted_cross_entropy(Var logits, std::span<const int> labels, std::span<const double> weights);

  void backward(Var scalar);
  // grads[slot] += dLoss/dParameter for every parameter node on the tape.
  void accumulate_parameter_grads(std::vector<Matrix>& grads) const;

  // Row-stochastic attention matrices recorded by self_attention, one per
  // call: (groups*heads*seq) x seq.
  std::vector<Matrix> attention_maps() const;

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    const Matrix* external = nullptr;
    int slot = -1;
    bool requires_grad = false;
    std::vector<int> inputs;
    std::function<void()> back;
    Matrix aux;
    bool is_attention = false;
  };

  int push(Node n);
  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }
  Matrix& grad_buffer(int id);
  bool needs(Var v) const { return track_ && node(v).requires_grad; }

  bool track_;
  std::vector<Node> nodes_;
};

}  // namespace prometheus::nn
