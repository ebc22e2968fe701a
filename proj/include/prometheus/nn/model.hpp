#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "prometheus/core/dataset.hpp"
#include "prometheus/nn/autograd.hpp"
#include "prometheus/nn/model_spec.hpp"

namespace prometheus::nn {

/// Anything that maps a batch to two-class logits through a ParameterSet.
/// Weight matrices are stored in x out and named "<layer>.w"; biases ".b";
/// layer-norm affine terms ".gamma"/".beta".
class Network {
 public:
  virtual ~Network() = default;

  virtual Var logits(Graph& g, const InstanceBatch& batch) const = 0;

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, unit
  /// layer-norm gains. Values are rounded to float32 so checkpoints are exact.
  void init(std::uint64_t seed);

  /// Probability of class 1 per instance.
  std::vector<double> predict(const InstanceBatch& batch) const;
  double predict(const Instance& x) const;

 protected:
  ParameterSet params_;
};

class Model : public Network {
 public:
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  Var logits(Graph& g, const InstanceBatch& batch) const override;

  /// Attention probabilities of every encoder block for `batch` (transformer
  /// variants only): one (groups*heads*T) x T matrix per block call.
  std::vector<Matrix> attention_maps(const InstanceBatch& batch) const;

 private:
  void check_input(const InstanceBatch& batch) const;
  Var dense(Graph& g, Var x, const std::string& layer) const;
  Var encoder(Graph& g, Var x, std::size_t groups) const;
  Var transformer_logits(Graph& g, const InstanceBatch& batch) const;
  Var gentrap_logits(Graph& g, const InstanceBatch& batch) const;
  Var lstm_logits(Graph& g, const InstanceBatch& batch) const;
  std::size_t slot(const std::string& name) const;

  ModelSpec spec_;
  InputLayout layout_;
};

/// Flattens channels x steps (plus statics) into one vector and applies a
/// stack of dense layers. Used for gradient checks and small baselines.
class DenseNetwork : public Network {
 public:
  DenseNetwork(std::size_t channels, std::size_t steps, std::size_t static_dim,
               std::vector<int> hidden, Activation activation);

  Var logits(Graph& g, const InstanceBatch& batch) const override;

 private:
  std::size_t channels_, steps_, static_dim_;
  std::vector<int> hidden_;
  Activation activation_;
};

/// Closed-form trainable parameter count of `spec`.
std::size_t param_count(const ModelSpec& spec);

std::size_t dense_params(std::size_t in, std::size_t out);
std::size_t lstm_params(std::size_t in, std::size_t hidden);
std::size_t attention_params(std::size_t d_model);
std::size_t encoder_block_params(std::size_t d_model);

}  // namespace prometheus::nn
