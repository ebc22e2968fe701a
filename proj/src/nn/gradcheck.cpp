#include "prometheus/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "prometheus/core/random.hpp"

namespace prometheus::nn {

namespace {

double loss_value(const Network& net, const InstanceBatch& batch, std::span<const int> labels,
                  std::span<const double> weights) {
  Graph g(false);
  return g.value(g.weighted_cross_entropy(net.logits(g, batch), labels, weights))(0, 0);
}

}  // namespace

GradCheckResult gradient_check(Network& net, const InstanceBatch& batch, std::span<const int> labels,
                               std::span<const double> weights, std::uint64_t seed,
                               std::size_t samples, double h) {
  ParameterSet& params = net.params();
  std::vector<Matrix> grads;
  for (const Parameter& p : params) grads.emplace_back(p.value.rows(), p.value.cols());
  {
    Graph g;
    const Var loss = g.weighted_cross_entropy(net.logits(g, batch), labels, weights);
    g.backward(loss);
    g.accumulate_parameter_grads(grads);
  }

  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t s = 0; s < params.size(); ++s) {
    for (std::size_t i = 0; i < params[s].value.size(); ++i) all.emplace_back(s, i);
  }
  Rng rng(seed);
  rng.shuffle(all);
  all.resize(std::min(samples, all.size()));

  GradCheckResult out;
  for (auto [s, i] : all) {
    double& w = params[s].value.data()[i];
    const double saved = w;
    w = saved + h;
    const double up = loss_value(net, batch, labels, weights);
    w = saved - h;
    const double down = loss_value(net, batch, labels, weights);
    w = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grads[s].data()[i];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    out.max_relative_error = std::max(out.max_relative_error, std::abs(analytic - numeric) / denom);
    ++out.checked;
  }
  return out;
}

GradCheckResult gradient_check(const ModelSpec& spec, std::uint64_t seed) {
  Model model(spec);
  model.init(derive_seed(seed, 1));
  // Perturb biases and gains away from their 0/1 initial values so every
  // parameter sits at a generic point.
  Rng rng(derive_seed(seed, 2));
  for (Parameter& p : model.params()) {
    for (double& x : p.value.data()) x += 0.1 * rng.normal();
  }
  constexpr std::size_t kBatch = 3;
  InstanceBatch batch(spec.channels(), static_cast<std::size_t>(spec.steps),
                      spec.use_static_branch ? static_cast<std::size_t>(spec.static_dim) : 0);
  for (std::size_t b = 0; b < kBatch; ++b) {
    Instance x;
    x.values = Matrix(batch.channels, batch.steps);
    for (double& v : x.values.data()) v = rng.normal();
    x.statics.resize(batch.static_dim);
    for (double& v : x.statics) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    batch.push(x);
  }
  const int labels[kBatch] = {1, 0, 1};
  const double weights[kBatch] = {2.0, 1.0, 0.5};
  return gradient_check(model, batch, labels, weights, derive_seed(seed, 3), 64);
}

}  // namespace prometheus::nn
