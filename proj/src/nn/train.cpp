#include "prometheus/nn/train.hpp"

#include <algorithm>
#include <cmath>

#include "prometheus/core/error.hpp"
#include "prometheus/core/random.hpp"

namespace prometheus::nn {

namespace {

double f1_at_half(const std::vector<double>& probs, std::span<const int> labels) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= 0.5;
    if (pred && labels[i] == 1) ++tp;
    if (pred && labels[i] == 0) ++fp;
    if (!pred && labels[i] == 1) ++fn;
  }
  return tp == 0 ? 0.0 : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
}

double weighted_loss(const std::vector<double>& probs, std::span<const int> labels,
                     const double class_weight[2]) {
  if (probs.empty()) return 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = labels[i] == 1 ? probs[i] : 1.0 - probs[i];
    loss += class_weight[labels[i]] * -std::log(std::max(p, 1e-300));
  }
  return loss / static_cast<double>(probs.size());
}

void round_to_float(ParameterSet& params) {
  for (Parameter& p : params) {
    for (double& x : p.value.data()) x = static_cast<double>(static_cast<float>(x));
  }
}

}  // namespace

std::string to_string(ClassWeighting w) {
  return w == ClassWeighting::None ? "NONE" : "INVERSE_FREQUENCY";
}

ClassWeighting class_weighting_from_string(const std::string& s) {
  if (s == "NONE") return ClassWeighting::None;
  if (s == "INVERSE_FREQUENCY") return ClassWeighting::InverseFrequency;
  throw ArgumentError("unknown class weighting '" + s + "'");
}

FoldData prepare_fold(const TimeSeriesDataset& raw, const FoldSpec& fold) {
  FoldData out;
  auto [data, stats] = normalize(raw, fold);
  out.data = std::move(data);
  out.norm = std::move(stats);
  out.split = split_instances(out.data, fold);
  return out;
}

InstanceBatch subset(const InstanceBatch& batch, std::span<const std::size_t> rows) {
  InstanceBatch out(batch.channels, batch.steps, batch.static_dim);
  out.reserve(rows.size());
  const std::size_t w = batch.channels * batch.steps;
  for (std::size_t r : rows) {
    const auto v = batch.values.begin() + static_cast<std::ptrdiff_t>(r * w);
    out.values.insert(out.values.end(), v, v + static_cast<std::ptrdiff_t>(w));
    const auto s = batch.statics.begin() + static_cast<std::ptrdiff_t>(r * batch.static_dim);
    out.statics.insert(out.statics.end(), s, s + static_cast<std::ptrdiff_t>(batch.static_dim));
    ++out.size;
  }
  return out;
}

InstanceBatch model_batch(const ModelSpec& spec, const TimeSeriesDataset& data,
                          std::span<const std::size_t> rows) {
  return gather_batch(data, rows, spec.input_channels, spec.use_static_branch);
}

std::vector<double> predict_rows(const Model& model, const TimeSeriesDataset& data,
                                 std::span<const std::size_t> rows) {
  constexpr std::size_t kChunk = 2048;
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); i += kChunk) {
    const auto part = rows.subspan(i, std::min(kChunk, rows.size() - i));
    const auto p = model.predict(model_batch(model.spec(), data, part));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<int> labels_of(const TimeSeriesDataset& data, std::span<const std::size_t> rows) {
  std::vector<int> y;
  y.reserve(rows.size());
  for (std::size_t r : rows) y.push_back(data.labels[r]);
  return y;
}

FitResult fit(Network& net, const InstanceBatch& train, std::span<const int> train_labels,
              const InstanceBatch& val, std::span<const int> val_labels, const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ArgumentError("epochs must be at least 1");
  if (cfg.batch_size < 1) throw ArgumentError("batch_size must be at least 1");
  if (cfg.learning_rate < 0.0) throw ArgumentError("learning_rate must be non-negative");
  if (cfg.weight_decay < 0.0) throw ArgumentError("weight_decay must be non-negative");
  if (train.size == 0) throw TrainingError("training split is empty");
  if (train_labels.size() != train.size || val_labels.size() != val.size) {
    throw ShapeError("label count differs from batch size");
  }

  std::size_t positives = 0;
  for (int y : train_labels) positives += y == 1 ? 1 : 0;
  double class_weight[2] = {1.0, 1.0};
  if (cfg.class_weighting == ClassWeighting::InverseFrequency) {
    if (positives == 0) throw TrainingError("training split has no positive labels");
    const double n = static_cast<double>(train.size);
    class_weight[1] = n / (2.0 * static_cast<double>(positives));
    class_weight[0] = positives == train.size ? 1.0 : n / (2.0 * static_cast<double>(train.size - positives));
  }

  ParameterSet& params = net.params();
  std::vector<Matrix> m, v, grads;
  for (const Parameter& p : params) {
    m.emplace_back(p.value.rows(), p.value.cols());
    v.emplace_back(p.value.rows(), p.value.cols());
    grads.emplace_back(p.value.rows(), p.value.cols());
  }
  std::vector<bool> decays;
  for (const Parameter& p : params) {
    decays.push_back(cfg.weight_decay > 0.0 && p.name.size() > 2 &&
                     p.name.compare(p.name.size() - 2, 2, ".w") == 0);
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::size_t step = 0;

  FitResult result;
  std::vector<Matrix> best;
  double best_f1 = -1.0, best_loss = INFINITY;
  int since_best = 0;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = Rng(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)))
                                         .permutation(train.size);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(bs, order.size() - start));
      const InstanceBatch batch = subset(train, rows);
      std::vector<int> y;
      std::vector<double> w;
      for (std::size_t r : rows) {
        y.push_back(train_labels[r]);
        w.push_back(class_weight[train_labels[r]]);
      }
      Graph g;
      const Var loss = g.weighted_cross_entropy(net.logits(g, batch), y, w);
      const double lv = g.value(loss)(0, 0);
      if (!std::isfinite(lv)) {
        throw TrainingError("loss diverged (" + std::to_string(lv) + ") at epoch " + std::to_string(epoch));
      }
      epoch_loss += lv * static_cast<double>(rows.size());
      for (Matrix& gm : grads) gm.fill(0.0);
      g.backward(loss);
      g.accumulate_parameter_grads(grads);

      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t s = 0; s < params.size(); ++s) {
        auto& pv = params[s].value.data();
        if (decays[s]) {
          for (double& x : pv) x -= cfg.learning_rate * cfg.weight_decay * x;
        }
        const auto& gv = grads[s].data();
        auto& mv = m[s].data();
        auto& vv = v[s].data();
        for (std::size_t i = 0; i < pv.size(); ++i) {
          mv[i] = kBeta1 * mv[i] + (1.0 - kBeta1) * gv[i];
          vv[i] = kBeta2 * vv[i] + (1.0 - kBeta2) * gv[i] * gv[i];
          pv[i] -= cfg.learning_rate * (mv[i] / c1) / (std::sqrt(vv[i] / c2) + kEps);
        }
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(train.size);
    double score_f1 = 0.0, score_loss = rec.train_loss;
    if (val.size > 0) {
      const auto probs = net.predict(val);
      rec.val_loss = weighted_loss(probs, val_labels, class_weight);
      rec.val_f1 = f1_at_half(probs, val_labels);
      score_f1 = rec.val_f1;
      score_loss = rec.val_loss;
    }
    if (!std::isfinite(score_loss)) {
      throw TrainingError("loss diverged at epoch " + std::to_string(epoch));
    }
    result.log.push_back(rec);

    if (score_f1 > best_f1 || (score_f1 == best_f1 && score_loss < best_loss)) {
      best_f1 = score_f1;
      best_loss = score_loss;
      result.best_epoch = epoch;
      best.clear();
      for (const Parameter& p : params) best.push_back(p.value);
      since_best = 0;
    } else if (cfg.early_stop_patience > 0 && ++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  for (std::size_t s = 0; s < params.size(); ++s) params[s].value = best[s];
  round_to_float(params);
  return result;
}

TrainedModel train(const ModelSpec& spec, const FoldData& fold, const TrainConfig& cfg) {
  TrainedModel out{Model(spec), fold.norm, param_count(spec), cfg.seed, {}, 0};
  out.model.init(derive_seed(cfg.seed, 1));
  const InstanceBatch tr = model_batch(spec, fold.data, fold.split.train);
  const InstanceBatch va = model_batch(spec, fold.data, fold.split.val);
  const auto ytr = labels_of(fold.data, fold.split.train);
  const auto yva = labels_of(fold.data, fold.split.val);
  FitResult r = fit(out.model, tr, ytr, va, yva, cfg);
  out.train_log = std::move(r.log);
  out.best_epoch = r.best_epoch;
  return out;
}

}  // namespace prometheus::nn
