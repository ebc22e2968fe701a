#include "prometheus/explain/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "prometheus/core/error.hpp"
#include "prometheus/core/random.hpp"

namespace prometheus::explain {

namespace {

constexpr std::size_t kRowsPerForward = 1024;

// Player i < C*T is feature (i / T, i % T); player C*T, when present, is the
// whole static vector.
struct Players {
  std::size_t channels, steps;
  bool with_static;
  std::size_t count() const { return channels * steps + (with_static ? 1 : 0); }
};

Players players_of(const Instance& x) {
  return {x.values.rows(), x.values.cols(), !x.statics.empty()};
}

// Instance where players flagged in `in` come from x and the rest from bg.
Instance compose(const Instance& x, const Instance& bg, const Players& pl, const std::vector<char>& in) {
  Instance z = bg;
  const std::size_t ct = pl.channels * pl.steps;
  for (std::size_t i = 0; i < ct; ++i) {
    if (in[i]) z.values.data()[i] = x.values.data()[i];
  }
  if (pl.with_static && in[ct]) z.statics = x.statics;
  return z;
}

void distribute_residual(SaliencyMap& m) {
  const double residual = m.model_output - m.base_value - (m.has_static ? m.static_phi : 0.0) -
                          std::accumulate(m.phi.data().begin(), m.phi.data().end(), 0.0);
  double total = m.has_static ? std::abs(m.static_phi) : 0.0;
  for (double v : m.phi.data()) total += std::abs(v);
  const std::size_t n = m.phi.size() + (m.has_static ? 1 : 0);
  for (double& v : m.phi.data()) {
    v += total > 0.0 ? residual * std::abs(v) / total : residual / static_cast<double>(n);
  }
  if (m.has_static) {
    m.static_phi += total > 0.0 ? residual * std::abs(m.static_phi) / total
                                : residual / static_cast<double>(n);
  }
}

double mean_prediction(const BatchModelFn& f, const BackgroundSet& background) {
  InstanceBatch batch(background.instances.front().values.rows(),
                      background.instances.front().values.cols(),
                      background.instances.front().statics.size());
  for (const Instance& b : background.instances) batch.push(b);
  const auto p = f(batch);
  return std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
}

SaliencyMap empty_map(const Instance& x) {
  SaliencyMap m;
  m.phi = Matrix(x.values.rows(), x.values.cols());
  m.has_static = !x.statics.empty();
  return m;
}

}  // namespace

BatchModelFn model_fn(const nn::Network& net) {
  return [&net](const InstanceBatch& b) { return net.predict(b); };
}

double SaliencyMap::additivity_residual() const {
  return model_output - base_value - (has_static ? static_phi : 0.0) -
         std::accumulate(phi.data().begin(), phi.data().end(), 0.0);
}

void BackgroundSet::check_compatible(const Instance& x) const {
  if (instances.empty()) throw ArgumentError("background set is empty");
  for (const Instance& b : instances) {
    if (!b.values.same_shape(x.values) || b.statics.size() != x.statics.size()) {
      throw ShapeError("background instance is " + std::to_string(b.values.rows()) + "x" +
                       std::to_string(b.values.cols()) + ", explained instance is " +
                       std::to_string(x.values.rows()) + "x" + std::to_string(x.values.cols()));
    }
  }
}

std::vector<std::size_t> background_rows(std::span<const std::size_t> pool, std::size_t b, std::uint64_t seed) {
  if (pool.empty() || b == 0) throw ArgumentError("background needs a non-empty pool and B >= 1");
  std::vector<std::size_t> rows(pool.begin(), pool.end());
  Rng rng(seed);
  rng.shuffle(rows);
  rows.resize(std::min(b, rows.size()));
  std::sort(rows.begin(), rows.end());
  return rows;
}

BackgroundSet sample_background(const TimeSeriesDataset& data, std::span<const std::size_t> pool,
                                std::size_t b, std::uint64_t seed, std::span<const int> channels,
                                bool with_static) {
  BackgroundSet out;
  for (std::size_t r : background_rows(pool, b, seed)) out.instances.push_back(gather_instance(data, r, channels, with_static));
  return out;
}

Instance mask_with_background(const Instance& x, const CoalitionMask& mask, const Instance& background,
                              bool keep_statics) {
  if (!x.values.same_shape(background.values) || mask.channels != x.values.rows() ||
      mask.steps != x.values.cols() || x.statics.size() != background.statics.size()) {
    throw ShapeError("mask " + std::to_string(mask.channels) + "x" + std::to_string(mask.steps) +
                     ", instance " + std::to_string(x.values.rows()) + "x" + std::to_string(x.values.cols()) +
                     ", background " + std::to_string(background.values.rows()) + "x" +
                     std::to_string(background.values.cols()));
  }
  Instance z = background;
  for (std::size_t i = 0; i < mask.included.size(); ++i) {
    if (mask.included[i]) z.values.data()[i] = x.values.data()[i];
  }
  if (keep_statics) z.statics = x.statics;
  return z;
}

SaliencyMap exact_shap(const BatchModelFn& f, const Instance& x, const BackgroundSet& background) {
  background.check_compatible(x);
  const Players pl = players_of(x);
  const std::size_t m = pl.count();
  if (m > kExactShapMaxFeatures) {
    throw SizeError("exact Shapley enumeration needs at most " + std::to_string(kExactShapMaxFeatures) +
                    " features, instance has " + std::to_string(m));
  }
  const std::size_t coalitions = std::size_t{1} << m;
  const std::size_t nb = background.size();

  // v[S] = mean over the background of f(x_S, b_rest).
  std::vector<double> v(coalitions, 0.0);
  std::vector<char> in(m);
  InstanceBatch batch(pl.channels, pl.steps, x.statics.size());
  std::vector<std::size_t> owner;
  auto flush = [&] {
    if (batch.size == 0) return;
    const auto p = f(batch);
    for (std::size_t i = 0; i < p.size(); ++i) v[owner[i]] += p[i];
    batch = InstanceBatch(pl.channels, pl.steps, x.statics.size());
    owner.clear();
  };
  for (std::size_t s = 0; s < coalitions; ++s) {
    for (std::size_t i = 0; i < m; ++i) in[i] = (s >> i) & 1u;
    for (const Instance& b : background.instances) {
      batch.push(compose(x, b, pl, in));
      owner.push_back(s);
      if (batch.size >= kRowsPerForward) flush();
    }
  }
  flush();
  for (double& val : v) val /= static_cast<double>(nb);

  // weight(|S|) = |S|! (M - |S| - 1)! / M! = 1 / (M * binom(M-1, |S|))
  std::vector<double> weight(m);
  for (std::size_t s = 0; s < m; ++s) {
    double binom = 1.0;
    for (std::size_t j = 1; j <= s; ++j) {
      binom = binom * static_cast<double>(m - 1 - s + j) / static_cast<double>(j);
    }
    weight[s] = 1.0 / (static_cast<double>(m) * binom);
  }

  SaliencyMap out = empty_map(x);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t s = 0; s < coalitions; ++s) {
      if (s & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
    }
    if (i < pl.channels * pl.steps) {
      out.phi.data()[i] = phi;
    } else {
      out.static_phi = phi;
    }
  }
  out.base_value = v[0];
  out.model_output = v[coalitions - 1];
  out.P_used = coalitions;
  return out;
}

SaliencyMap sampling_shap(const BatchModelFn& f, const Instance& x, const BackgroundSet& background,
                          const SamplingOptions& options) {
  if (options.permutations < 1) throw ArgumentError("P must be at least 1");
  background.check_compatible(x);
  const Players pl = players_of(x);
  const std::size_t m = pl.count();
  const std::size_t perms = options.permutations;
  const std::size_t per_forward = std::max<std::size_t>(1, kRowsPerForward / (m + 1));
  std::vector<double> contrib(perms * m, 0.0);

  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<char> in(m);
    for (std::size_t p0 = begin; p0 < end; p0 += per_forward) {
      const std::size_t p1 = std::min(end, p0 + per_forward);
      InstanceBatch batch(pl.channels, pl.steps, x.statics.size());
      batch.reserve((p1 - p0) * (m + 1));
      std::vector<std::vector<std::size_t>> orders;
      for (std::size_t p = p0; p < p1; ++p) {
        Rng rng(derive_seed(options.seed, p));
        orders.push_back(rng.permutation(m));
        const Instance& bg = background.instances[rng.index(background.size())];
        std::fill(in.begin(), in.end(), 0);
        batch.push(compose(x, bg, pl, in));
        for (std::size_t k = 0; k < m; ++k) {
          in[orders.back()[k]] = 1;
          batch.push(compose(x, bg, pl, in));
        }
      }
      const auto out = f(batch);
      for (std::size_t p = p0; p < p1; ++p) {
        const double* vals = out.data() + (p - p0) * (m + 1);
        const auto& order = orders[p - p0];
        for (std::size_t k = 0; k < m; ++k) contrib[p * m + order[k]] = vals[k + 1] - vals[k];
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, perms));
  if (workers == 1) {
    run(0, perms);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          run(perms * w / workers, perms * (w + 1) / workers);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  SaliencyMap out = empty_map(x);
  std::vector<double> sum(m, 0.0);
  for (std::size_t p = 0; p < perms; ++p) {
    for (std::size_t i = 0; i < m; ++i) sum[i] += contrib[p * m + i];
  }
  const std::size_t ct = pl.channels * pl.steps;
  for (std::size_t i = 0; i < ct; ++i) out.phi.data()[i] = sum[i] / static_cast<double>(perms);
  if (pl.with_static) out.static_phi = sum[ct] / static_cast<double>(perms);

  out.base_value = mean_prediction(f, background);
  InstanceBatch single(pl.channels, pl.steps, x.statics.size());
  single.push(x);
  out.model_output = f(single).front();
  out.P_used = perms;
  out.seed = options.seed;
  if (options.normalize) distribute_residual(out);
  return out;
}

BatchExplanation batch_explain(const nn::Model& model, const TimeSeriesDataset& data,
                               std::span<const std::size_t> selection, const BackgroundSet& background,
                               const SamplingOptions& options) {
  BatchExplanation out;
  const BatchModelFn f = model_fn(model);
  const auto& spec = model.spec();
  for (std::size_t row : selection) {
    try {
      if (row >= data.n) throw ArgumentError("instance index " + std::to_string(row) + " out of range");
      const Instance x = gather_instance(data, row, spec.input_channels, spec.use_static_branch);
      SamplingOptions o = options;
      o.seed = options.seed ^ static_cast<std::uint64_t>(row);
      SaliencyMap map = sampling_shap(f, x, background, o);
      map.instance_id = std::to_string(row);
      out.maps.push_back(std::move(map));
      out.explained.push_back(row);
    } catch (const std::exception& e) {
      out.failures.emplace_back(row, e.what());
    }
  }
  return out;
}

}  // namespace prometheus::explain
