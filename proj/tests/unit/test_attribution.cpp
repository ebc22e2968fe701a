#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "prometheus/attribution/importance.hpp"
#include "prometheus/attribution/pruning.hpp"
#include "prometheus/core/error.hpp"
#include "prometheus/core/random.hpp"
#include "prometheus/nn/model_spec.hpp"
#include "prometheus/synth/generator.hpp"

using namespace prometheus;
using namespace prometheus::attribution;

namespace {

explain::SaliencyMap map_of(std::size_t c, std::size_t t, std::vector<double> phi) {
  explain::SaliencyMap m;
  m.phi = Matrix(c, t, std::move(phi));
  return m;
}

ChannelImportance importance_of(std::vector<double> psi) {
  ChannelImportance imp;
  imp.local = Matrix(1, psi.size(), psi);
  imp.global = std::move(psi);
  imp.n_instances = 1;
  return imp;
}

std::vector<ChannelMeta> rl_meta(std::size_t n) {
  std::vector<ChannelMeta> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = {"c" + std::to_string(i), ChannelKind::RlKpi, "", true, -1, ""};
  return m;
}

// Smallest k such that the k largest |psi| reach the coverage, found by trying
// every prefix of the sorted order.
std::size_t minimal_prefix(std::vector<double> psi, double coverage) {
  for (double& v : psi) v = std::abs(v);
  std::sort(psi.begin(), psi.end(), std::greater<>());
  const double total = std::accumulate(psi.begin(), psi.end(), 0.0);
  for (std::size_t k = 1; k <= psi.size(); ++k) {
    if (std::accumulate(psi.begin(), psi.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / total >= coverage) return k;
  }
  return psi.size();
}

const TimeSeriesDataset& synth_data() {
  static const TimeSeriesDataset d = [] {
    synth::SynthConfig cfg;
    cfg.n_links = 10;
    cfg.n_days = 40;
    cfg.n_stations = 5;
    cfg.target_failure_rate = 0.05;
    return synth::generate(cfg).dataset;
  }();
  return d;
}

std::vector<int> every_channel(const TimeSeriesDataset& d) {
  std::vector<int> c(d.channels);
  std::iota(c.begin(), c.end(), 0);
  return c;
}

PrunedFeatureSet keep(std::vector<std::size_t> positions, bool has_static = false, bool static_kept = false) {
  PrunedFeatureSet p;
  p.kept_channels = std::move(positions);
  p.has_static = has_static;
  p.static_kept = static_kept;
  return p;
}

}  // namespace

TEST_SUITE("attribution") {

TEST_CASE("true positives") {
  const std::vector<double> probs{0.9, 0.2, 0.6};
  CHECK(select_tp(probs, std::vector<int>{1, 1, 0}) == std::vector<std::size_t>{0});
  CHECK(select_tp(probs, std::vector<int>{0, 0, 0}).empty());
  CHECK(select_tp(probs, std::vector<int>{1, 1, 0}, 0.0) == std::vector<std::size_t>{0, 1});
  CHECK(select_tp(probs, std::vector<int>{1, 0, 1}, 0.6) == std::vector<std::size_t>{0, 2});
  CHECK_THROWS_AS(select_tp(probs, std::vector<int>{1, 0}), ArgumentError);
}

TEST_CASE("local aggregation sums over time") {
  const auto m = map_of(2, 2, {1.0, -1.0, 2.0, 3.0});
  CHECK(local_aggregate(m, 0) == std::vector<double>{0.0, 5.0});
  CHECK(local_aggregate(m, 1) == std::vector<double>{2.0, 5.0});
  const auto zero = map_of(2, 3, std::vector<double>(6, 0.0));
  CHECK(local_aggregate(zero, 0) == std::vector<double>(2, 0.0));
  CHECK(local_aggregate(zero, 1) == std::vector<double>(2, 0.0));
  CHECK_THROWS_AS(local_aggregate(m, 2), ArgumentError);
}

TEST_CASE("global aggregation averages the local vectors") {
  const std::vector<explain::SaliencyMap> maps{map_of(2, 1, {1.0, 3.0}), map_of(2, 1, {3.0, 1.0})};
  const ChannelImportance g = global_aggregate(maps);
  CHECK(g.global == std::vector<double>{2.0, 2.0});
  CHECK(g.n_instances == 2);
  CHECK(g.local.rows() == 2);
  CHECK(global_aggregate(std::span(maps).first(1)).global == std::vector<double>{1.0, 3.0});
  CHECK_THROWS_AS(global_aggregate(std::vector<explain::SaliencyMap>{}), ArgumentError);
  const std::vector<explain::SaliencyMap> mixed{map_of(2, 1, {1.0, 3.0}), map_of(3, 1, {1.0, 3.0, 0.0})};
  CHECK_THROWS_AS(global_aggregate(mixed), ShapeError);
}

TEST_CASE("global aggregation carries the static group") {
  auto a = map_of(1, 2, {1.0, 1.0});
  a.has_static = true;
  a.static_phi = -0.5;
  auto b = a;
  b.static_phi = 1.5;
  const ChannelImportance g = global_aggregate(std::vector{a, b}, 1);
  CHECK(g.has_static);
  CHECK(g.local_static == std::vector<double>{0.5, 1.5});
  CHECK(g.global_static == 1.0);
}

TEST_CASE("reported shares: the two dominant channels plus the minimal prefix") {
  const std::vector<double> psi{0.04, 0.488, 0.05, 0.314, 0.08, 0.02, 0.008};
  const auto imp = importance_of(psi);
  const PrunedFeatureSet p = prune(imp, 0.95, rl_meta(psi.size()));
  const std::size_t k = minimal_prefix(psi, 0.95);
  CHECK(p.kept_channels.size() == k);
  CHECK(std::count(p.kept_channels.begin(), p.kept_channels.end(), 1) == 1);
  CHECK(std::count(p.kept_channels.begin(), p.kept_channels.end(), 3) == 1);
  CHECK(std::is_sorted(p.kept_channels.begin(), p.kept_channels.end()));
  CHECK(p.ranking == std::vector<std::size_t>{1, 3, 4, 2, 0, 5, 6});
  CHECK(p.coverage >= 0.95);
  CHECK(p.tau == doctest::Approx(0.04));
  CHECK(p.coverage_requested == 0.95);
}

TEST_CASE("pruning agrees with exhaustive prefixes on random vectors") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.index(13));
    std::vector<double> psi(n);
    for (double& v : psi) v = rng.normal() * std::exp(rng.normal());
    const double cov = rng.uniform(0.05, 1.0);
    const PrunedFeatureSet p = prune(importance_of(psi), cov, rl_meta(n));
    CHECK(p.kept_channels.size() == minimal_prefix(psi, cov));
    for (std::size_t i = 0; i < p.kept_channels.size(); ++i) {
      CHECK(std::count(p.kept_channels.begin(), p.kept_channels.end(), p.ranking[i]) == 1);
    }
  }
}

TEST_CASE("coverage edge cases") {
  CHECK(prune(importance_of({0.5, 0.0, -0.25, 0.25}), 1.0, rl_meta(4)).kept_channels ==
        std::vector<std::size_t>{0, 2, 3});
  CHECK(prune(importance_of({0.01, 0.96, 0.03}), 0.95, rl_meta(3)).kept_channels == std::vector<std::size_t>{1});
  CHECK_THROWS_AS(prune(importance_of({0.0, 0.0}), 0.95, rl_meta(2)), PruningError);
  CHECK_THROWS_AS(prune(importance_of({1.0, 0.5}), 0.0, rl_meta(2)), ArgumentError);
  CHECK_THROWS_AS(prune(importance_of({1.0, 0.5}), 1.5, rl_meta(2)), ArgumentError);
  CHECK_THROWS_AS(prune(importance_of({1.0, 0.5}), 0.9, rl_meta(3)), ShapeError);
  // Ties go to the lower index.
  CHECK(prune(importance_of({0.5, 0.5}), 0.5, rl_meta(2)).kept_channels == std::vector<std::size_t>{0});
}

TEST_CASE("exempt channels survive pruning") {
  auto meta = rl_meta(3);
  meta[2] = positional_channel();
  const PrunedFeatureSet p = prune(importance_of({0.96, 0.04, 0.0}), 0.95, meta);
  CHECK(p.kept_channels == std::vector<std::size_t>{0, 2});
  CHECK(p.exempt_channels == std::vector<std::size_t>{2});
  CHECK(p.tau == 0.96);
}

TEST_CASE("the static group competes with the channels") {
  ChannelImportance imp = importance_of({0.1, 0.5});
  imp.has_static = true;
  imp.global_static = -0.4;
  const PrunedFeatureSet p = prune(imp, 0.8, rl_meta(2));
  CHECK(p.has_static);
  CHECK(p.static_kept);
  CHECK(p.kept_channels == std::vector<std::size_t>{1});
  imp.global_static = 0.01;
  CHECK_FALSE(prune(imp, 0.8, rl_meta(2)).static_kept);
}

TEST_CASE("GENTRAP without WS channels becomes LTRANS") {
  const auto& d = synth_data();
  const nn::ModelSpec g = nn::default_spec(nn::Variant::GenTrap, d, every_channel(d));
  std::vector<std::size_t> rl;
  for (std::size_t p = 0; p < g.channels(); ++p) {
    if (g.input_meta[p].kind != ChannelKind::Ws) rl.push_back(p);
  }
  const nn::ModelSpec s = derive_pruned_spec(g, keep(rl, true, false));
  CHECK(s.variant == nn::Variant::LTrans);
  CHECK_FALSE(s.use_static_branch);
  CHECK(s.d_model == g.d_model / 2);
  for (const auto& m : s.input_meta) CHECK(m.kind != ChannelKind::Ws);
  CHECK(s.channels() == rl.size());
  CHECK(nn::param_count(s) <= nn::param_count(g) / 2);
  CHECK_FALSE(s.provenance.empty());
}

TEST_CASE("GENTRAP keeps a WS base only with every neighbour copy") {
  const auto& d = synth_data();
  const nn::ModelSpec g = nn::default_spec(nn::Variant::GenTrap, d, every_channel(d));
  std::vector<std::size_t> kept;
  std::size_t first_ws = g.channels();
  for (std::size_t p = 0; p < g.channels(); ++p) {
    const auto& m = g.input_meta[p];
    if (m.kind != ChannelKind::Ws) kept.push_back(p);
    if (m.kind == ChannelKind::Ws) first_ws = std::min(first_ws, p);
    if (m.kind == ChannelKind::Ws && m.base_name == g.input_meta[first_ws].base_name) kept.push_back(p);
  }
  std::sort(kept.begin(), kept.end());
  const nn::ModelSpec full = derive_pruned_spec(g, keep(kept, true, true));
  CHECK(full.variant == nn::Variant::GenTrap);
  CHECK(full.channels() == kept.size());
  CHECK(nn::param_count(full) < nn::param_count(g));

  // Drop the nearest copy of that base: the whole base goes, and with it WS.
  kept.erase(std::find(kept.begin(), kept.end(), first_ws));
  const nn::ModelSpec partial = derive_pruned_spec(g, keep(kept, true, true));
  CHECK(partial.variant == nn::Variant::LTrans);
}

TEST_CASE("LSTM_PLUS reductions") {
  const auto& d = synth_data();
  const nn::ModelSpec l = nn::default_spec(nn::Variant::LstmPlus, d, every_channel(d));
  const std::size_t c = l.channels();
  std::vector<std::size_t> most(c - 1);
  std::iota(most.begin(), most.end(), 0);

  const nn::ModelSpec filtered = derive_pruned_spec(l, keep(most, true, true));
  CHECK(filtered.variant == nn::Variant::LstmPlus);
  CHECK(filtered.channels() == c - 1);
  CHECK(nn::param_count(filtered) < nn::param_count(l));

  const nn::ModelSpec no_static = derive_pruned_spec(l, keep(most, true, false));
  CHECK(no_static.variant == nn::Variant::LLstmPlus);
  CHECK(no_static.lstm_layer_sizes == std::vector<int>{32, 16});
  CHECK_FALSE(no_static.use_static_branch);

  std::vector<std::size_t> few(c / 2);
  std::iota(few.begin(), few.end(), 0);
  const nn::ModelSpec half = derive_pruned_spec(l, keep(few, true, true));
  CHECK(half.variant == nn::Variant::LLstmPlus);
  CHECK(static_cast<double>(nn::param_count(half)) <= 0.1 * static_cast<double>(nn::param_count(l)));
}

TEST_CASE("pruning nothing leaves the spec unchanged") {
  const auto& d = synth_data();
  const nn::ModelSpec l = nn::default_spec(nn::Variant::LTrans, d, every_channel(d));
  std::vector<std::size_t> all(l.channels());
  std::iota(all.begin(), all.end(), 0);
  nn::ModelSpec s = derive_pruned_spec(l, keep(all));
  CHECK_FALSE(s.provenance.empty());
  s.provenance = l.provenance;
  CHECK(s == l);
  CHECK_THROWS_AS(derive_pruned_spec(l, keep({})), ArgumentError);
}

TEST_CASE("importance file lists every channel") {
  const std::vector<double> psi{0.1, -0.6, 0.3};
  const auto imp = importance_of(psi);
  const PrunedFeatureSet p = prune(imp, 0.85, rl_meta(3));
  testing::TempDir tmp("importance");
  write_importance(tmp.path() / "importance.json", imp, p, {"a", "b", "c"});
  const auto j = nlohmann::json::parse(testing::read_file(tmp.path() / "importance.json"));
  const auto& ch = j.at("channels");
  REQUIRE(ch.size() == 3);
  CHECK(ch[1].at("name") == "b");
  CHECK(ch[1].at("psi").get<double>() == -0.6);
  CHECK(ch[1].at("abs_share").get<double>() == doctest::Approx(0.6));
  CHECK(ch[1].at("kept") == true);
  CHECK(ch[0].at("kept") == false);
  CHECK(ch[2].at("kept") == true);
}

}  // TEST_SUITE
