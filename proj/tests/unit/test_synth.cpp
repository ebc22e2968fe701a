#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "prometheus/core/error.hpp"
#include "prometheus/core/random.hpp"
#include "prometheus/synth/generator.hpp"
#include "prometheus/synth/station_graph.hpp"

using namespace prometheus;

TEST_SUITE("synth") {

TEST_CASE("k nearest stations by distance") {
  Matrix links(1, 2, 0.0);
  Matrix stations(3, 2, {0.0, 3.0, 1.0, 0.0, 0.0, 2.0});
  const StationGraph g = synth::knearest_stations(links, stations, 2);
  REQUIRE(g.neighbors.size() == 1);
  CHECK(g.neighbors[0] == std::vector<int>{1, 2});
}

TEST_CASE("equidistant stations resolve to the lower index") {
  Matrix links(1, 2, 0.0);
  Matrix stations(2, 2, {0.0, 1.0, 1.0, 0.0});
  CHECK(synth::knearest_stations(links, stations, 1).neighbors[0] == std::vector<int>{0});
}

TEST_CASE("k nearest matches a brute-force sort on a random layout") {
  Rng rng(11);
  Matrix links(15, 2), stations(20, 2);
  for (double& v : links.data()) v = rng.uniform(0, 100);
  for (double& v : stations.data()) v = rng.uniform(0, 100);
  const StationGraph g = synth::knearest_stations(links, stations, 3);
  for (std::size_t l = 0; l < links.rows(); ++l) {
    std::vector<std::pair<double, int>> all;
    for (std::size_t s = 0; s < stations.rows(); ++s) {
      const double dx = links(l, 0) - stations(s, 0), dy = links(l, 1) - stations(s, 1);
      all.emplace_back(dx * dx + dy * dy, static_cast<int>(s));
    }
    std::sort(all.begin(), all.end());
    CHECK(g.neighbors[l] == std::vector<int>{all[0].second, all[1].second, all[2].second});
  }
}

TEST_CASE("more neighbours than stations is an argument error") {
  CHECK_THROWS_AS(synth::knearest_stations(Matrix(1, 2), Matrix(2, 2), 3), ArgumentError);
}

TEST_CASE("default generation hits the target failure rate") {
  synth::SynthConfig cfg;
  cfg.seed = 1;
  const synth::SynthResult r = synth::generate(cfg);
  const double positives = std::accumulate(r.dataset.labels.begin(), r.dataset.labels.end(), 0.0);
  const double rate = positives / static_cast<double>(r.dataset.n);
  CHECK(rate >= 0.0024);
  CHECK(rate <= 0.0036);
  CHECK(r.truth.realized_failure_rate == doctest::Approx(rate));
  CHECK(r.dataset.steps == 4);
  CHECK(r.graph.k() == 3);
}

TEST_CASE("higher target rates are reachable") {
  for (double target : {0.01, 0.02}) {
    synth::SynthConfig cfg;
    cfg.target_failure_rate = target;
    const synth::SynthResult r = synth::generate(cfg);
    CHECK(r.truth.realized_failure_rate >= 0.8 * target);
    CHECK(r.truth.realized_failure_rate <= 1.2 * target);
  }
}

TEST_CASE("generation is deterministic in the config") {
  synth::SynthConfig cfg;
  cfg.n_links = 12;
  cfg.n_days = 80;
  cfg.target_failure_rate = 0.02;
  const auto a = synth::generate(cfg);
  const auto b = synth::generate(cfg);
  CHECK(a.dataset.values == b.dataset.values);
  CHECK(a.dataset.labels == b.dataset.labels);
  cfg.seed = 2;
  CHECK(synth::generate(cfg).dataset.values != a.dataset.values);
}

TEST_CASE("with an AND rule and no label noise, labels fire exactly when both triggers exceed") {
  synth::SynthConfig cfg;
  cfg.target_failure_rate = 0.01;
  const auto r = synth::generate(cfg);
  const auto& d = r.dataset;
  REQUIRE(r.truth.relevant_channels.size() == 2);
  CHECK(d.channel_meta[static_cast<std::size_t>(r.truth.relevant_channels[0])].name == "unavail_second");
  CHECK(d.channel_meta[static_cast<std::size_t>(r.truth.relevant_channels[1])].name == "bbe");
  CHECK(r.truth.relevant_timestep == 3);
  std::size_t positives = 0;
  for (std::size_t i = 0; i < d.n; ++i) {
    bool both = true;
    for (std::size_t j = 0; j < 2; ++j) {
      const auto c = static_cast<std::size_t>(r.truth.relevant_channels[j]);
      both = both && d.at(i, c, d.steps - 1) > r.truth.thresholds[j];
    }
    CHECK(d.labels[i] == static_cast<int>(both));
    positives += static_cast<std::size_t>(d.labels[i]);
  }
  CHECK(positives > 0);
}

TEST_CASE("written CSVs load back to the generated dataset") {
  synth::SynthConfig cfg;
  cfg.n_links = 8;
  cfg.n_days = 40;
  cfg.n_stations = 5;
  cfg.target_failure_rate = 0.03;
  const auto r = synth::generate(cfg);
  testing::TempDir tmp("synth_rt");
  synth::write_synth_outputs(tmp.path(), r);
  CHECK(std::filesystem::exists(tmp.path() / "ground_truth.json"));
  const DatasetPaths paths{tmp.path() / "rl_kpi.csv", tmp.path() / "ws.csv", tmp.path() / "static.csv",
                           tmp.path() / "distances.csv"};
  const TimeSeriesDataset back = load_dataset(paths, r.schema).dataset;
  CHECK(back.values == r.dataset.values);
  CHECK(back.labels == r.dataset.labels);
  CHECK(back.static_features == r.dataset.static_features);
}

TEST_CASE("invalid configs and infeasible rates are rejected") {
  synth::SynthConfig cfg;
  cfg.n_stations = 2;
  CHECK_THROWS_AS(synth::generate(cfg), ArgumentError);
  cfg = {};
  cfg.failure_rule.trigger_channels = {"nonexistent"};
  CHECK_THROWS_AS(synth::generate(cfg), ArgumentError);
  cfg = {};
  cfg.failure_rule.noise_flip_prob = 0.2;
  CHECK_THROWS_AS(synth::generate(cfg), ArgumentError);
  cfg = {};
  cfg.failure_rule.thresholds = {1e12, 1e12};
  try {
    synth::generate(cfg);
    FAIL("expected a generation error");
  } catch (const GenerationError& e) {
    CHECK(std::string(e.what()).find("achieved") != std::string::npos);
  }
}

TEST_CASE("a coupled WS channel follows the failure-causing bursts") {
  synth::SynthConfig cfg;
  cfg.target_failure_rate = 0.02;
  cfg.coupled_ws_channel = "humidity";
  const auto r = synth::generate(cfg);
  const auto& d = r.dataset;
  const std::size_t c = *d.channel_index("humidity@k0");
  double pos = 0.0, neg = 0.0, np = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) {
    (d.labels[i] ? pos : neg) += d.at(i, c, d.steps - 1);
    (d.labels[i] ? np : nn) += 1.0;
  }
  CHECK(pos / np > neg / nn + 2.0);
}

}  // TEST_SUITE
