#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "prometheus/core/csv.hpp"
#include "prometheus/core/error.hpp"
#include "prometheus/core/folds.hpp"
#include "prometheus/core/loader.hpp"
#include "prometheus/core/prth.hpp"
#include "prometheus/core/random.hpp"

using namespace prometheus;

TEST_SUITE("core") {

TEST_CASE("rolling origin folds on an extent of 100") {
  const auto folds = rolling_origin_folds(100, 5);
  REQUIRE(folds.size() == 5);
  const FoldSpec& f4 = folds[4];
  CHECK(f4.name() == "F4");
  CHECK(f4.train == IndexRange{0, 70});
  CHECK(f4.val == IndexRange{70, 90});
  CHECK(f4.test == IndexRange{90, 100});
  const FoldSpec& f3 = folds[3];
  CHECK(f3.train == IndexRange{0, 63});
  CHECK(f3.val == IndexRange{63, 81});
  CHECK(f3.test == IndexRange{81, 90});
}

TEST_CASE("fold extents contract by floor(0.9) and every fold partitions its extent") {
  for (std::size_t total : {50u, 73u, 100u, 196u, 1000u}) {
    const auto folds = rolling_origin_folds(total, 5);
    std::size_t extent = total;
    for (int f = 4; f >= 0; --f) {
      const FoldSpec& s = folds[static_cast<std::size_t>(f)];
      CHECK(s.fold_id == f);
      CHECK(s.extent() == extent);
      CHECK(s.train.begin == 0);
      CHECK(s.train.end == s.val.begin);
      CHECK(s.val.end == s.test.begin);
      CHECK(s.train.size() == extent * 7 / 10);
      CHECK(s.val.size() == extent * 2 / 10);
      CHECK(s.test.size() >= 1);
      extent = extent * 9 / 10;
    }
  }
  CHECK(rolling_origin_folds(50, 5).front().extent() == 32);
}

TEST_CASE("fold boundaries are a pure function of their arguments") {
  CHECK(rolling_origin_folds(137, 5) == rolling_origin_folds(137, 5));
}

TEST_CASE("too short a time axis is rejected") {
  CHECK_THROWS_AS(rolling_origin_folds(49, 5), ArgumentError);
  CHECK_THROWS_AS(rolling_origin_folds(100, 0), ArgumentError);
}

TEST_CASE("fold names parse") {
  CHECK(parse_fold_id("F3") == 3);
  CHECK_THROWS_AS(parse_fold_id("G1"), ArgumentError);
  CHECK_THROWS_AS(parse_fold_id("F"), ArgumentError);
}

TEST_CASE("a 6-day link with n_days 4 yields two windows labelled by the following day") {
  const LinkPanel panel = testing::ramp_panel(1, 6);
  const TimeSeriesDataset d = make_windows(panel, 4);
  REQUIRE(d.n == 2);
  CHECK(d.steps == 4);
  CHECK(d.channels == 2);
  CHECK(d.at(0, 0, 0) == 0.0);
  CHECK(d.at(0, 0, 3) == 3.0);
  CHECK(d.at(1, 0, 3) == 4.0);
  CHECK(d.labels[0] == panel.links[0].failure[4]);
  CHECK(d.labels[1] == panel.links[0].failure[5]);
  CHECK(d.channel_meta.back().kind == ChannelKind::Positional);
  CHECK_FALSE(d.channel_meta.back().prunable);
  CHECK(d.time_extent == 2);
}

TEST_CASE("a 5-day link yields one window labelled by day 5") {
  const LinkPanel panel = testing::ramp_panel(1, 5);
  const TimeSeriesDataset d = make_windows(panel, 4);
  REQUIRE(d.n == 1);
  CHECK(d.labels[0] == panel.links[0].failure[4]);
}

TEST_CASE("windowing never labels an instance from inside its own window") {
  const TimeSeriesDataset d = make_windows(testing::ramp_panel(3, 12), 4);
  for (std::size_t i = 0; i < d.n; ++i) {
    const auto& s = d.instance_meta[i];
    const std::size_t link = std::stoul(s.link_id);
    const auto last_day = static_cast<std::size_t>(d.at(i, 0, 3)) - link * 100;
    CHECK(d.labels[i] == static_cast<int>((last_day + 1) % 3 == 0));
  }
}

TEST_CASE("short links are skipped and counted; n_days < 1 is rejected") {
  LinkPanel panel = testing::ramp_panel(2, 8);
  panel.links[1].values = Matrix(1, 3);
  panel.links[1].failure.assign(3, 0);
  std::size_t skipped = 0;
  const TimeSeriesDataset d = make_windows(panel, 4, &skipped);
  CHECK(skipped == 1);
  CHECK(d.n == 4);
  CHECK_THROWS_AS(make_windows(panel, 0), ArgumentError);
}

TEST_CASE("normalize uses training statistics only") {
  // 100 days, one link: train covers the first 70 windows.
  LinkPanel panel = testing::ramp_panel(1, 104);
  const TimeSeriesDataset d = make_windows(panel, 4);
  REQUIRE(d.time_extent == 100);
  const FoldSpec fold = rolling_origin_folds(100).back();
  const auto [norm, stats] = normalize(d, fold);
  const SplitIndices split = split_instances(d, fold);
  double sum = 0.0, ss = 0.0, count = 0.0;
  for (std::size_t i : split.train) {
    for (std::size_t t = 0; t < d.steps; ++t) sum += d.at(i, 0, t), count += 1.0;
  }
  const double mean = sum / count;
  for (std::size_t i : split.train) {
    for (std::size_t t = 0; t < d.steps; ++t) ss += (d.at(i, 0, t) - mean) * (d.at(i, 0, t) - mean);
  }
  const double sd = std::sqrt(ss / count);
  CHECK(stats.mean[0] == doctest::Approx(mean).epsilon(1e-12));
  CHECK(stats.stddev[0] == doctest::Approx(sd).epsilon(1e-12));
  const std::size_t probe = split.test.back();
  CHECK(norm.at(probe, 0, 2) == doctest::Approx((d.at(probe, 0, 2) - mean) / sd).epsilon(1e-12));
  // The positional channel is constant per step, never degenerate here.
  const TimeSeriesDataset back = denormalize(norm, stats);
  for (std::size_t k = 0; k < d.values.size(); ++k) {
    CHECK(back.values[k] == doctest::Approx(d.values[k]).epsilon(1e-9));
  }
}

TEST_CASE("z-score arithmetic and the zero-variance rule") {
  TimeSeriesDataset d;
  d.n = 2;
  d.channels = 2;
  d.steps = 1;
  d.values = {3.0, 4.0, 7.0, 4.0};
  d.labels = {0, 0};
  d.channel_meta = {{"a", ChannelKind::RlKpi, "", true, -1, "a"}, {"b", ChannelKind::RlKpi, "", true, -1, "b"}};
  NormStats stats{{5.0, 4.0}, {2.0, 0.0}};
  TimeSeriesDataset probe = d;
  probe.values = {9.0, 4.0, 5.0, 4.0};
  const TimeSeriesDataset out = apply_normalization(probe, stats);
  CHECK(out.values[0] == 2.0);
  CHECK(out.values[1] == 0.0);
  CHECK(out.values[2] == 0.0);
  CHECK(out.values[3] == 0.0);
}

namespace {

void write_fixture(const std::filesystem::path& dir, bool drop_bbe, bool with_gap) {
  std::ostringstream rl;
  rl << "link_id,date,severely_error_second,error_second,unavail_second," << (drop_bbe ? "" : "bbe,")
     << "rxlevmax,capacity,rlf\n";
  for (int l = 0; l < 2; ++l) {
    for (int d = 1; d <= 10; ++d) {
      rl << l << ",2024-01-" << (d < 10 ? "0" : "") << d << ',' << d << ',' << 2 * d << ',';
      if (with_gap && l == 0 && d == 6) rl << ',';
      else rl << 10 * d + l << ',';
      if (!drop_bbe) rl << d * 0.5 << ',';
      rl << -40 - d << ',' << 100 << ',' << (d == 7 ? 1 : 0) << '\n';
    }
  }
  testing::write_file(dir / "rl_kpi.csv", rl.str());
  std::ostringstream ws;
  ws << "station_id,date,hour,temperature,precipitation,humidity,wind_speed,wind_direction,pressure,"
        "visibility,cloud_cover,dew_point\n";
  for (int s = 0; s < 3; ++s) {
    for (int d = 1; d <= 10; ++d) {
      for (int h = 0; h < 24; ++h) {
        ws << 100 + s << ",2024-01-" << (d < 10 ? "0" : "") << d << ',' << h << ',' << 10 + s << ",0.5,"
           << 60 << ',' << 3 << ',' << 180 << ',' << 1013 << ',' << 10 << ',' << 50 << ',' << 5 << '\n';
      }
    }
  }
  testing::write_file(dir / "ws.csv", ws.str());
  testing::write_file(dir / "static.csv", "link_id,terrain\n0,rural\n1,urban\n");
  testing::write_file(dir / "distances.csv",
                      "link_id,station_id,distance_km\n0,100,1\n0,101,2\n0,102,3\n1,100,3\n1,101,2\n1,102,1\n");
}

SchemaConfig fixture_schema() {
  SchemaConfig s;
  s.static_columns = {"terrain"};
  return s;
}

DatasetPaths fixture_paths(const std::filesystem::path& dir) {
  return {dir / "rl_kpi.csv", dir / "ws.csv", dir / "static.csv", dir / "distances.csv"};
}

}  // namespace

TEST_CASE("loading a 2-link, 10-day fixture") {
  testing::TempDir tmp("load");
  write_fixture(tmp.path(), false, false);
  const LoadedDataset loaded = load_dataset(fixture_paths(tmp.path()), fixture_schema());
  const TimeSeriesDataset& d = loaded.dataset;
  CHECK(d.n == 2 * (10 - 4));
  CHECK(d.steps == 4);
  // 6 RL, 9 WS per neighbour for 3 neighbours, positional.
  CHECK(d.channels == 6 + 27 + 1);
  CHECK(d.channel_meta[0].kind == ChannelKind::RlKpi);
  CHECK(d.channel_meta[6].kind == ChannelKind::Ws);
  CHECK(d.channel_meta.back().kind == ChannelKind::Positional);
  CHECK(d.channel_meta[3].name == "bbe");
  CHECK(d.channel_meta[3].unit == "count");
  // Link 1's nearest station is 102.
  const std::size_t temp_k0 = *d.channel_index("temperature@k0");
  for (std::size_t i = 0; i < d.n; ++i) {
    CHECK(d.at(i, temp_k0, 0) == (d.instance_meta[i].link_id == "0" ? 10.0 : 12.0));
  }
  // Precipitation is summed over the 24 hours.
  CHECK(d.at(0, *d.channel_index("precipitation@k0"), 0) == doctest::Approx(12.0));
  CHECK(d.static_dim() == 2);
}

TEST_CASE("a missing column is named in the load error") {
  testing::TempDir tmp("load_missing");
  write_fixture(tmp.path(), true, false);
  try {
    load_dataset(fixture_paths(tmp.path()), fixture_schema());
    FAIL("expected a load error");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("bbe") != std::string::npos);
  }
}

TEST_CASE("an empty file is a load error") {
  testing::TempDir tmp("load_empty");
  write_fixture(tmp.path(), false, false);
  testing::write_file(tmp.path() / "static.csv", "");
  CHECK_THROWS_AS(load_dataset(fixture_paths(tmp.path()), fixture_schema()), LoadError);
}

TEST_CASE("a missing cell is forward-filled from the previous day") {
  testing::TempDir tmp("load_gap");
  write_fixture(tmp.path(), false, true);
  const TimeSeriesDataset d = load_dataset(fixture_paths(tmp.path()), fixture_schema()).dataset;
  const std::size_t c = *d.channel_index("unavail_second");
  bool seen = false;
  for (std::size_t i = 0; i < d.n; ++i) {
    if (d.instance_meta[i].link_id != "0") continue;
    const Date end = d.instance_meta[i].window_end;
    for (std::size_t t = 0; t < d.steps; ++t) {
      const Date day = end - std::chrono::days{static_cast<int>(d.steps - 1 - t)};
      const int dom = static_cast<int>(unsigned(std::chrono::year_month_day(day).day()));
      const double expected = dom == 6 ? 50.0 : 10.0 * dom;
      CHECK(d.at(i, c, t) == expected);
      seen = seen || dom == 6;
    }
  }
  CHECK(seen);
}

TEST_CASE("raw tables round-trip through their CSV files") {
  testing::TempDir tmp("roundtrip");
  write_fixture(tmp.path(), false, false);
  const SchemaConfig schema = fixture_schema();
  const RawTables t = read_raw_tables(fixture_paths(tmp.path()), schema);
  testing::TempDir out("roundtrip_out");
  write_raw_tables(out.path(), t, schema);
  const TimeSeriesDataset a = load_dataset(fixture_paths(tmp.path()), schema).dataset;
  const TimeSeriesDataset b = load_dataset(fixture_paths(out.path()), schema).dataset;
  CHECK(a.values == b.values);
  CHECK(a.labels == b.labels);
}

TEST_CASE("PRTH header layout and round trip") {
  const std::vector<std::uint64_t> dims{2, 3};
  const std::vector<double> values{1, 2, 3, 4, 5, 6.5};
  std::stringstream ss;
  write_prth(ss, dims, values);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "PRTH");
  CHECK(bytes.size() == 4 + 4 + 4 + 2 * 8 + 6 * 4);
  CHECK(static_cast<unsigned char>(bytes[4]) == kPrthVersion);
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);
  const PrthTensor t = read_prth(ss);
  CHECK(t.dims == dims);
  CHECK(t.data[5] == 6.5f);
  std::stringstream bad("PRTX0000");
  CHECK_THROWS_AS(read_prth(bad), LoadError);
}

TEST_CASE("doubles format to the shortest round-trip form") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("seeded generators are reproducible and permutations are permutations") {
  Rng a(7), b(7);
  for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
  auto p = Rng(3).permutation(20);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < 20; ++i) CHECK(p[i] == i);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
}

}  // TEST_SUITE
