#include "prometheus/synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "json.hpp"
#include "prometheus/core/error.hpp"
#include "prometheus/core/random.hpp"
#include "prometheus/synth/station_graph.hpp"

namespace prometheus::synth {

namespace {

struct KpiModel {
  double level;
  double rho;
  double sigma;
  bool multiplicative;  // level * exp(z) vs level + z
};

KpiModel kpi_model(const std::string& name) {
  if (name == "severely_error_second") return {2.0, 0.6, 0.30, true};
  if (name == "error_second") return {10.0, 0.6, 0.30, true};
  if (name == "unavail_second") return {5.0, 0.5, 0.25, true};
  if (name == "bbe") return {50.0, 0.5, 0.25, true};
  if (name == "rxlevmax") return {-45.0, 0.8, 1.5, false};
  if (name == "capacity") return {400.0, 0.8, 15.0, false};
  return {20.0, 0.6, 0.3, true};
}

// Draws that do not depend on the calibrated burst probability, so the
// realized failure count is monotone in it.
struct LinkDraws {
  double x = 0, y = 0;
  std::vector<int> categories;
  Matrix baseline;               // R x days
  std::vector<double> u_joint;   // days
  Matrix u_single;               // triggers x days
  Matrix magnitude;              // triggers x days
  std::vector<double> u_flip;    // days
};

struct StationDraws {
  double x = 0, y = 0;
  std::vector<Matrix> hourly;  // per day: W x 24
};

const std::vector<std::vector<std::string>> kStaticCategories{
    {"coastal", "flat", "hilly"}, {"vendor_a", "vendor_b", "vendor_c"}, {"e_band", "v_band"}};
const std::vector<std::string> kStaticColumns{"terrain", "vendor", "band"};

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

StationDraws draw_station(std::uint64_t seed, std::size_t s, int days, double extent,
                          const std::vector<std::string>& ws) {
  Rng rng(derive_seed(seed, 0x5354u + s));
  StationDraws out;
  out.x = rng.uniform(0.0, extent);
  out.y = rng.uniform(0.0, extent);
  const double phase = rng.uniform(0.0, 365.0);
  double temp_ar = 0.0, wind_ar = 0.0, press_ar = 0.0, cloud_ar = 0.0, dir_ar = 0.0;
  for (int d = 0; d < days; ++d) {
    temp_ar = 0.7 * temp_ar + 1.5 * rng.normal();
    wind_ar = 0.6 * wind_ar + 1.0 * rng.normal();
    press_ar = 0.8 * press_ar + 2.0 * rng.normal();
    cloud_ar = 0.5 * cloud_ar + 15.0 * rng.normal();
    dir_ar = 0.7 * dir_ar + 30.0 * rng.normal();
    const bool rainy = rng.uniform() < 0.3;
    const double season = std::sin(2.0 * std::numbers::pi * (d + phase) / 365.0);
    Matrix m(ws.size(), 24);
    for (int h = 0; h < 24; ++h) {
      const double diurnal = std::sin(2.0 * std::numbers::pi * (h - 9) / 24.0);
      const double rain = rainy && rng.uniform() < 0.4 ? -0.8 * std::log(1.0 - rng.uniform()) : 0.0;
      const double temperature = 12.0 + 10.0 * season + 4.0 * diurnal + temp_ar + 0.5 * rng.normal();
      const double humidity = clamp(70.0 - 8.0 * diurnal + (rainy ? 12.0 : 0.0) + 4.0 * rng.normal(), 5.0, 100.0);
      for (std::size_t w = 0; w < ws.size(); ++w) {
        const std::string& name = ws[w];
        double v = 0.0;
        if (name == "temperature") v = temperature;
        else if (name == "precipitation") v = rain;
        else if (name == "humidity") v = humidity;
        else if (name == "wind_speed") v = std::abs(4.0 + wind_ar + 0.8 * rng.normal());
        else if (name == "wind_direction") v = std::fmod(std::abs(180.0 + dir_ar + 10.0 * rng.normal()), 360.0);
        else if (name == "pressure") v = 1013.0 + press_ar + 0.3 * rng.normal();
        else if (name == "visibility") v = std::max(0.1, 20.0 - 10.0 * rain + 1.0 * rng.normal());
        else if (name == "cloud_cover") v = clamp(50.0 + cloud_ar + (rainy ? 30.0 : 0.0) + 5.0 * rng.normal(), 0.0, 100.0);
        else if (name == "dew_point") v = temperature - (100.0 - humidity) / 5.0;
        else v = rng.normal();
        m(w, static_cast<std::size_t>(h)) = v;
      }
    }
    out.hourly.push_back(std::move(m));
  }
  return out;
}

LinkDraws draw_link(std::uint64_t seed, std::size_t l, int days, double extent,
                    const std::vector<std::string>& rl, std::size_t n_triggers) {
  Rng rng(seed ^ static_cast<std::uint64_t>(l));
  LinkDraws out;
  out.x = rng.uniform(0.0, extent);
  out.y = rng.uniform(0.0, extent);
  for (const auto& cats : kStaticCategories) out.categories.push_back(static_cast<int>(rng.index(cats.size())));
  const auto D = static_cast<std::size_t>(days);
  out.baseline = Matrix(rl.size(), D);
  for (std::size_t r = 0; r < rl.size(); ++r) {
    const KpiModel km = kpi_model(rl[r]);
    double z = km.sigma / std::sqrt(1.0 - km.rho * km.rho) * rng.normal();
    for (std::size_t d = 0; d < D; ++d) {
      if (d > 0) z = km.rho * z + km.sigma * rng.normal();
      out.baseline(r, d) = km.multiplicative ? km.level * std::exp(z) : km.level + z;
    }
  }
  out.u_joint.resize(D);
  out.u_flip.resize(D);
  out.u_single = Matrix(n_triggers, D);
  out.magnitude = Matrix(n_triggers, D);
  for (std::size_t d = 0; d < D; ++d) {
    out.u_joint[d] = rng.uniform();
    out.u_flip[d] = rng.uniform();
    for (std::size_t j = 0; j < n_triggers; ++j) {
      out.u_single(j, d) = rng.uniform();
      out.magnitude(j, d) = rng.uniform(6.0, 12.0);
    }
  }
  return out;
}

double percentile(std::vector<double> v, double pct) {
  // Linear interpolation between closest ranks.
  std::sort(v.begin(), v.end());
  const double pos = pct / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Realization {
  std::vector<Matrix> rl;               // per link: R x days
  std::vector<std::vector<int>> joint;  // per link: joint burst day flags
  std::vector<std::vector<int>> failure;
  std::vector<double> thresholds;
  double rate = 0.0;
};

}  // namespace

std::string to_string(Combination c) { return c == Combination::And ? "AND" : "OR"; }

Combination combination_from_string(const std::string& s) {
  if (s == "AND" || s == "and") return Combination::And;
  if (s == "OR" || s == "or") return Combination::Or;
  throw ArgumentError("combination must be AND or OR, got '" + s + "'");
}

void SynthConfig::validate() const {
  if (n_links < 1) throw ArgumentError("synth.n_links must be >= 1");
  if (n_stations < 1) throw ArgumentError("synth.n_stations must be >= 1");
  if (k < 1 || n_stations < k) throw ArgumentError("synth.n_stations must be >= K");
  if (window_days < 1) throw ArgumentError("synth.window_days must be >= 1");
  if (n_days < window_days + 1) throw ArgumentError("synth.n_days must exceed window_days");
  if (!(target_failure_rate > 0.0 && target_failure_rate <= 0.5)) {
    throw ArgumentError("synth.target_failure_rate must be in (0, 0.5]");
  }
  if (failure_rule.trigger_channels.empty()) throw ArgumentError("failure rule has no trigger channels");
  if (!(failure_rule.noise_flip_prob >= 0.0 && failure_rule.noise_flip_prob <= 0.05)) {
    throw ArgumentError("failure_rule.noise_flip_prob must be in [0, 0.05]");
  }
  if (!failure_rule.thresholds.empty() &&
      failure_rule.thresholds.size() != failure_rule.trigger_channels.size()) {
    throw ArgumentError("failure_rule.thresholds must match trigger_channels");
  }
  if (!(failure_rule.threshold_percentile > 0.0 && failure_rule.threshold_percentile < 100.0)) {
    throw ArgumentError("failure_rule.threshold_percentile must be in (0, 100)");
  }
  if (distractor_ratio < 0.0) throw ArgumentError("synth.distractor_ratio must be >= 0");
  if (geometry_extent_km <= 0.0) throw ArgumentError("synth.geometry_extent_km must be > 0");
}

SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthResult result;
  SchemaConfig& schema = result.schema;
  schema.static_columns = kStaticColumns;
  schema.neighbors = cfg.k;
  schema.window_days = cfg.window_days;

  const auto& rl = schema.rl_channels;
  const auto& ws = schema.ws_channels;
  const FailureRule& rule = cfg.failure_rule;
  std::vector<std::size_t> trig;
  for (const auto& name : rule.trigger_channels) {
    const auto it = std::find(rl.begin(), rl.end(), name);
    if (it == rl.end()) throw ArgumentError("trigger channel '" + name + "' is not a generated KPI");
    trig.push_back(static_cast<std::size_t>(it - rl.begin()));
  }
  std::size_t coupled = ws.size();
  if (!cfg.coupled_ws_channel.empty()) {
    const auto it = std::find(ws.begin(), ws.end(), cfg.coupled_ws_channel);
    if (it == ws.end()) throw ArgumentError("coupled WS channel '" + cfg.coupled_ws_channel + "' unknown");
    coupled = static_cast<std::size_t>(it - ws.begin());
  }

  const auto L = static_cast<std::size_t>(cfg.n_links);
  const auto S = static_cast<std::size_t>(cfg.n_stations);
  const auto D = static_cast<std::size_t>(cfg.n_days);
  const auto n = static_cast<std::size_t>(cfg.window_days);

  std::vector<LinkDraws> links;
  for (std::size_t l = 0; l < L; ++l) {
    links.push_back(draw_link(cfg.seed, l, cfg.n_days, cfg.geometry_extent_km, rl, trig.size()));
  }
  std::vector<StationDraws> stations;
  for (std::size_t s = 0; s < S; ++s) {
    stations.push_back(draw_station(cfg.seed, s, cfg.n_days, cfg.geometry_extent_km, ws));
  }
  Matrix link_pos(L, 2), station_pos(S, 2);
  for (std::size_t l = 0; l < L; ++l) link_pos(l, 0) = links[l].x, link_pos(l, 1) = links[l].y;
  for (std::size_t s = 0; s < S; ++s) station_pos(s, 0) = stations[s].x, station_pos(s, 1) = stations[s].y;
  result.graph = knearest_stations(link_pos, station_pos, cfg.k);

  // Thresholds come from the burst-free series so they stay fixed while q is calibrated.
  std::vector<double> thresholds = rule.thresholds;
  if (thresholds.empty()) {
    for (std::size_t j = 0; j < trig.size(); ++j) {
      std::vector<double> all;
      all.reserve(L * D);
      for (std::size_t l = 0; l < L; ++l) {
        const auto row = links[l].baseline.row(trig[j]);
        all.insert(all.end(), row.begin(), row.end());
      }
      thresholds.push_back(percentile(std::move(all), rule.threshold_percentile));
    }
  }

  auto realize = [&](double q) {
    Realization out;
    for (std::size_t l = 0; l < L; ++l) {
      Matrix v = links[l].baseline;
      std::vector<int> joint(D, 0);
      for (std::size_t d = 0; d < D; ++d) {
        joint[d] = links[l].u_joint[d] < q;
        for (std::size_t j = 0; j < trig.size(); ++j) {
          const bool single = links[l].u_single(j, d) < q * cfg.distractor_ratio;
          if (joint[d] || single) {
            double& x = v(trig[j], d);
            x = x + std::abs(x) * (links[l].magnitude(j, d) - 1.0);
          }
        }
      }
      out.rl.push_back(std::move(v));
      out.joint.push_back(std::move(joint));
    }
    out.thresholds = thresholds;
    std::size_t positives = 0, windows = 0;
    for (std::size_t l = 0; l < L; ++l) {
      std::vector<int> fail(D, 0);
      for (std::size_t d = 0; d < D; ++d) {
        int fired = 0;
        if (d > 0) {
          bool all = true, any = false;
          for (std::size_t j = 0; j < trig.size(); ++j) {
            const bool above = out.rl[l](trig[j], d - 1) > out.thresholds[j];
            all = all && above;
            any = any || above;
          }
          fired = rule.combination == Combination::And ? all : any;
        }
        const bool flip = links[l].u_flip[d] < rule.noise_flip_prob;
        fail[d] = flip ? 1 - fired : fired;
      }
      for (std::size_t d = n; d < D; ++d) {
        positives += static_cast<std::size_t>(fail[d]);
        ++windows;
      }
      out.failure.push_back(std::move(fail));
    }
    out.rate = windows ? static_cast<double>(positives) / static_cast<double>(windows) : 0.0;
    return out;
  };

  const double target = cfg.target_failure_rate;
  double lo = target / 4.0, hi = std::min(1.0, target * 4.0);
  double best_q = target;
  Realization best = realize(best_q);
  for (int iter = 0; iter < 10; ++iter) {
    if (std::abs(best.rate - target) <= 0.05 * target) break;
    const double mid = std::sqrt(lo * hi);
    Realization r = realize(mid);
    (r.rate < target ? lo : hi) = mid;
    if (std::abs(r.rate - target) < std::abs(best.rate - target)) {
      best = std::move(r);
      best_q = mid;
    }
  }
  if (std::abs(best.rate - target) > 0.2 * target) {
    throw GenerationError("failure rule cannot reach target rate " + std::to_string(target) +
                          "; achieved " + std::to_string(best.rate));
  }

  // Tables.
  const Date start = parse_date(cfg.start_date);
  RawTables& t = result.tables;
  auto link_id = [](std::size_t l) { return std::to_string(l); };
  auto station_id = [](std::size_t s) { return std::to_string(1000 + s); };
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t d = 0; d < D; ++d) {
      RlRow row{link_id(l), start + std::chrono::days{static_cast<int>(d)}, {}, 0.0};
      for (std::size_t r = 0; r < rl.size(); ++r) row.kpis.push_back(best.rl[l](r, d));
      row.label = best.failure[l][d];
      t.rl.push_back(std::move(row));
    }
  }
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t d = 0; d < D; ++d) {
      Matrix m = stations[s].hourly[d];
      if (coupled < ws.size()) {
        for (std::size_t l = 0; l < L; ++l) {
          if (static_cast<std::size_t>(result.graph.neighbors[l][0]) == s && best.joint[l][d]) {
            for (std::size_t h = 0; h < 24; ++h) m(coupled, h) += 5.0;
          }
        }
      }
      for (int h = 0; h < 24; ++h) {
        WsRow row{station_id(s), start + std::chrono::days{static_cast<int>(d)}, h, {}};
        for (std::size_t w = 0; w < ws.size(); ++w) row.values.push_back(m(w, static_cast<std::size_t>(h)));
        t.ws.push_back(std::move(row));
      }
    }
  }
  for (std::size_t l = 0; l < L; ++l) {
    StaticRow row{link_id(l), {}};
    for (std::size_t c = 0; c < kStaticCategories.size(); ++c) {
      row.categories.push_back(kStaticCategories[c][static_cast<std::size_t>(links[l].categories[c])]);
    }
    t.statics.push_back(std::move(row));
    for (std::size_t s = 0; s < S; ++s) {
      t.distances.push_back({link_id(l), station_id(s),
                             euclidean_km(links[l].x, links[l].y, stations[s].x, stations[s].y)});
    }
  }
  for (std::size_t l = 0; l < L; ++l) result.graph.link_ids.push_back(link_id(l));
  for (std::size_t s = 0; s < S; ++s) result.graph.station_ids.push_back(station_id(s));

  LoadedPanel panel = assemble_panel(t, schema);
  result.dataset = make_windows(panel.panel, cfg.window_days);

  GroundTruthRelevance& truth = result.truth;
  for (const auto& name : rule.trigger_channels) {
    truth.relevant_channels.push_back(static_cast<int>(*result.dataset.channel_index(name)));
    truth.channel_names.push_back(name);
  }
  truth.relevant_timestep = cfg.window_days - 1;
  truth.thresholds = best.thresholds;
  truth.combination = rule.combination;
  truth.burst_probability = best_q;
  std::size_t pos = 0;
  for (int y : result.dataset.labels) pos += static_cast<std::size_t>(y);
  truth.realized_failure_rate =
      result.dataset.n ? static_cast<double>(pos) / static_cast<double>(result.dataset.n) : 0.0;
  return result;
}

void write_synth_outputs(const std::filesystem::path& dir, const SynthResult& result) {
  write_raw_tables(dir, result.tables, result.schema);
  nlohmann::ordered_json j;
  j["trigger_channels"] = result.truth.channel_names;
  j["trigger_channel_indices"] = result.truth.relevant_channels;
  j["thresholds"] = result.truth.thresholds;
  j["combination"] = to_string(result.truth.combination);
  j["relevant_timestep"] = result.truth.relevant_timestep;
  j["burst_probability"] = result.truth.burst_probability;
  j["realized_failure_rate"] = result.truth.realized_failure_rate;
  std::ofstream os(dir / "ground_truth.json");
  if (!os) throw IoError("cannot write ground_truth.json");
  os << j.dump(2) << '\n';
}

}  // namespace prometheus::synth
