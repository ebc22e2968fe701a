#include "prometheus/core/loader.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "prometheus/core/csv.hpp"
#include "prometheus/core/error.hpp"

namespace prometheus {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void forward_fill(std::span<double> row) {
  double last = kNaN;
  for (double& v : row) {
    if (std::isnan(v)) {
      v = std::isnan(last) ? 0.0 : last;
    } else {
      last = v;
    }
  }
}

std::vector<std::string> sorted_ids(std::set<std::string> ids) {
  std::vector<std::string> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end(), id_less);
  return out;
}

}  // namespace

bool id_less(const std::string& a, const std::string& b) {
  if (all_digits(a) && all_digits(b)) {
    const auto za = a.find_first_not_of('0'), zb = b.find_first_not_of('0');
    const std::string ta = za == std::string::npos ? "" : a.substr(za);
    const std::string tb = zb == std::string::npos ? "" : b.substr(zb);
    if (ta.size() != tb.size()) return ta.size() < tb.size();
    if (ta != tb) return ta < tb;
  }
  return a < b;
}

void SchemaConfig::validate() const {
  if (rl_channels.size() < 6 || rl_channels.size() > 8) {
    throw ArgumentError("schema must declare 6 to 8 radio-link KPI channels");
  }
  if (ws_channels.empty()) throw ArgumentError("schema declares no weather-station channels");
  if (neighbors < 1) throw ArgumentError("schema.neighbors must be >= 1");
  if (window_days < 1) throw ArgumentError("schema.window_days must be >= 1");
}

std::string channel_unit(const std::string& name) {
  static const std::map<std::string, std::string> units{
      {"severely_error_second", "s"}, {"error_second", "s"},    {"unavail_second", "s"},
      {"bbe", "count"},               {"rxlevmax", "dBm"},      {"capacity", "Mbps"},
      {"temperature", "degC"},        {"precipitation", "mm"},  {"humidity", "%"},
      {"wind_speed", "m/s"},          {"wind_direction", "deg"}, {"pressure", "hPa"},
      {"visibility", "km"},           {"cloud_cover", "%"},     {"dew_point", "degC"}};
  const auto it = units.find(name);
  return it == units.end() ? "" : it->second;
}

RawTables read_raw_tables(const DatasetPaths& paths, const SchemaConfig& schema) {
  schema.validate();
  RawTables t;

  {
    const CsvTable csv = read_csv(paths.rl_kpi);
    const auto link = csv.column("link_id");
    const auto date = csv.column("date");
    std::vector<std::size_t> cols;
    for (const auto& c : schema.rl_channels) cols.push_back(csv.column(c));
    const auto label = csv.column(schema.label_column);
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      const auto& row = csv.rows[r];
      RlRow out{row[link], parse_date(row[date]), {}, 0.0};
      for (std::size_t k = 0; k < cols.size(); ++k) {
        out.kpis.push_back(parse_cell(row[cols[k]], schema.rl_channels[k], r + 2));
      }
      out.label = parse_cell(row[label], schema.label_column, r + 2);
      if (!std::isnan(out.label) && out.label != 0.0 && out.label != 1.0) {
        throw LoadError("column \"" + schema.label_column + "\" row " + std::to_string(r + 2) +
                        ": label must be 0 or 1");
      }
      t.rl.push_back(std::move(out));
    }
  }
  {
    const CsvTable csv = read_csv(paths.ws);
    const auto station = csv.column("station_id");
    const auto date = csv.column("date");
    const auto hour = csv.column("hour");
    std::vector<std::size_t> cols;
    for (const auto& c : schema.ws_channels) cols.push_back(csv.column(c));
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      const auto& row = csv.rows[r];
      const double h = parse_cell(row[hour], "hour", r + 2);
      if (std::isnan(h) || h < 0 || h > 23) {
        throw LoadError("column \"hour\" row " + std::to_string(r + 2) + ": hour must be 0..23");
      }
      WsRow out{row[station], parse_date(row[date]), static_cast<int>(h), {}};
      for (std::size_t k = 0; k < cols.size(); ++k) {
        out.values.push_back(parse_cell(row[cols[k]], schema.ws_channels[k], r + 2));
      }
      t.ws.push_back(std::move(out));
    }
  }
  if (!paths.statics.empty()) {
    const CsvTable csv = read_csv(paths.statics);
    const auto link = csv.column("link_id");
    std::vector<std::size_t> cols;
    for (const auto& c : schema.static_columns) cols.push_back(csv.column(c));
    for (const auto& row : csv.rows) {
      StaticRow out{row[link], {}};
      for (auto c : cols) out.categories.push_back(row[c]);
      t.statics.push_back(std::move(out));
    }
  } else if (!schema.static_columns.empty()) {
    throw LoadError("schema declares static columns but no static.csv was given");
  }
  {
    const CsvTable csv = read_csv(paths.distances);
    const auto link = csv.column("link_id");
    const auto station = csv.column("station_id");
    const auto km = csv.column("distance_km");
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      const auto& row = csv.rows[r];
      const double d = parse_cell(row[km], "distance_km", r + 2);
      if (std::isnan(d) || d < 0) {
        throw LoadError("column \"distance_km\" row " + std::to_string(r + 2) +
                        ": distance must be a non-negative number");
      }
      t.distances.push_back({row[link], row[station], d});
    }
  }
  return t;
}

void write_raw_tables(const std::filesystem::path& dir, const RawTables& t,
                      const SchemaConfig& schema) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream os(dir / name);
    if (!os) throw IoError("cannot write " + (dir / name).string());
    return os;
  };
  {
    auto os = open("rl_kpi.csv");
    std::vector<std::string> h{"link_id", "date"};
    h.insert(h.end(), schema.rl_channels.begin(), schema.rl_channels.end());
    h.push_back(schema.label_column);
    write_csv_row(os, h);
    for (const auto& r : t.rl) {
      std::vector<std::string> cells{r.link_id, format_date(r.date)};
      for (double v : r.kpis) cells.push_back(format_double(v));
      cells.push_back(std::isnan(r.label) ? "" : (r.label != 0.0 ? "1" : "0"));
      write_csv_row(os, cells);
    }
  }
  {
    auto os = open("ws.csv");
    std::vector<std::string> h{"station_id", "date", "hour"};
    h.insert(h.end(), schema.ws_channels.begin(), schema.ws_channels.end());
    write_csv_row(os, h);
    for (const auto& r : t.ws) {
      std::vector<std::string> cells{r.station_id, format_date(r.date), std::to_string(r.hour)};
      for (double v : r.values) cells.push_back(format_double(v));
      write_csv_row(os, cells);
    }
  }
  {
    auto os = open("static.csv");
    std::vector<std::string> h{"link_id"};
    h.insert(h.end(), schema.static_columns.begin(), schema.static_columns.end());
    write_csv_row(os, h);
    for (const auto& r : t.statics) {
      std::vector<std::string> cells{r.link_id};
      cells.insert(cells.end(), r.categories.begin(), r.categories.end());
      write_csv_row(os, cells);
    }
  }
  {
    auto os = open("distances.csv");
    write_csv_row(os, {"link_id", "station_id", "distance_km"});
    for (const auto& r : t.distances) {
      write_csv_row(os, {r.link_id, r.station_id, format_double(r.km)});
    }
  }
}

LoadedPanel assemble_panel(const RawTables& t, const SchemaConfig& schema) {
  schema.validate();
  if (t.rl.empty()) throw LoadError("rl_kpi table is empty");
  if (t.ws.empty()) throw LoadError("ws table is empty");

  const std::size_t R = schema.rl_channels.size();
  const std::size_t W = schema.ws_channels.size();
  const auto K = static_cast<std::size_t>(schema.neighbors);

  std::set<std::string> link_set, station_set;
  for (const auto& r : t.rl) link_set.insert(r.link_id);
  for (const auto& r : t.ws) station_set.insert(r.station_id);
  const auto link_ids = sorted_ids(link_set);
  const auto station_ids = sorted_ids(station_set);
  std::map<std::string, std::size_t> link_index, station_index;
  for (std::size_t i = 0; i < link_ids.size(); ++i) link_index[link_ids[i]] = i;
  for (std::size_t i = 0; i < station_ids.size(); ++i) station_index[station_ids[i]] = i;

  // Daily WS series per station, hourly rows aggregated in hour order.
  std::vector<bool> summed(W, false);
  for (std::size_t k = 0; k < W; ++k) {
    summed[k] = std::find(schema.summed_ws_channels.begin(), schema.summed_ws_channels.end(),
                          schema.ws_channels[k]) != schema.summed_ws_channels.end();
  }
  std::vector<const WsRow*> ws_sorted;
  ws_sorted.reserve(t.ws.size());
  for (const auto& r : t.ws) ws_sorted.push_back(&r);
  std::stable_sort(ws_sorted.begin(), ws_sorted.end(), [&](const WsRow* a, const WsRow* b) {
    const auto sa = station_index[a->station_id], sb = station_index[b->station_id];
    if (sa != sb) return sa < sb;
    if (a->date != b->date) return a->date < b->date;
    return a->hour < b->hour;
  });
  std::vector<std::map<Date, std::vector<double>>> station_daily(station_ids.size());
  {
    std::size_t i = 0;
    while (i < ws_sorted.size()) {
      const WsRow* head = ws_sorted[i];
      std::vector<double> sum(W, 0.0);
      std::vector<int> count(W, 0);
      std::size_t j = i;
      while (j < ws_sorted.size() && ws_sorted[j]->station_id == head->station_id &&
             ws_sorted[j]->date == head->date) {
        if (ws_sorted[j]->values.size() != W) throw LoadError("ws row has wrong channel count");
        for (std::size_t k = 0; k < W; ++k) {
          const double v = ws_sorted[j]->values[k];
          if (std::isnan(v)) continue;
          sum[k] += v;
          ++count[k];
        }
        ++j;
      }
      std::vector<double> daily(W, kNaN);
      for (std::size_t k = 0; k < W; ++k) {
        if (count[k] > 0) daily[k] = summed[k] ? sum[k] : sum[k] / count[k];
      }
      station_daily[station_index[head->station_id]][head->date] = std::move(daily);
      i = j;
    }
  }

  // Neighbour map from the distance table.
  StationGraph graph;
  graph.link_ids = link_ids;
  graph.station_ids = station_ids;
  std::vector<std::vector<std::pair<double, int>>> cand(link_ids.size());
  for (const auto& d : t.distances) {
    const auto li = link_index.find(d.link_id);
    const auto si = station_index.find(d.station_id);
    if (li == link_index.end() || si == station_index.end()) continue;
    cand[li->second].push_back({d.km, static_cast<int>(si->second)});
  }
  graph.neighbors.resize(link_ids.size());
  for (std::size_t l = 0; l < link_ids.size(); ++l) {
    auto& c = cand[l];
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end(),
                        [](const auto& a, const auto& b) { return a.second == b.second; }),
            c.end());
    if (c.size() < K) {
      throw LoadError("link " + link_ids[l] + " has distances to " + std::to_string(c.size()) +
                      " stations, need " + std::to_string(K));
    }
    for (std::size_t k = 0; k < K; ++k) graph.neighbors[l].push_back(c[k].second);
  }

  LoadedPanel out;
  LinkPanel& panel = out.panel;
  for (const auto& name : schema.rl_channels) {
    panel.channels.push_back(ChannelMeta{name, ChannelKind::RlKpi, channel_unit(name), true, -1, name});
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (const auto& name : schema.ws_channels) {
      panel.channels.push_back(ChannelMeta{name + "@k" + std::to_string(k), ChannelKind::Ws,
                                           channel_unit(name), true, static_cast<int>(k), name});
    }
  }

  // Static one-hot encoding, categories sorted per column.
  std::map<std::string, const StaticRow*> static_by_link;
  std::vector<std::vector<std::string>> categories(schema.static_columns.size());
  {
    std::vector<std::set<std::string>> seen(schema.static_columns.size());
    for (const auto& r : t.statics) {
      if (r.categories.size() != schema.static_columns.size()) {
        throw LoadError("static row for link " + r.link_id + " has wrong column count");
      }
      static_by_link[r.link_id] = &r;
      for (std::size_t c = 0; c < r.categories.size(); ++c) seen[c].insert(r.categories[c]);
    }
    for (std::size_t c = 0; c < seen.size(); ++c) {
      categories[c].assign(seen[c].begin(), seen[c].end());
      for (const auto& v : categories[c]) panel.static_names.push_back(schema.static_columns[c] + "=" + v);
    }
  }

  // Per-link RL rows.
  std::vector<std::vector<const RlRow*>> rl_by_link(link_ids.size());
  for (const auto& r : t.rl) {
    if (r.kpis.size() != R) throw LoadError("rl row has wrong KPI count");
    rl_by_link[link_index[r.link_id]].push_back(&r);
  }

  for (std::size_t l = 0; l < link_ids.size(); ++l) {
    auto& rows = rl_by_link[l];
    Date first = rows.front()->date, last = first;
    for (const auto* r : rows) {
      first = std::min(first, r->date);
      last = std::max(last, r->date);
    }
    const auto days = static_cast<std::size_t>((last - first).count()) + 1;
    LinkSeries s;
    s.link_id = link_ids[l];
    s.first_day = first;
    s.values = Matrix(panel.channels.size(), days, kNaN);
    s.failure.assign(days, 0);
    for (const auto* r : rows) {
      const auto d = static_cast<std::size_t>((r->date - first).count());
      for (std::size_t k = 0; k < R; ++k) s.values(k, d) = r->kpis[k];
      s.failure[d] = (!std::isnan(r->label) && r->label != 0.0) ? 1 : 0;
    }
    for (std::size_t k = 0; k < K; ++k) {
      const auto& daily = station_daily[static_cast<std::size_t>(graph.neighbors[l][k])];
      for (std::size_t d = 0; d < days; ++d) {
        const auto it = daily.find(first + std::chrono::days{static_cast<int>(d)});
        if (it == daily.end()) continue;
        for (std::size_t w = 0; w < W; ++w) s.values(R + k * W + w, d) = it->second[w];
      }
    }
    for (std::size_t c = 0; c < s.values.rows(); ++c) forward_fill(s.values.row(c));

    s.static_features.assign(panel.static_names.size(), 0.0);
    if (const auto it = static_by_link.find(link_ids[l]); it != static_by_link.end()) {
      std::size_t offset = 0;
      for (std::size_t c = 0; c < categories.size(); ++c) {
        const auto& cats = categories[c];
        const auto pos = std::lower_bound(cats.begin(), cats.end(), it->second->categories[c]);
        s.static_features[offset + static_cast<std::size_t>(pos - cats.begin())] = 1.0;
        offset += cats.size();
      }
    }
    panel.links.push_back(std::move(s));
  }
  out.graph = std::move(graph);
  return out;
}

LoadedPanel load_panel(const DatasetPaths& paths, const SchemaConfig& schema) {
  return assemble_panel(read_raw_tables(paths, schema), schema);
}

LoadedDataset load_dataset(const DatasetPaths& paths, const SchemaConfig& schema) {
  LoadedPanel p = load_panel(paths, schema);
  LoadedDataset out;
  out.dataset = make_windows(p.panel, schema.window_days, &out.skipped_links);
  out.graph = std::move(p.graph);
  return out;
}

}  // namespace prometheus
