#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "prometheus/core/dataset.hpp"
#include "prometheus/core/station_graph.hpp"

namespace prometheus {

struct SchemaConfig {
  std::vector<std::string> rl_channels{"severely_error_second", "error_second", "unavail_second",
                                       "bbe", "rxlevmax", "capacity"};
  std::vector<std::string> ws_channels{"temperature", "precipitation", "humidity",
                                       "wind_speed",  "wind_direction", "pressure",
                                       "visibility",  "cloud_cover",    "dew_point"};
  // Hourly WS channels aggregated by daily sum instead of daily mean.
  std::vector<std::string> summed_ws_channels{"precipitation"};
  std::vector<std::string> static_columns;
  std::string label_column = "rlf";
  int neighbors = 3;
  int window_days = 4;

  void validate() const;
};

std::string channel_unit(const std::string& name);

struct RlRow {
  std::string link_id;
  Date date{};
  std::vector<double> kpis;  // NaN = missing
  double label = 0.0;        // NaN = missing
};

struct WsRow {
  std::string station_id;
  Date date{};
  int hour = 0;
  std::vector<double> values;
};

struct StaticRow {
  std::string link_id;
  std::vector<std::string> categories;
};

struct DistanceRow {
  std::string link_id;
  std::string station_id;
  double km = 0.0;
};

/// The four input tables, already parsed but not yet aligned.
struct RawTables {
  std::vector<RlRow> rl;
  std::vector<WsRow> ws;
  std::vector<StaticRow> statics;
  std::vector<DistanceRow> distances;
};

struct DatasetPaths {
  std::filesystem::path rl_kpi;
  std::filesystem::path ws;
  std::filesystem::path statics;
  std::filesystem::path distances;
};

/// Orders identifiers numerically when both are integers, else lexically.
bool id_less(const std::string& a, const std::string& b);

RawTables read_raw_tables(const DatasetPaths& paths, const SchemaConfig& schema);
void write_raw_tables(const std::filesystem::path& dir, const RawTables& tables,
                      const SchemaConfig& schema);

struct LoadedPanel {
  LinkPanel panel;
  StationGraph graph;
};

/// Aligns the tables into per-link daily series: RL KPIs, then the WS
/// channels of each of the K nearest stations (hourly rows aggregated per
/// day), with gaps forward-filled and leading gaps zero-filled.
LoadedPanel assemble_panel(const RawTables& tables, const SchemaConfig& schema);

LoadedPanel load_panel(const DatasetPaths& paths, const SchemaConfig& schema);

struct LoadedDataset {
  TimeSeriesDataset dataset;
  StationGraph graph;
  std::size_t skipped_links = 0;
};

/// load_panel followed by make_windows(schema.window_days).
LoadedDataset load_dataset(const DatasetPaths& paths, const SchemaConfig& schema);

}  // namespace prometheus
