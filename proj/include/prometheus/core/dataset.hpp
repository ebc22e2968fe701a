#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prometheus/core/matrix.hpp"

namespace prometheus {

using Date = std::chrono::sys_days;

std::string format_date(Date d);
Date parse_date(const std::string& iso);  // YYYY-MM-DD, throws LoadError

enum class ChannelKind { RlKpi, Ws, Positional, DerivedWs };

std::string to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(const std::string& s);

struct ChannelMeta {
  std::string name;
  ChannelKind kind = ChannelKind::RlKpi;
  std::string unit;
  bool prunable = true;
  // WS channels are replicated once per neighbouring station; `neighbor` is
  // the station's rank (0 = nearest) and `base_name` the un-suffixed name.
  int neighbor = -1;
  std::string base_name;

  friend bool operator==(const ChannelMeta&, const ChannelMeta&) = default;
};

ChannelMeta positional_channel();

struct InstanceMeta {
  std::string link_id;
  Date window_end{};
  std::size_t day_index = 0;  // position of window_end on the dataset's time axis
};

/// One link's daily series before windowing: values are channels x days.
struct LinkSeries {
  std::string link_id;
  Date first_day{};
  Matrix values;
  std::vector<int> failure;  // per day
  std::vector<double> static_features;
};

struct LinkPanel {
  std::vector<ChannelMeta> channels;
  std::vector<std::string> static_names;
  std::vector<LinkSeries> links;
};

/// N instances x C channels x T steps, stored contiguously (instance-major).
struct TimeSeriesDataset {
  std::size_t n = 0;
  std::size_t channels = 0;
  std::size_t steps = 0;
  std::vector<double> values;
  std::vector<int> labels;
  std::vector<ChannelMeta> channel_meta;
  std::vector<InstanceMeta> instance_meta;
  std::vector<std::string> static_names;
  std::vector<double> static_features;  // n x static_dim
  std::size_t time_extent = 0;          // number of distinct window_end dates

  std::size_t static_dim() const { return static_names.size(); }
  double at(std::size_t i, std::size_t c, std::size_t t) const {
    return values[(i * channels + c) * steps + t];
  }
  double& at(std::size_t i, std::size_t c, std::size_t t) {
    return values[(i * channels + c) * steps + t];
  }
  std::span<const double> statics(std::size_t i) const {
    return {static_features.data() + i * static_dim(), static_dim()};
  }
  std::optional<std::size_t> channel_index(const std::string& name) const;

  // Throws ShapeError/ArgumentError when any structural invariant is broken.
  void validate() const;
};

/// A single explained or evaluated input: channels x steps plus the static
/// vector (possibly empty).
struct Instance {
  Matrix values;
  std::vector<double> statics;
};

/// Contiguous batch of instances in a model's input-channel view.
struct InstanceBatch {
  std::size_t size = 0;
  std::size_t channels = 0;
  std::size_t steps = 0;
  std::size_t static_dim = 0;
  std::vector<double> values;   // size x channels x steps
  std::vector<double> statics;  // size x static_dim

  InstanceBatch() = default;
  InstanceBatch(std::size_t channels, std::size_t steps, std::size_t static_dim)
      : channels(channels), steps(steps), static_dim(static_dim) {}

  void reserve(std::size_t n);
  void push(const Instance& x);
  Instance instance(std::size_t i) const;
  double at(std::size_t i, std::size_t c, std::size_t t) const {
    return values[(i * channels + c) * steps + t];
  }
};

/// Extracts instance `i` restricted to `channels` (dataset indices).
Instance gather_instance(const TimeSeriesDataset& data, std::size_t i,
                         std::span<const int> channels, bool with_static);

InstanceBatch gather_batch(const TimeSeriesDataset& data, std::span<const std::size_t> rows,
                           std::span<const int> channels, bool with_static);

/// Slides an n_days window over every link. The instance ending at day d is
/// labelled with the failure indicator of day d+1; a POSITIONAL channel is
/// appended. Links shorter than n_days+1 days are skipped and counted.
TimeSeriesDataset make_windows(const LinkPanel& panel, int n_days,
                               std::size_t* skipped_links = nullptr);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

struct FoldSpec;

/// Per-channel z-score fitted on the fold's training range only. Channels with
/// zero training variance map to all zeros.
std::pair<TimeSeriesDataset, NormStats> normalize(const TimeSeriesDataset& data,
                                                  const FoldSpec& fold);
TimeSeriesDataset apply_normalization(const TimeSeriesDataset& data, const NormStats& stats);
TimeSeriesDataset denormalize(const TimeSeriesDataset& data, const NormStats& stats);

/// Appends DERIVED_WS channels (mean/min/max/std across neighbouring stations)
/// for every WS base channel, inserted before the positional channel.
TimeSeriesDataset derive_ws_statistics(const TimeSeriesDataset& data);

}  // namespace prometheus
