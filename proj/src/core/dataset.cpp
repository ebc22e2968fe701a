#include "prometheus/core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include "prometheus/core/error.hpp"
#include "prometheus/core/folds.hpp"

namespace prometheus {

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Date parse_date(const std::string& iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(iso.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) {
    throw LoadError("invalid ISO-8601 date '" + iso + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw LoadError("invalid calendar date '" + iso + "'");
  return Date{ymd};
}

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::RlKpi: return "RL_KPI";
    case ChannelKind::Ws: return "WS";
    case ChannelKind::Positional: return "POSITIONAL";
    case ChannelKind::DerivedWs: return "DERIVED_WS";
  }
  return "RL_KPI";
}

ChannelKind channel_kind_from_string(const std::string& s) {
  if (s == "RL_KPI") return ChannelKind::RlKpi;
  if (s == "WS") return ChannelKind::Ws;
  if (s == "POSITIONAL") return ChannelKind::Positional;
  if (s == "DERIVED_WS") return ChannelKind::DerivedWs;
  throw ArgumentError("unknown channel kind '" + s + "'");
}

ChannelMeta positional_channel() {
  return ChannelMeta{"position", ChannelKind::Positional, "", false, -1, "position"};
}

std::optional<std::size_t> TimeSeriesDataset::channel_index(const std::string& name) const {
  for (std::size_t c = 0; c < channel_meta.size(); ++c) {
    if (channel_meta[c].name == name) return c;
  }
  return std::nullopt;
}

void TimeSeriesDataset::validate() const {
  if (values.size() != n * channels * steps) {
    throw ShapeError("dataset values hold " + std::to_string(values.size()) +
                     " entries, expected " + std::to_string(n * channels * steps));
  }
  if (labels.size() != n) throw ShapeError("label vector length differs from N");
  if (channel_meta.size() != channels) throw ShapeError("channel_meta length differs from C");
  if (instance_meta.size() != n) throw ShapeError("instance_meta length differs from N");
  if (static_features.size() != n * static_dim()) {
    throw ShapeError("static feature matrix is not N x S");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw ArgumentError("labels must be 0 or 1");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ArgumentError("dataset contains NaN/Inf");
  }
  for (const auto& m : channel_meta) {
    if (m.kind == ChannelKind::Positional && m.prunable) {
      throw ArgumentError("positional channel '" + m.name + "' must not be prunable");
    }
  }
}

void InstanceBatch::reserve(std::size_t n) {
  values.reserve(n * channels * steps);
  statics.reserve(n * static_dim);
}

void InstanceBatch::push(const Instance& x) {
  if (x.values.rows() != channels || x.values.cols() != steps) {
    throw ShapeError("instance is " + std::to_string(x.values.rows()) + "x" +
                     std::to_string(x.values.cols()) + ", batch expects " +
                     std::to_string(channels) + "x" + std::to_string(steps));
  }
  if (x.statics.size() != static_dim) {
    throw ShapeError("instance static length " + std::to_string(x.statics.size()) +
                     " != " + std::to_string(static_dim));
  }
  values.insert(values.end(), x.values.data().begin(), x.values.data().end());
  statics.insert(statics.end(), x.statics.begin(), x.statics.end());
  ++size;
}

Instance InstanceBatch::instance(std::size_t i) const {
  Instance x;
  const auto begin = values.begin() + static_cast<std::ptrdiff_t>(i * channels * steps);
  x.values = Matrix(channels, steps,
                    std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(channels * steps)));
  const auto sb = statics.begin() + static_cast<std::ptrdiff_t>(i * static_dim);
  x.statics.assign(sb, sb + static_cast<std::ptrdiff_t>(static_dim));
  return x;
}

Instance gather_instance(const TimeSeriesDataset& data, std::size_t i,
                         std::span<const int> channels, bool with_static) {
  Instance x;
  x.values = Matrix(channels.size(), data.steps);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto src = static_cast<std::size_t>(channels[c]);
    if (src >= data.channels) throw ShapeError("channel index out of range");
    for (std::size_t t = 0; t < data.steps; ++t) x.values(c, t) = data.at(i, src, t);
  }
  if (with_static) {
    const auto s = data.statics(i);
    x.statics.assign(s.begin(), s.end());
  }
  return x;
}

InstanceBatch gather_batch(const TimeSeriesDataset& data, std::span<const std::size_t> rows,
                           std::span<const int> channels, bool with_static) {
  InstanceBatch b(channels.size(), data.steps, with_static ? data.static_dim() : 0);
  b.reserve(rows.size());
  for (std::size_t r : rows) {
    for (int c : channels) {
      if (c < 0 || static_cast<std::size_t>(c) >= data.channels) {
        throw ShapeError("channel index " + std::to_string(c) + " out of range");
      }
      const double* src = data.values.data() + (r * data.channels + static_cast<std::size_t>(c)) * data.steps;
      b.values.insert(b.values.end(), src, src + data.steps);
    }
    if (with_static) {
      const auto s = data.statics(r);
      b.statics.insert(b.statics.end(), s.begin(), s.end());
    }
    ++b.size;
  }
  return b;
}

TimeSeriesDataset make_windows(const LinkPanel& panel, int n_days, std::size_t* skipped_links) {
  if (n_days < 1) throw ArgumentError("n_days must be >= 1");
  const auto T = static_cast<std::size_t>(n_days);
  const std::size_t C_raw = panel.channels.size();

  TimeSeriesDataset out;
  out.channels = C_raw + 1;
  out.steps = T;
  out.channel_meta = panel.channels;
  out.channel_meta.push_back(positional_channel());
  out.static_names = panel.static_names;

  struct Pending {
    Date end;
    std::size_t link;
    std::size_t day;
  };
  std::vector<Pending> pending;
  std::size_t skipped = 0;
  for (std::size_t l = 0; l < panel.links.size(); ++l) {
    const LinkSeries& s = panel.links[l];
    if (s.values.rows() != C_raw) throw ShapeError("link " + s.link_id + " channel count mismatch");
    const std::size_t days = s.values.cols();
    if (days < T + 1) {
      ++skipped;
      continue;
    }
    for (std::size_t d = T - 1; d + 1 < days; ++d) {
      pending.push_back({s.first_day + std::chrono::days{static_cast<int>(d)}, l, d});
    }
  }
  if (skipped_links) *skipped_links = skipped;

  std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    return std::tie(a.end, a.link) < std::tie(b.end, b.link);
  });

  out.n = pending.size();
  out.values.resize(out.n * out.channels * T);
  out.labels.resize(out.n);
  out.instance_meta.resize(out.n);
  out.static_features.resize(out.n * out.static_dim());

  std::size_t day_index = 0;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const Pending& p = pending[i];
    if (i > 0 && pending[i - 1].end != p.end) ++day_index;
    const LinkSeries& s = panel.links[p.link];
    const std::size_t start = p.day + 1 - T;
    for (std::size_t c = 0; c < C_raw; ++c) {
      for (std::size_t t = 0; t < T; ++t) out.at(i, c, t) = s.values(c, start + t);
    }
    for (std::size_t t = 0; t < T; ++t) {
      out.at(i, C_raw, t) = static_cast<double>(t + 1) / static_cast<double>(T);
    }
    out.labels[i] = s.failure[p.day + 1];
    out.instance_meta[i] = {s.link_id, p.end, day_index};
    if (out.static_dim() > 0) {
      if (s.static_features.size() != out.static_dim()) {
        throw ShapeError("link " + s.link_id + " static vector length mismatch");
      }
      std::copy(s.static_features.begin(), s.static_features.end(),
                out.static_features.begin() + static_cast<std::ptrdiff_t>(i * out.static_dim()));
    }
  }
  out.time_extent = pending.empty() ? 0 : day_index + 1;
  return out;
}

namespace {

bool degenerate(double mean, double sd) { return !(sd > 1e-12 * std::max(1.0, std::abs(mean))); }

}  // namespace

std::pair<TimeSeriesDataset, NormStats> normalize(const TimeSeriesDataset& data,
                                                  const FoldSpec& fold) {
  const SplitIndices split = split_instances(data, fold);
  NormStats stats;
  stats.mean.assign(data.channels, 0.0);
  stats.stddev.assign(data.channels, 0.0);
  const double count = static_cast<double>(split.train.size() * data.steps);
  if (count > 0) {
    for (std::size_t c = 0; c < data.channels; ++c) {
      double sum = 0.0;
      for (std::size_t i : split.train) {
        for (std::size_t t = 0; t < data.steps; ++t) sum += data.at(i, c, t);
      }
      const double mean = sum / count;
      double ss = 0.0;
      for (std::size_t i : split.train) {
        for (std::size_t t = 0; t < data.steps; ++t) {
          const double d = data.at(i, c, t) - mean;
          ss += d * d;
        }
      }
      stats.mean[c] = mean;
      stats.stddev[c] = std::sqrt(ss / count);
    }
  }
  return {apply_normalization(data, stats), std::move(stats)};
}

TimeSeriesDataset apply_normalization(const TimeSeriesDataset& data, const NormStats& stats) {
  if (stats.mean.size() != data.channels || stats.stddev.size() != data.channels) {
    throw ShapeError("normalization stats do not match channel count");
  }
  TimeSeriesDataset out = data;
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t c = 0; c < data.channels; ++c) {
      const double m = stats.mean[c], s = stats.stddev[c];
      for (std::size_t t = 0; t < data.steps; ++t) {
        double& v = out.at(i, c, t);
        v = degenerate(m, s) ? 0.0 : (v - m) / s;
      }
    }
  }
  return out;
}

TimeSeriesDataset denormalize(const TimeSeriesDataset& data, const NormStats& stats) {
  if (stats.mean.size() != data.channels) throw ShapeError("normalization stats do not match");
  TimeSeriesDataset out = data;
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t c = 0; c < data.channels; ++c) {
      const double m = stats.mean[c], s = stats.stddev[c];
      for (std::size_t t = 0; t < data.steps; ++t) {
        double& v = out.at(i, c, t);
        v = degenerate(m, s) ? m : v * s + m;
      }
    }
  }
  return out;
}

TimeSeriesDataset derive_ws_statistics(const TimeSeriesDataset& data) {
  // base name -> channel indices across neighbours, in first-seen order
  std::vector<std::string> bases;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t c = 0; c < data.channels; ++c) {
    const auto& m = data.channel_meta[c];
    if (m.kind != ChannelKind::Ws) continue;
    if (!members.count(m.base_name)) bases.push_back(m.base_name);
    members[m.base_name].push_back(c);
  }
  static const char* kStats[] = {"mean", "min", "max", "std"};
  const std::size_t extra = bases.size() * 4;

  std::vector<std::size_t> keep;  // every non-positional channel first
  std::vector<std::size_t> positional;
  for (std::size_t c = 0; c < data.channels; ++c) {
    (data.channel_meta[c].kind == ChannelKind::Positional ? positional : keep).push_back(c);
  }

  TimeSeriesDataset out = data;
  out.channels = data.channels + extra;
  out.channel_meta.clear();
  for (std::size_t c : keep) out.channel_meta.push_back(data.channel_meta[c]);
  for (const auto& b : bases) {
    const auto& src = data.channel_meta[members[b].front()];
    for (const char* st : kStats) {
      out.channel_meta.push_back(
          ChannelMeta{b + "_" + st, ChannelKind::DerivedWs, src.unit, true, -1, b + "_" + st});
    }
  }
  for (std::size_t c : positional) out.channel_meta.push_back(data.channel_meta[c]);

  out.values.assign(out.n * out.channels * out.steps, 0.0);
  for (std::size_t i = 0; i < data.n; ++i) {
    std::size_t dst = 0;
    for (std::size_t c : keep) {
      for (std::size_t t = 0; t < data.steps; ++t) out.at(i, dst, t) = data.at(i, c, t);
      ++dst;
    }
    for (const auto& b : bases) {
      const auto& idx = members[b];
      for (std::size_t t = 0; t < data.steps; ++t) {
        double sum = 0.0, lo = data.at(i, idx[0], t), hi = lo;
        for (std::size_t c : idx) {
          const double v = data.at(i, c, t);
          sum += v;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        const double mean = sum / static_cast<double>(idx.size());
        double ss = 0.0;
        for (std::size_t c : idx) ss += (data.at(i, c, t) - mean) * (data.at(i, c, t) - mean);
        out.at(i, dst, t) = mean;
        out.at(i, dst + 1, t) = lo;
        out.at(i, dst + 2, t) = hi;
        out.at(i, dst + 3, t) = std::sqrt(ss / static_cast<double>(idx.size()));
      }
      dst += 4;
    }
    for (std::size_t c : positional) {
      for (std::size_t t = 0; t < data.steps; ++t) out.at(i, dst, t) = data.at(i, c, t);
      ++dst;
    }
  }
  return out;
}

}  // namespace prometheus
