#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <unistd.h>

#include "prometheus/core/dataset.hpp"

namespace testing {

// Scratch directory removed when the test ends.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("prometheus_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// One-channel panel: link l has `days` days valued l*100 + day.
inline prometheus::LinkPanel ramp_panel(std::size_t links, std::size_t days) {
  prometheus::LinkPanel panel;
  panel.channels.push_back({"x", prometheus::ChannelKind::RlKpi, "", true, -1, "x"});
  for (std::size_t l = 0; l < links; ++l) {
    prometheus::LinkSeries s;
    s.link_id = std::to_string(l);
    s.first_day = prometheus::parse_date("2024-01-01");
    s.values = prometheus::Matrix(1, days);
    s.failure.assign(days, 0);
    for (std::size_t d = 0; d < days; ++d) {
      s.values(0, d) = static_cast<double>(l * 100 + d);
      s.failure[d] = static_cast<int>(d % 3 == 0);
    }
    panel.links.push_back(std::move(s));
  }
  return panel;
}

}  // namespace testing
