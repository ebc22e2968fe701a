#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace prometheus::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Per-stage record of what was read and written. Paths are stored relative
/// to the run directory so two runs in different directories compare equal.
struct Manifest {
  std::string stage;
  std::string fold;  // empty for fold-independent stages
  std::string config_sha256;
  nlohmann::ordered_json seeds;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
};

void write_manifest(const std::filesystem::path& run_dir, const std::filesystem::path& stage_dir,
                    const Manifest& manifest);

/// Exclusive lock on a run directory, released on destruction. Throws
/// IoError when another invocation holds it.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& run_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace prometheus::pipeline
