#pragma once

#include <stdexcept>
#include <string>

namespace prometheus {

// Every library failure derives from Error; kind() is a short machine-readable
// tag that the CLI prints verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& m) : Error("argument", m) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};
struct LoadError : Error {
  explicit LoadError(const std::string& m) : Error("load", m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error("io", m) {}
};
struct GenerationError : Error {
  explicit GenerationError(const std::string& m) : Error("generation", m) {}
};
struct TrainingError : Error {
  explicit TrainingError(const std::string& m) : Error("training", m) {}
};
struct SizeError : Error {
  explicit SizeError(const std::string& m) : Error("size", m) {}
};
struct PruningError : Error {
  explicit PruningError(const std::string& m) : Error("pruning", m) {}
};
struct DependencyError : Error {
  explicit DependencyError(const std::string& m) : Error("dependency", m) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

}  // namespace prometheus
