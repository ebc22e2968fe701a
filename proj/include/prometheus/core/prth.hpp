#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace prometheus {

/// Binary tensor record: "PRTH", uint32 version, uint32 rank, uint64 dims,
/// then row-major float32 payload. All fields little-endian.
struct PrthTensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
};

inline constexpr std::uint32_t kPrthVersion = 1;

void write_prth(std::ostream& os, std::span<const std::uint64_t> dims, std::span<const double> values);
void write_prth(std::ostream& os, const PrthTensor& t);
PrthTensor read_prth(std::istream& is);

void save_prth(const std::filesystem::path& path, std::span<const std::uint64_t> dims,
               std::span<const double> values);
PrthTensor load_prth(const std::filesystem::path& path);

}  // namespace prometheus
