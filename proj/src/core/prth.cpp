#include "prometheus/core/prth.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "prometheus/core/error.hpp"

namespace prometheus {

namespace {

template <class U>
void put_le(std::ostream& os, U v) {
  unsigned char b[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), sizeof b);
}

template <class U>
U get_le(std::istream& is) {
  unsigned char b[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof b)) throw IoError("truncated PRTH record");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

void write_header(std::ostream& os, std::span<const std::uint64_t> dims) {
  os.write("PRTH", 4);
  put_le<std::uint32_t>(os, kPrthVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put_le<std::uint64_t>(os, d);
}

std::size_t product(std::span<const std::uint64_t> dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

}  // namespace

std::size_t PrthTensor::element_count() const { return product(dims); }

void write_prth(std::ostream& os, std::span<const std::uint64_t> dims, std::span<const double> values) {
  if (product(dims) != values.size()) throw ShapeError("PRTH dims do not match payload length");
  write_header(os, dims);
  for (double v : values) put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

void write_prth(std::ostream& os, const PrthTensor& t) {
  if (t.element_count() != t.data.size()) throw ShapeError("PRTH dims do not match payload length");
  write_header(os, t.dims);
  for (float v : t.data) put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(v));
}

PrthTensor read_prth(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "PRTH", 4) != 0) {
    throw LoadError("not a PRTH tensor record");
  }
  const auto version = get_le<std::uint32_t>(is);
  if (version != kPrthVersion) {
    throw LoadError("unsupported PRTH version " + std::to_string(version));
  }
  const auto rank = get_le<std::uint32_t>(is);
  PrthTensor t;
  for (std::uint32_t i = 0; i < rank; ++i) t.dims.push_back(get_le<std::uint64_t>(is));
  t.data.resize(t.element_count());
  for (auto& v : t.data) v = std::bit_cast<float>(get_le<std::uint32_t>(is));
  return t;
}

void save_prth(const std::filesystem::path& path, std::span<const std::uint64_t> dims,
               std::span<const double> values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  write_prth(os, dims, values);
}

PrthTensor load_prth(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_prth(is);
}

}  // namespace prometheus
