#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace prometheus {

std::uint64_t splitmix64(std::uint64_t x);

/// Mixes a stream index into a base seed. Used wherever a parent seed fans out
/// into independent child streams (permutations, epochs, calibration draws).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Seeded generator whose draws are identical on every platform: the engine
/// is mt19937_64 and all distributions are computed here rather than through
/// the implementation-defined <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::size_t index(std::size_t n);  // uniform in [0, n)

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace prometheus
