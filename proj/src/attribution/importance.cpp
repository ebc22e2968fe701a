#include "prometheus/attribution/importance.hpp"

#include <cmath>

#include "prometheus/core/error.hpp"

namespace prometheus::attribution {

namespace {

void check_alpha(int alpha) {
  if (alpha != 0 && alpha != 1) throw ArgumentError("alpha must be 0 or 1");
}

}  // namespace

std::vector<std::size_t> select_tp(std::span<const double> probabilities, std::span<const int> labels,
                                   double threshold) {
  if (probabilities.size() != labels.size()) {
    throw ArgumentError("select_tp: " + std::to_string(probabilities.size()) + " probabilities vs " +
                        std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1 && probabilities[i] >= threshold) out.push_back(i);
  }
  return out;
}

std::vector<double> local_aggregate(const explain::SaliencyMap& map, int alpha) {
  check_alpha(alpha);
  std::vector<double> psi(map.phi.rows(), 0.0);
  for (std::size_t c = 0; c < map.phi.rows(); ++c) {
    for (double v : map.phi.row(c)) psi[c] += alpha == 0 ? v : std::abs(v);
  }
  return psi;
}

ChannelImportance global_aggregate(std::span<const explain::SaliencyMap> maps, int alpha) {
  check_alpha(alpha);
  if (maps.empty()) throw ArgumentError("global_aggregate needs at least one saliency map");
  const std::size_t c = maps.front().phi.rows();
  const std::size_t t = maps.front().phi.cols();
  const bool with_static = maps.front().has_static;
  ChannelImportance out;
  out.alpha = alpha;
  out.n_instances = maps.size();
  out.has_static = with_static;
  out.local = Matrix(maps.size(), c);
  out.global.assign(c, 0.0);
  for (std::size_t n = 0; n < maps.size(); ++n) {
    const auto& m = maps[n];
    if (m.phi.rows() != c || m.phi.cols() != t || m.has_static != with_static) {
      throw ShapeError("saliency map " + m.instance_id + " is " + std::to_string(m.phi.rows()) + "x" +
                       std::to_string(m.phi.cols()) + ", expected " + std::to_string(c) + "x" +
                       std::to_string(t));
    }
    const auto psi = local_aggregate(m, alpha);
    for (std::size_t j = 0; j < c; ++j) {
      out.local(n, j) = psi[j];
      out.global[j] += psi[j];
    }
    if (with_static) {
      const double s = alpha == 0 ? m.static_phi : std::abs(m.static_phi);
      out.local_static.push_back(s);
      out.global_static += s;
    }
  }
  const double inv = 1.0 / static_cast<double>(maps.size());
  for (double& g : out.global) g *= inv;
  out.global_static *= inv;
  return out;
}

}  // namespace prometheus::attribution
