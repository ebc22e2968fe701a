#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "prometheus/explain/shapley.hpp"

namespace prometheus::explain {

/// saliency.csv (instance_id,channel_name,t,phi), meta.json with one record
/// per instance, and saliency.prth holding the N x C x T phi tensor.
void write_saliency(const std::filesystem::path& dir, const std::vector<SaliencyMap>& maps,
                    const std::vector<std::string>& channel_names);

struct SaliencyStore {
  std::vector<std::string> channel_names;
  std::vector<SaliencyMap> maps;
};

SaliencyStore read_saliency(const std::filesystem::path& dir);

}  // namespace prometheus::explain
