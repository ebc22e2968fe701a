#include "prometheus/nn/checkpoint.hpp"

#include <fstream>

#include "json.hpp"
#include "prometheus/core/error.hpp"
#include "prometheus/core/prth.hpp"

namespace prometheus::nn {

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& tm) {
  nlohmann::ordered_json h;
  h["checkpoint_version"] = kCheckpointVersion;
  h["spec"] = spec_to_json(tm.spec());
  h["norm_stats"] = {{"mean", tm.norm_stats.mean}, {"stddev", tm.norm_stats.stddev}};
  h["param_count"] = tm.param_count;
  h["seed"] = tm.seed;
  h["best_epoch"] = tm.best_epoch;
  auto log = nlohmann::ordered_json::array();
  for (const auto& r : tm.train_log) {
    log.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss},
                   {"val_f1", r.val_f1}});
  }
  h["train_log"] = log;
  auto names = nlohmann::ordered_json::array();
  for (const Parameter& p : tm.model.params()) names.push_back(p.name);
  h["weights"] = names;

  const std::string header = h.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  std::uint64_t len = header.size();
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(len >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), 8);
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const Parameter& p : tm.model.params()) {
    const std::uint64_t dims[] = {p.value.rows(), p.value.cols()};
    write_prth(os, dims, p.value.data());
  }
  if (!os) throw IoError("failed writing checkpoint " + path.string());
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw LoadError("truncated checkpoint header");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  if (len > (1u << 26)) throw LoadError("implausible checkpoint header length");
  std::string header(len, '\0');
  if (!is.read(header.data(), static_cast<std::streamsize>(len))) {
    throw LoadError("truncated checkpoint header");
  }
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("checkpoint header is not JSON: ") + e.what());
  }
  if (h.value("checkpoint_version", 0) != kCheckpointVersion) {
    throw LoadError("unsupported checkpoint version");
  }
  TrainedModel tm{Model(spec_from_json(h.at("spec"))), {}, 0, 0, {}, 0};
  tm.norm_stats.mean = h.at("norm_stats").at("mean").get<std::vector<double>>();
  tm.norm_stats.stddev = h.at("norm_stats").at("stddev").get<std::vector<double>>();
  tm.param_count = h.at("param_count").get<std::size_t>();
  tm.seed = h.at("seed").get<std::uint64_t>();
  tm.best_epoch = h.value("best_epoch", 0);
  for (const auto& r : h.at("train_log")) {
    tm.train_log.push_back({r.at("epoch").get<int>(), r.at("train_loss").get<double>(),
                            r.at("val_loss").get<double>(), r.at("val_f1").get<double>()});
  }
  const auto names = h.at("weights").get<std::vector<std::string>>();
  ParameterSet& params = tm.model.params();
  if (names.size() != params.size()) throw LoadError("checkpoint weight list does not match spec");
  for (std::size_t s = 0; s < params.size(); ++s) {
    if (names[s] != params[s].name) throw LoadError("unexpected weight '" + names[s] + "'");
    const PrthTensor t = read_prth(is);
    if (t.dims.size() != 2 || t.dims[0] != params[s].value.rows() || t.dims[1] != params[s].value.cols()) {
      throw LoadError("weight '" + names[s] + "' has the wrong shape");
    }
    for (std::size_t i = 0; i < t.data.size(); ++i) params[s].value.data()[i] = t.data[i];
  }
  if (tm.param_count != params.element_count()) throw LoadError("param_count disagrees with weights");
  return tm;
}

}  // namespace prometheus::nn
