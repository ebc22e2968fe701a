#include "prometheus/explain/saliency_io.hpp"

#include <fstream>
#include <map>

#include "json.hpp"
#include "prometheus/core/csv.hpp"
#include "prometheus/core/error.hpp"
#include "prometheus/core/prth.hpp"

namespace prometheus::explain {

void write_saliency(const std::filesystem::path& dir, const std::vector<SaliencyMap>& maps,
                    const std::vector<std::string>& channel_names) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "saliency.csv");
  if (!csv) throw IoError("cannot write " + (dir / "saliency.csv").string());
  write_csv_row(csv, {"instance_id", "channel_name", "t", "phi"});
  std::vector<double> bulk;
  std::size_t steps = 0;
  for (const SaliencyMap& m : maps) {
    if (m.phi.rows() != channel_names.size()) {
      throw ShapeError("saliency map has " + std::to_string(m.phi.rows()) + " channels, names list " +
                       std::to_string(channel_names.size()));
    }
    steps = m.phi.cols();
    for (std::size_t c = 0; c < m.phi.rows(); ++c) {
      for (std::size_t t = 0; t < m.phi.cols(); ++t) {
        write_csv_row(csv, {m.instance_id, channel_names[c], std::to_string(t), format_double(m.phi(c, t))});
      }
    }
    bulk.insert(bulk.end(), m.phi.data().begin(), m.phi.data().end());
  }

  nlohmann::ordered_json meta;
  meta["channels"] = channel_names;
  meta["T"] = steps;
  auto records = nlohmann::ordered_json::array();
  for (const SaliencyMap& m : maps) {
    nlohmann::ordered_json r;
    r["instance_id"] = m.instance_id;
    r["base_value"] = m.base_value;
    r["model_output"] = m.model_output;
    r["P"] = m.P_used;
    r["seed"] = m.seed;
    if (m.has_static) r["static_phi"] = m.static_phi;
    records.push_back(r);
  }
  meta["instances"] = records;
  std::ofstream js(dir / "meta.json");
  js << meta.dump(2) << '\n';

  const std::uint64_t dims[] = {maps.size(), channel_names.size(), steps};
  save_prth(dir / "saliency.prth", dims, bulk);
}

SaliencyStore read_saliency(const std::filesystem::path& dir) {
  std::ifstream js(dir / "meta.json");
  if (!js) throw IoError("cannot open " + (dir / "meta.json").string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("meta.json: " + std::string(e.what()));
  }
  SaliencyStore out;
  out.channel_names = meta.at("channels").get<std::vector<std::string>>();
  const std::size_t steps = meta.at("T").get<std::size_t>();
  std::map<std::string, std::size_t> channel_pos;
  for (std::size_t c = 0; c < out.channel_names.size(); ++c) channel_pos[out.channel_names[c]] = c;
  std::map<std::string, std::size_t> by_id;
  for (const auto& r : meta.at("instances")) {
    SaliencyMap m;
    m.instance_id = r.at("instance_id").get<std::string>();
    m.base_value = r.at("base_value").get<double>();
    m.model_output = r.at("model_output").get<double>();
    m.P_used = r.at("P").get<std::size_t>();
    m.seed = r.at("seed").get<std::uint64_t>();
    m.has_static = r.contains("static_phi");
    if (m.has_static) m.static_phi = r.at("static_phi").get<double>();
    m.phi = Matrix(out.channel_names.size(), steps);
    by_id[m.instance_id] = out.maps.size();
    out.maps.push_back(std::move(m));
  }

  const CsvTable table = read_csv(dir / "saliency.csv");
  const std::size_t ci = table.column("instance_id"), cc = table.column("channel_name"),
                    ct = table.column("t"), cp = table.column("phi");
  for (std::size_t line = 0; line < table.rows.size(); ++line) {
    const auto& row = table.rows[line];
    const auto it = by_id.find(row[ci]);
    const auto ch = channel_pos.find(row[cc]);
    if (it == by_id.end() || ch == channel_pos.end()) {
      throw LoadError("saliency.csv row " + std::to_string(line + 2) + " does not match meta.json");
    }
    const auto t = static_cast<std::size_t>(parse_cell(row[ct], "t", line + 2));
    if (t >= steps) throw LoadError("saliency.csv row " + std::to_string(line + 2) + ": t out of range");
    out.maps[it->second].phi(ch->second, t) = parse_cell(row[cp], "phi", line + 2);
  }
  return out;
}

}  // namespace prometheus::explain
