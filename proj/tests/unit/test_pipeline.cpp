#include <cstdio>
#include <cstdlib>
#include <set>
#include <sys/wait.h>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "prometheus/core/error.hpp"
#include "prometheus/pipeline/config.hpp"
#include "prometheus/pipeline/manifest.hpp"
#include "prometheus/synth/generator.hpp"

using namespace prometheus;
using namespace prometheus::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kSource = PROMETHEUS_SOURCE_DIR;

struct CliResult {
  int status = -1;
  std::string output;
};

CliResult cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PROMETHEUS_CLI + "\" " + args + " 2>&1";
  CliResult r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.output += buf;
  const int raw = ::pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

json desk_doc() { return json::parse(testing::read_file(kSource / "configs/desk.json"), nullptr, true, true); }

bool has_violation(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

const TimeSeriesDataset& dataset() {
  static const TimeSeriesDataset d = [] {
    synth::SynthConfig cfg;
    cfg.n_links = 6;
    cfg.n_days = 30;
    cfg.n_stations = 4;
    cfg.k = 2;
    cfg.target_failure_rate = 0.05;
    return synth::generate(cfg).dataset;
  }();
  return d;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("the desk and ci configs are valid") {
  CHECK(validate_config_file(kSource / "configs/desk.json").empty());
  CHECK(validate_config_file(kSource / "configs/ci.json").empty());
  const PipelineConfig c = load_config(kSource / "configs/desk.json");
  CHECK(c.model.variant == nn::Variant::GenTrap);
  CHECK(c.prune.coverage == 0.95);
  CHECK(c.data.synthetic);
}

TEST_CASE("coverage outside (0,1] is a violation") {
  json doc = desk_doc();
  doc["prune"]["coverage"] = 1.2;
  const auto v = validate_config(doc, kSource / "configs");
  CHECK(has_violation(v, "prune.coverage ∈ (0,1]"));
}

TEST_CASE("every seed must be explicit") {
  for (const auto& [section, key] : std::vector<std::pair<std::string, std::string>>{
           {"train", "seed"}, {"explain", "seed"}, {"eval", "random_seed"}}) {
    json doc = desk_doc();
    doc[section].erase(key);
    CHECK(has_violation(validate_config(doc, kSource / "configs"), section + "." + key));
  }
  json doc = desk_doc();
  doc["data"]["synth"].erase("seed");
  CHECK(has_violation(validate_config(doc, kSource / "configs"), "data.synth.seed"));
}

TEST_CASE("every violation is reported at once") {
  json doc = desk_doc();
  doc["prune"]["coverage"] = 0.0;
  doc["train"].erase("seed");
  doc["model"]["variant"] = "CNN";
  doc["explain"]["colour"] = "red";
  const auto v = validate_config(doc, kSource / "configs");
  CHECK(v.size() >= 4);
  CHECK(has_violation(v, "model.variant"));
  CHECK(has_violation(v, "explain.colour"));
}

TEST_CASE("dataset paths must exist") {
  testing::TempDir tmp("cfgpaths");
  json doc = desk_doc();
  doc["data"] = {{"paths", {{"rl_kpi", "missing.csv"}, {"static", "static.csv"}}}};
  const auto v = validate_config(doc, tmp.path());
  CHECK(has_violation(v, "missing.csv"));
}

TEST_CASE("load_config raises a config error listing the violations") {
  testing::TempDir tmp("cfgload");
  json doc = desk_doc();
  doc["prune"]["coverage"] = -1;
  testing::write_file(tmp.path() / "bad.json", doc.dump());
  try {
    load_config(tmp.path() / "bad.json");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("prune.coverage") != std::string::npos);
  }
  testing::write_file(tmp.path() / "syntax.json", "{ \"data\": ");
  CHECK_FALSE(validate_config_file(tmp.path() / "syntax.json").empty());
  CHECK_THROWS_AS(validate_config_file(tmp.path() / "absent.json"), IoError);
}

TEST_CASE("seed override touches every seed and the hashed source") {
  PipelineConfig c = load_config(kSource / "configs/desk.json");
  const std::string before = c.source.dump();
  c.override_seeds(99);
  CHECK(c.train.seed == 99);
  CHECK(c.explain.seed == 99);
  CHECK(c.eval.random_seed == 99);
  CHECK(c.data.synth.seed == 99);
  CHECK(c.source.dump() != before);
  const auto seeds = c.seeds();
  CHECK(seeds.size() == 4);
  for (const auto& [k, v] : seeds.items()) CHECK(v == 99);
}

TEST_CASE("channel selectors") {
  const auto& d = dataset();
  const auto all = select_channels(d, {});
  CHECK(all.size() == d.channels);
  const auto rl = select_channels(d, {"RL_KPI"});
  for (int c : rl) CHECK(d.channel_meta[static_cast<std::size_t>(c)].kind == ChannelKind::RlKpi);
  CHECK_FALSE(rl.empty());
  const auto k0 = select_channels(d, {"WS@k0"});
  CHECK_FALSE(k0.empty());
  for (int c : k0) {
    CHECK(d.channel_meta[static_cast<std::size_t>(c)].kind == ChannelKind::Ws);
    CHECK(d.channel_meta[static_cast<std::size_t>(c)].neighbor == 0);
  }
  const auto named = select_channels(d, {"unavail_second", "RL_KPI"});
  CHECK(named == rl);
  CHECK_THROWS_AS(select_channels(d, {"no_such_channel"}), ArgumentError);
  CHECK_THROWS_AS(select_channels(d, {"WS@kx"}), ArgumentError);
}

TEST_CASE("sha256 digests") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  testing::TempDir tmp("sha");
  testing::write_file(tmp.path() / "f", "abc");
  CHECK(sha256_file(tmp.path() / "f") == sha256_hex("abc"));
}

TEST_CASE("a run directory admits one invocation at a time") {
  testing::TempDir tmp("lock");
  {
    RunLock a(tmp.path());
    CHECK(fs::exists(tmp.path() / ".lock"));
    CHECK_THROWS_AS(RunLock(tmp.path()), IoError);
  }
  CHECK_FALSE(fs::exists(tmp.path() / ".lock"));
  CHECK_NOTHROW(RunLock(tmp.path()));
}

TEST_CASE("cli validate reports violations and exit status") {
  testing::TempDir tmp("clival");
  json doc = desk_doc();
  doc["prune"]["coverage"] = 1.2;
  testing::write_file(tmp.path() / "bad.json", doc.dump());
  const CliResult bad = cli("validate \"" + (tmp.path() / "bad.json").string() + "\"");
  CHECK(bad.status == 1);
  const json report = json::parse(bad.output);
  REQUIRE(report.at("violations").size() == 1);
  CHECK(report["violations"][0] == "prune.coverage ∈ (0,1]");

  const CliResult good = cli("validate \"" + (kSource / "configs/desk.json").string() + "\"");
  CHECK(good.status == 0);
  CHECK(json::parse(good.output).at("violations").empty());
}

TEST_CASE("cli stage without its dependency names the missing artifact") {
  testing::TempDir tmp("clidep");
  const CliResult r = cli("explain --config \"" + (kSource / "configs/ci.json").string() + "\" --out \"" +
                          tmp.path().string() + "\" --quiet");
  CHECK(r.status == 1);
  CHECK(r.output.find('\n') == r.output.size() - 1);
  const json err = json::parse(r.output);
  CHECK(err.at("error") == "dependency");
  CHECK(err.at("message").get<std::string>().find("train/F4/model.ckpt") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp.path() / ".lock"));
}

TEST_CASE("cli rejects a config without seeds") {
  testing::TempDir tmp("cliseed");
  json doc = json::parse(testing::read_file(kSource / "configs/ci.json"), nullptr, true, true);
  doc["train"].erase("seed");
  testing::write_file(tmp.path() / "c.json", doc.dump());
  const CliResult r = cli("gen-data --config \"" + (tmp.path() / "c.json").string() + "\" --out \"" +
                          (tmp.path() / "run").string() + "\" --quiet");
  CHECK(r.status == 1);
  CHECK(json::parse(r.output).at("error") == "config");
  CHECK_FALSE(fs::exists(tmp.path() / "run" / "gen-data"));
}

TEST_CASE("cli pipeline populates every stage with a consistent manifest chain") {
  testing::TempDir tmp("clipipe");
  const std::string cfg = (kSource / "configs/ci.json").string();
  const fs::path run = tmp.path() / "a";
  const CliResult r = cli("pipeline --config \"" + cfg + "\" --fold F4 --out \"" + run.string() + "\" --quiet");
  REQUIRE_MESSAGE(r.status == 0, r.output);

  std::set<std::string> produced;
  for (const char* stage : {"gen-data", "train/F4", "explain/F4", "aggregate/F4", "prune/F4", "refine/F4",
                            "evaluate/F4", "fidelity/F4", "report"}) {
    CAPTURE(stage);
    const fs::path m = run / stage / "manifest.json";
    REQUIRE(fs::exists(m));
    const json j = json::parse(testing::read_file(m));
    CHECK(j.at("versions").contains("prometheus"));
    CHECK(j.at("seeds").at("train.seed") == 3);
    for (const auto& in : j.at("inputs")) {
      const std::string p = in.at("path");
      CHECK_MESSAGE(produced.count(p) == 1, p);
      CHECK(sha256_file(run / p) == in.at("sha256"));
    }
    for (const auto& out : j.at("outputs")) {
      CHECK(sha256_file(run / out.at("path").get<std::string>()) == out.at("sha256"));
      produced.insert(out.at("path").get<std::string>());
    }
  }
  const json metrics = json::parse(testing::read_file(run / "evaluate/F4/metrics.json"));
  CHECK(metrics.at("models").size() == 2);
  CHECK_FALSE(fs::exists(run / ".lock"));

  // Same config again: identical summary bytes.
  const fs::path again = tmp.path() / "b";
  REQUIRE(cli("pipeline --config \"" + cfg + "\" --fold F4 --out \"" + again.string() + "\" --quiet").status == 0);
  CHECK(testing::read_file(run / "report/summary.json") == testing::read_file(again / "report/summary.json"));

  // A stage re-run on its own rewrites the same bytes.
  const std::string before = testing::read_file(run / "prune/F4/importance.json");
  REQUIRE(cli("prune --config \"" + cfg + "\" --out \"" + run.string() + "\" --quiet").status == 0);
  CHECK(testing::read_file(run / "prune/F4/importance.json") == before);
}

TEST_CASE("cli output directory precedence") {
  testing::TempDir tmp("cliout");
  const std::string cfg = (kSource / "configs/ci.json").string();
  const std::string env = "PRTH_OUT=\"" + (tmp.path() / "env").string() + "\" ";
  const std::string cmd = std::string("cd \"") + tmp.path().string() + "\" && " + env + "\"" + PROMETHEUS_CLI +
                          "\" gen-data --config \"" + cfg + "\" --quiet";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(tmp.path() / "env/gen-data/manifest.json"));
  const std::string with_out = std::string("cd \"") + tmp.path().string() + "\" && " + env + "\"" + PROMETHEUS_CLI +
                               "\" gen-data --config \"" + cfg + "\" --out flag --quiet";
  REQUIRE(std::system(with_out.c_str()) == 0);
  CHECK(fs::exists(tmp.path() / "flag/gen-data/manifest.json"));
}

}  // TEST_SUITE
