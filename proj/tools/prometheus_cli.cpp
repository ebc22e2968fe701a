#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "prometheus/core/error.hpp"
#include "prometheus/pipeline/config.hpp"
#include "prometheus/pipeline/manifest.hpp"
#include "prometheus/pipeline/stages.hpp"

namespace {

// Errors go to stderr as one JSON object per line.
int report_error(const std::string& kind, const std::string& message) {
  nlohmann::json j{{"error", kind}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  namespace pl = prometheus::pipeline;
  CLI::App app{"Train, explain, prune and refine failure predictors on link telemetry"};
  app.set_version_flag("--version", pl::kToolVersion);
  app.require_subcommand(1);

  pl::RunOptions opts;
  std::string fold;
  std::string out;
  std::uint64_t seed = 0;
  for (const std::string& name : pl::subcommands()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " stage");
    if (name == "pipeline") sub->description("run every stage in order, then report");
    sub->add_option("--config", opts.config, "pipeline config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--fold", fold, "fold F0..F4");
    sub->add_option("--out", out, "run directory (overrides PRTH_OUT and out_dir)");
    sub->add_option("--seed", seed, "override every seed in the config");
    sub->add_option("--workers", opts.workers, "explainer threads")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", opts.quiet, "no progress output");
  }
  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "check a config file and list every violation");
  validate->add_option("config", validate_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what());
  }

  try {
    if (validate->parsed()) {
      const auto violations = pl::validate_config_file(validate_path);
      nlohmann::json j{{"config", validate_path}, {"violations", violations}};
      std::cout << j.dump(2) << '\n';
      return violations.empty() ? 0 : 1;
    }
    CLI::App* sub = app.get_subcommands().front();
    if (!fold.empty()) opts.fold = fold;
    if (!out.empty()) opts.out = out;
    if (sub->count("--seed")) opts.seed = seed;
    pl::run(sub->get_name(), opts);
  } catch (const prometheus::Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}
