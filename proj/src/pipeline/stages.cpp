#include "prometheus/pipeline/stages.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <regex>

#include "json.hpp"
#include "prometheus/attribution/importance.hpp"
#include "prometheus/attribution/pruning.hpp"
#include "prometheus/core/csv.hpp"
#include "prometheus/core/error.hpp"
#include "prometheus/core/random.hpp"
#include "prometheus/eval/fidelity.hpp"
#include "prometheus/eval/metrics.hpp"
#include "prometheus/eval/report.hpp"
#include "prometheus/explain/saliency_io.hpp"
#include "prometheus/explain/shapley.hpp"
#include "prometheus/nn/checkpoint.hpp"
#include "prometheus/pipeline/config.hpp"
#include "prometheus/pipeline/manifest.hpp"

namespace prometheus::pipeline {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kTables[] = {"rl_kpi.csv", "ws.csv", "static.csv", "distances.csv"};

struct Context {
  PipelineConfig cfg;
  fs::path run_dir;
  std::string config_hash;
  std::size_t workers = 1;
  bool quiet = false;

  void log(const std::string& msg) const {
    if (!quiet) std::cerr << msg << '\n';
  }
  fs::path stage_dir(const std::string& stage, const std::string& fold = "") const {
    return fold.empty() ? run_dir / stage : run_dir / stage / fold;
  }
};

// Collects a stage's inputs and outputs for its manifest.
struct StageIo {
  const Context& ctx;
  std::string stage;
  std::string fold;
  fs::path dir;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;

  StageIo(const Context& c, std::string s, std::string f)
      : ctx(c), stage(std::move(s)), fold(std::move(f)), dir(c.stage_dir(stage, fold)) {
    fs::create_directories(dir);
  }

  fs::path need(const fs::path& p, const std::string& producer) {
    if (!fs::exists(p)) {
      throw DependencyError(stage + (fold.empty() ? "" : " " + fold) + " needs " +
                            fs::relative(p, ctx.run_dir).generic_string() + "; run " + producer + " first");
    }
    inputs.push_back(p);
    return p;
  }
  fs::path out(const std::string& name) {
    outputs.push_back(dir / name);
    return dir / name;
  }
  void finish() {
    write_manifest(ctx.run_dir, dir,
                   {stage, fold, ctx.config_hash, ctx.cfg.seeds(), inputs, outputs});
  }
};

void write_json(const fs::path& path, const ojson& j) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

ojson schema_to_json(const SchemaConfig& s) {
  return {{"rl_channels", s.rl_channels},
          {"ws_channels", s.ws_channels},
          {"summed_ws_channels", s.summed_ws_channels},
          {"static_columns", s.static_columns},
          {"label_column", s.label_column},
          {"neighbors", s.neighbors},
          {"window_days", s.window_days}};
}

SchemaConfig schema_from_json(const nlohmann::json& j) {
  try {
    SchemaConfig s;
    s.rl_channels = j.at("rl_channels").get<std::vector<std::string>>();
    s.ws_channels = j.at("ws_channels").get<std::vector<std::string>>();
    s.summed_ws_channels = j.at("summed_ws_channels").get<std::vector<std::string>>();
    s.static_columns = j.at("static_columns").get<std::vector<std::string>>();
    s.label_column = j.at("label_column").get<std::string>();
    s.neighbors = j.at("neighbors").get<int>();
    s.window_days = j.at("window_days").get<int>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("schema.json: ") + e.what());
  }
}

TimeSeriesDataset load_data(StageIo& io) {
  const fs::path dir = io.ctx.stage_dir("gen-data");
  const SchemaConfig schema = schema_from_json(read_json(io.need(dir / "schema.json", "gen-data")));
  DatasetPaths paths{io.need(dir / kTables[0], "gen-data"), io.need(dir / kTables[1], "gen-data"),
                     io.need(dir / kTables[2], "gen-data"), io.need(dir / kTables[3], "gen-data")};
  TimeSeriesDataset data = load_dataset(paths, schema).dataset;
  if (io.ctx.cfg.data.derived_ws) data = derive_ws_statistics(data);
  return data;
}

FoldSpec fold_of(const TimeSeriesDataset& data, const std::string& name) {
  const int id = parse_fold_id(name);
  const auto folds = rolling_origin_folds(data.time_extent);
  if (id < 0 || static_cast<std::size_t>(id) >= folds.size()) {
    throw ArgumentError("fold " + name + " out of range F0..F" + std::to_string(folds.size() - 1));
  }
  return folds[static_cast<std::size_t>(id)];
}

std::vector<std::string> input_names(const nn::ModelSpec& spec) {
  std::vector<std::string> names;
  for (const auto& m : spec.input_meta) names.push_back(m.name);
  return names;
}

void write_train_log(const fs::path& path, const nn::TrainedModel& tm) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  write_csv_row(os, {"epoch", "train_loss", "val_loss", "val_f1"});
  for (const auto& e : tm.train_log) {
    write_csv_row(os, {std::to_string(e.epoch), format_double(e.train_loss), format_double(e.val_loss),
                       format_double(e.val_f1)});
  }
}

std::vector<std::size_t> held_out(const SplitIndices& split) {
  std::vector<std::size_t> rows = split.val;
  rows.insert(rows.end(), split.test.begin(), split.test.end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

explain::BackgroundSet background_from(const TimeSeriesDataset& data, const nn::ModelSpec& spec,
                                       const std::vector<std::size_t>& rows) {
  explain::BackgroundSet bg;
  for (std::size_t r : rows) {
    bg.instances.push_back(gather_instance(data, r, spec.input_channels, spec.use_static_branch));
  }
  return bg;
}

// ---- stages ----

void stage_gen_data(const Context& ctx) {
  StageIo io(ctx, "gen-data", "");
  const DataConfig& d = ctx.cfg.data;
  SchemaConfig schema = d.schema;
  if (d.synthetic) {
    const synth::SynthResult r = synth::generate(d.synth);
    synth::write_synth_outputs(io.dir, r);
    schema = r.schema;
    io.out("ground_truth.json");
    ctx.log("gen-data: " + std::to_string(r.dataset.n) + " instances, failure rate " +
            format_double(r.truth.realized_failure_rate));
  } else {
    for (const fs::path& p : {d.paths.rl_kpi, d.paths.ws, d.paths.statics, d.paths.distances}) {
      io.need(p, "a data export");
    }
    write_raw_tables(io.dir, read_raw_tables(d.paths, schema), schema);
  }
  for (const char* t : kTables) io.out(t);
  write_json(io.out("schema.json"), schema_to_json(schema));

  StageIo probe(ctx, "gen-data", "");
  const TimeSeriesDataset data = load_data(probe);
  ojson summary;
  summary["instances"] = data.n;
  summary["steps"] = data.steps;
  summary["time_extent"] = data.time_extent;
  std::size_t positives = 0;
  for (int y : data.labels) positives += static_cast<std::size_t>(y);
  summary["positives"] = positives;
  std::vector<std::string> names;
  for (const auto& m : data.channel_meta) names.push_back(m.name);
  summary["channels"] = names;
  ojson folds = ojson::array();
  for (const FoldSpec& f : rolling_origin_folds(data.time_extent)) {
    folds.push_back({{"fold", f.name()},
                     {"train", {f.train.begin, f.train.end}},
                     {"val", {f.val.begin, f.val.end}},
                     {"test", {f.test.begin, f.test.end}}});
  }
  summary["folds"] = folds;
  write_json(io.out("dataset.json"), summary);
  io.finish();
}

void stage_train(const Context& ctx, const std::string& fold) {
  StageIo io(ctx, "train", fold);
  const TimeSeriesDataset data = load_data(io);
  const nn::FoldData fd = nn::prepare_fold(data, fold_of(data, fold));
  const nn::ModelSpec spec = build_spec(ctx.cfg.model, fd.data);
  const nn::TrainedModel tm = nn::train(spec, fd, ctx.cfg.train);
  nn::save_checkpoint(io.out("model.ckpt"), tm);
  write_train_log(io.out("train_log.csv"), tm);
  ctx.log("train " + fold + ": " + nn::to_string(spec.variant) + ", " + std::to_string(tm.param_count) +
          " parameters, best epoch " + std::to_string(tm.best_epoch));
  io.finish();
}

void stage_explain(const Context& ctx, const std::string& fold) {
  StageIo io(ctx, "explain", fold);
  const nn::TrainedModel tm = nn::load_checkpoint(io.need(ctx.stage_dir("train", fold) / "model.ckpt", "train"));
  const TimeSeriesDataset data = load_data(io);
  const nn::FoldData fd = nn::prepare_fold(data, fold_of(data, fold));
  const nn::ModelSpec& spec = tm.spec();
  const ExplainConfig& ec = ctx.cfg.explain;

  const std::vector<std::size_t> held = held_out(fd.split);
  const auto probs = nn::predict_rows(tm.model, fd.data, held);
  const auto labels = nn::labels_of(fd.data, held);
  std::vector<std::size_t> tps;
  for (std::size_t i : attribution::select_tp(probs, labels, ctx.cfg.eval.threshold)) tps.push_back(held[i]);
  const std::size_t n_tp = tps.size();
  if (tps.empty()) {
    throw ArgumentError("explain " + fold + ": no true-positive instances in the validation and test splits");
  }
  if (tps.size() > ec.max_instances) tps.resize(ec.max_instances);

  const auto bg_rows = explain::background_rows(fd.split.train, ec.background_size, ec.seed);
  const explain::BackgroundSet bg = background_from(fd.data, spec, bg_rows);
  explain::SamplingOptions so;
  so.permutations = ec.permutations;
  so.seed = ec.seed;
  so.normalize = ec.normalize;
  so.workers = ctx.workers;
  const explain::BatchExplanation ex = explain::batch_explain(tm.model, fd.data, tps, bg, so);
  if (ex.maps.empty()) throw ArgumentError("explain " + fold + ": every selected instance failed");

  explain::write_saliency(io.dir, ex.maps, input_names(spec));
  io.out("saliency.csv");
  io.out("meta.json");
  io.out("saliency.prth");
  write_json(io.out("background.json"), {{"seed", ec.seed}, {"pool", "train"}, {"rows", bg_rows}});
  ojson failures = ojson::array();
  for (const auto& [row, msg] : ex.failures) failures.push_back({{"row", row}, {"error", msg}});
  write_json(io.out("explain_summary.json"), {{"candidates", held.size()},
                                              {"true_positives", n_tp},
                                              {"explained", ex.explained},
                                              {"failures", failures}});
  ctx.log("explain " + fold + ": " + std::to_string(ex.maps.size()) + " of " + std::to_string(n_tp) +
          " true positives");
  io.finish();
}

ojson importance_to_json(const attribution::ChannelImportance& imp, const std::vector<std::string>& names,
                         const std::vector<explain::SaliencyMap>& maps) {
  ojson j;
  j["alpha"] = imp.alpha;
  j["n_instances"] = imp.n_instances;
  j["channels"] = names;
  j["global"] = imp.global;
  if (imp.has_static) {
    j["global_static"] = imp.global_static;
    j["local_static"] = imp.local_static;
  }
  ojson local = ojson::array();
  for (std::size_t n = 0; n < imp.local.rows(); ++n) {
    const auto row = imp.local.row(n);
    local.push_back({{"instance_id", maps[n].instance_id}, {"psi", std::vector<double>(row.begin(), row.end())}});
  }
  j["local"] = local;
  return j;
}

attribution::ChannelImportance importance_from_json(const nlohmann::json& j) {
  try {
    attribution::ChannelImportance imp;
    imp.alpha = j.at("alpha").get<int>();
    imp.n_instances = j.at("n_instances").get<std::size_t>();
    imp.global = j.at("global").get<std::vector<double>>();
    imp.has_static = j.contains("global_static");
    if (imp.has_static) {
      imp.global_static = j.at("global_static").get<double>();
      imp.local_static = j.at("local_static").get<std::vector<double>>();
    }
    const auto& local = j.at("local");
    imp.local = Matrix(local.size(), imp.global.size());
    for (std::size_t n = 0; n < local.size(); ++n) {
      const auto psi = local[n].at("psi").get<std::vector<double>>();
      if (psi.size() != imp.global.size()) throw LoadError("channel_importance.json: ragged local row");
      for (std::size_t c = 0; c < psi.size(); ++c) imp.local(n, c) = psi[c];
    }
    return imp;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("channel_importance.json: ") + e.what());
  }
}

void stage_aggregate(const Context& ctx, const std::string& fold) {
  StageIo io(ctx, "aggregate", fold);
  const fs::path edir = ctx.stage_dir("explain", fold);
  io.need(edir / "saliency.csv", "explain");
  io.need(edir / "meta.json", "explain");
  const nn::TrainedModel tm = nn::load_checkpoint(io.need(ctx.stage_dir("train", fold) / "model.ckpt", "train"));
  const explain::SaliencyStore store = explain::read_saliency(edir);
  const auto imp = attribution::global_aggregate(store.maps, ctx.cfg.prune.alpha);
  write_json(io.out("channel_importance.json"), importance_to_json(imp, store.channel_names, store.maps));

  // Raw (un-normalized) feature values beside their attributions.
  const TimeSeriesDataset data = load_data(io);
  const auto& channels = tm.spec().input_channels;
  std::ofstream os(io.out("shap_vs_value.csv"));
  if (!os) throw IoError("cannot write shap_vs_value.csv");
  write_csv_row(os, {"instance_id", "channel_name", "t", "value", "phi"});
  for (const auto& m : store.maps) {
    const std::size_t row = std::stoul(m.instance_id);
    if (row >= data.n) throw LoadError("saliency instance " + m.instance_id + " is not a dataset row");
    for (std::size_t c = 0; c < m.phi.rows(); ++c) {
      for (std::size_t t = 0; t < m.phi.cols(); ++t) {
        write_csv_row(os, {m.instance_id, store.channel_names[c], std::to_string(t),
                           format_double(data.at(row, static_cast<std::size_t>(channels[c]), t)),
                           format_double(m.phi(c, t))});
      }
    }
  }
  os.close();
  io.finish();
}

void stage_prune(const Context& ctx, const std::string& fold) {
  StageIo io(ctx, "prune", fold);
  const nn::TrainedModel tm = nn::load_checkpoint(io.need(ctx.stage_dir("train", fold) / "model.ckpt", "train"));
  const auto imp = importance_from_json(
      read_json(io.need(ctx.stage_dir("aggregate", fold) / "channel_importance.json", "aggregate")));
  const nn::ModelSpec& spec = tm.spec();
  if (imp.global.size() != spec.channels()) {
    throw ShapeError("importance covers " + std::to_string(imp.global.size()) + " channels, model has " +
                     std::to_string(spec.channels()));
  }
  const auto pruned = attribution::prune(imp, ctx.cfg.prune.coverage, spec.input_meta);
  const nn::ModelSpec derived = attribution::derive_pruned_spec(spec, pruned);
  const auto names = input_names(spec);
  attribution::write_importance(io.out("importance.json"), imp, pruned, names);
  attribution::write_pruning_report(io.out("pruning_report.json"), pruned, names, spec, derived);
  write_json(io.out("derived_spec.json"), nn::spec_to_json(derived));
  ctx.log("prune " + fold + ": kept " + std::to_string(pruned.kept_channels.size()) + " of " +
          std::to_string(spec.channels()) + " channels, derived " + nn::to_string(derived.variant));
  io.finish();
}

void stage_refine(const Context& ctx, const std::string& fold) {
  StageIo io(ctx, "refine", fold);
  const nn::ModelSpec spec =
      nn::spec_from_json(read_json(io.need(ctx.stage_dir("prune", fold) / "derived_spec.json", "prune")));
  const TimeSeriesDataset data = load_data(io);
  const nn::FoldData fd = nn::prepare_fold(data, fold_of(data, fold));
  const nn::TrainedModel tm = nn::train(spec, fd, ctx.cfg.train);
  nn::save_checkpoint(io.out("model.ckpt"), tm);
  write_train_log(io.out("train_log.csv"), tm);
  ctx.log("refine " + fold + ": " + nn::to_string(spec.variant) + ", " + std::to_string(tm.param_count) +
          " parameters");
  io.finish();
}

void stage_evaluate(const Context& ctx, const std::string& fold) {
  StageIo io(ctx, "evaluate", fold);
  const std::pair<const char*, fs::path> roles[] = {
      {"original", io.need(ctx.stage_dir("train", fold) / "model.ckpt", "train")},
      {"refined", io.need(ctx.stage_dir("refine", fold) / "model.ckpt", "refine")}};
  const TimeSeriesDataset data = load_data(io);
  const nn::FoldData fd = nn::prepare_fold(data, fold_of(data, fold));
  const auto labels = nn::labels_of(fd.data, fd.split.test);
  ojson models = ojson::array();
  for (const auto& [role, path] : roles) {
    const nn::TrainedModel tm = nn::load_checkpoint(path);
    const auto probs = nn::predict_rows(tm.model, fd.data, fd.split.test);
    const auto r = eval::prf1(probs, labels, ctx.cfg.eval.threshold);
    models.push_back({{"role", role},
                      {"model_variant", nn::to_string(tm.spec().variant)},
                      {"param_count", tm.param_count},
                      {"precision", r.precision},
                      {"recall", r.recall},
                      {"f1", r.f1},
                      {"tp", r.tp},
                      {"fp", r.fp},
                      {"fn", r.fn},
                      {"tn", r.tn}});
    ctx.log("evaluate " + fold + ": " + role + " F1 " + format_double(r.f1));
  }
  write_json(io.out("metrics.json"),
             {{"fold", fold}, {"threshold", ctx.cfg.eval.threshold}, {"test_instances", labels.size()},
              {"models", models}});
  io.finish();
}

ojson curve_to_json(const eval::FidelityCurve& c) {
  ojson steps = ojson::array();
  for (const auto& [k, f1] : c.steps) steps.push_back({k, f1});
  return {{"mode", eval::to_string(c.mode)},
          {"ranking_source", eval::to_string(c.ranking_source)},
          {"granularity", c.granularity},
          {"auc", c.auc},
          {"steps", steps}};
}

eval::FidelityCurve curve_from_json(const nlohmann::json& j) {
  eval::FidelityCurve c;
  c.mode = j.at("mode").get<std::string>() == "INSERTION" ? eval::FidelityMode::Insertion
                                                          : eval::FidelityMode::Deletion;
  c.ranking_source =
      j.at("ranking_source").get<std::string>() == "SHAP" ? eval::RankingSource::Shap : eval::RankingSource::Random;
  c.granularity = j.at("granularity").get<std::string>();
  c.auc = j.at("auc").get<double>();
  for (const auto& s : j.at("steps")) c.steps.emplace_back(s.at(0).get<std::size_t>(), s.at(1).get<double>());
  return c;
}

void stage_fidelity(const Context& ctx, const std::string& fold) {
  StageIo io(ctx, "fidelity", fold);
  const nn::TrainedModel tm = nn::load_checkpoint(io.need(ctx.stage_dir("train", fold) / "model.ckpt", "train"));
  const auto report = read_json(io.need(ctx.stage_dir("prune", fold) / "pruning_report.json", "prune"));
  const auto bg_json = read_json(io.need(ctx.stage_dir("explain", fold) / "background.json", "explain"));
  const TimeSeriesDataset data = load_data(io);
  const nn::FoldData fd = nn::prepare_fold(data, fold_of(data, fold));
  const nn::ModelSpec& spec = tm.spec();

  const auto ranking = report.at("ranking_indices").get<std::vector<std::size_t>>();
  const auto bg = background_from(fd.data, spec, bg_json.at("rows").get<std::vector<std::size_t>>());
  const auto means = eval::channel_means(bg);
  const InstanceBatch test = nn::model_batch(spec, fd.data, fd.split.test);
  const auto labels = nn::labels_of(fd.data, fd.split.test);
  const auto f = explain::model_fn(tm.model);
  const auto& meta = spec.input_meta;

  std::vector<eval::FidelityCurve> curves;
  curves.push_back(eval::insertion_test(f, test, labels, ranking, means, eval::RankingSource::Shap, meta));
  curves.push_back(eval::deletion_test(f, test, labels, ranking, means, eval::RankingSource::Shap, meta));
  std::vector<eval::FidelityCurve> ins, del;
  for (int r = 0; r < ctx.cfg.eval.random_rankings; ++r) {
    const auto rr =
        eval::random_ranking(spec.channels(), derive_seed(ctx.cfg.eval.random_seed, static_cast<std::uint64_t>(r)));
    ins.push_back(eval::insertion_test(f, test, labels, rr, means, eval::RankingSource::Random, meta));
    del.push_back(eval::deletion_test(f, test, labels, rr, means, eval::RankingSource::Random, meta));
  }
  curves.push_back(eval::mean_curve(ins));
  curves.push_back(eval::mean_curve(del));

  ojson list = ojson::array();
  for (const auto& c : curves) list.push_back(curve_to_json(c));
  write_json(io.out("fidelity.json"),
             {{"random_rankings", ctx.cfg.eval.random_rankings}, {"random_seed", ctx.cfg.eval.random_seed},
              {"curves", list}});
  std::ofstream os(io.out("fidelity_curves.csv"));
  if (!os) throw IoError("cannot write fidelity_curves.csv");
  write_csv_row(os, {"mode", "ranking_source", "n_features_changed", "f1"});
  for (const auto& c : curves) {
    for (const auto& [k, f1] : c.steps) {
      write_csv_row(os, {eval::to_string(c.mode), eval::to_string(c.ranking_source), std::to_string(k),
                         format_double(f1)});
    }
  }
  os.close();
  ctx.log("fidelity " + fold + ": insertion AUC " + format_double(curves[0].auc) + " vs " +
          format_double(curves[2].auc) + ", deletion AUC " + format_double(curves[1].auc) + " vs " +
          format_double(curves[3].auc));
  io.finish();
}

void stage_report(const Context& ctx) {
  StageIo io(ctx, "report", "");
  const fs::path eval_root = ctx.stage_dir("evaluate");
  if (!fs::is_directory(eval_root)) io.need(eval_root, "evaluate");
  static const std::regex fold_re("F[0-9]+");
  std::vector<std::string> folds;
  for (const auto& entry : fs::directory_iterator(eval_root)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && std::regex_match(name, fold_re) && fs::exists(entry.path() / "metrics.json")) {
      folds.push_back(name);
    }
  }
  if (folds.empty()) io.need(eval_root / "F4" / "metrics.json", "evaluate");
  std::sort(folds.begin(), folds.end(),
            [](const std::string& a, const std::string& b) { return parse_fold_id(a) < parse_fold_id(b); });

  std::vector<eval::FoldReport> reports;
  for (const std::string& fold : folds) {
    eval::FoldReport fr;
    fr.fold_id = fold;
    const auto metrics = read_json(io.need(ctx.stage_dir("evaluate", fold) / "metrics.json", "evaluate"));
    for (const auto& m : metrics.at("models")) {
      eval::ModelResult r;
      r.role = m.at("role").get<std::string>();
      r.param_count = m.at("param_count").get<std::size_t>();
      r.report.precision = m.at("precision").get<double>();
      r.report.recall = m.at("recall").get<double>();
      r.report.f1 = m.at("f1").get<double>();
      r.report.tp = m.at("tp").get<std::size_t>();
      r.report.fp = m.at("fp").get<std::size_t>();
      r.report.fn = m.at("fn").get<std::size_t>();
      r.report.tn = m.at("tn").get<std::size_t>();
      r.report.fold_id = fold;
      r.report.model_variant = m.at("model_variant").get<std::string>();
      fr.models.push_back(std::move(r));
    }
    const auto fid = read_json(io.need(ctx.stage_dir("fidelity", fold) / "fidelity.json", "fidelity"));
    for (const auto& c : fid.at("curves")) fr.curves.push_back(curve_from_json(c));
    const auto imp =
        read_json(io.need(ctx.stage_dir("aggregate", fold) / "channel_importance.json", "aggregate"));
    fr.channel_names = imp.at("channels").get<std::vector<std::string>>();
    fr.global_importance = imp.at("global").get<std::vector<double>>();
    const CsvTable pairs = read_csv(io.need(ctx.stage_dir("aggregate", fold) / "shap_vs_value.csv", "aggregate"));
    const std::size_t cc = pairs.column("channel_name"), cv = pairs.column("value"), cp = pairs.column("phi");
    for (std::size_t i = 0; i < pairs.rows.size(); ++i) {
      const auto& row = pairs.rows[i];
      fr.shap_vs_value.push_back(
          {row[cc], parse_cell(row[cv], "value", i + 2), parse_cell(row[cp], "phi", i + 2)});
    }
    reports.push_back(std::move(fr));
  }
  eval::write_report(io.dir, reports);
  for (const char* name :
       {"summary.json", "boxplot.csv", "importance_bar.csv", "fidelity_curves.csv", "shap_vs_value.csv"}) {
    io.out(name);
  }
  ctx.log("report: " + std::to_string(reports.size()) + " fold(s)");
  io.finish();
}

using FoldStage = void (*)(const Context&, const std::string&);

const std::map<std::string, FoldStage>& fold_stages() {
  static const std::map<std::string, FoldStage> stages{
      {"train", stage_train},       {"explain", stage_explain},   {"aggregate", stage_aggregate},
      {"prune", stage_prune},       {"refine", stage_refine},     {"evaluate", stage_evaluate},
      {"fidelity", stage_fidelity}};
  return stages;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"gen-data", "train",    "explain",  "aggregate", "prune",
                                              "refine",   "evaluate", "fidelity", "report",    "pipeline"};
  return names;
}

void run(const std::string& subcommand, const RunOptions& options) {
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), subcommand) == names.end()) {
    throw ArgumentError("unknown subcommand '" + subcommand + "'");
  }
  Context ctx;
  ctx.cfg = load_config(options.config);
  if (options.seed) ctx.cfg.override_seeds(*options.seed);
  ctx.run_dir = ctx.cfg.out_dir;
  if (const char* env = std::getenv("PRTH_OUT"); env && *env) ctx.run_dir = env;
  if (options.out) ctx.run_dir = *options.out;
  if (ctx.run_dir.is_relative()) ctx.run_dir = fs::absolute(ctx.run_dir);
  ctx.run_dir = ctx.run_dir.lexically_normal();
  ctx.config_hash = sha256_hex(ctx.cfg.source.dump());
  ctx.workers = std::max<std::size_t>(1, options.workers);
  ctx.quiet = options.quiet;
  std::optional<std::string> fold;
  if (options.fold) fold = "F" + std::to_string(parse_fold_id(*options.fold));

  RunLock lock(ctx.run_dir);
  if (subcommand == "gen-data") {
    stage_gen_data(ctx);
  } else if (subcommand == "report") {
    stage_report(ctx);
  } else if (subcommand == "pipeline") {
    stage_gen_data(ctx);
    std::vector<std::string> folds;
    if (fold) {
      folds.push_back(*fold);
    } else {
      for (int f = 0; f < 5; ++f) folds.push_back("F" + std::to_string(f));
    }
    for (const auto& f : folds) {
      for (const char* stage : {"train", "explain", "aggregate", "prune", "refine", "evaluate", "fidelity"}) {
        fold_stages().at(stage)(ctx, f);
      }
    }
    stage_report(ctx);
  } else {
    fold_stages().at(subcommand)(ctx, fold.value_or("F4"));
  }
}

}  // namespace prometheus::pipeline
