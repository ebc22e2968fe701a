#include "prometheus/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"
#include "prometheus/core/csv.hpp"
#include "prometheus/core/error.hpp"
#include "prometheus/core/folds.hpp"

namespace prometheus::eval {

namespace {

nlohmann::ordered_json to_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

std::ofstream open_csv(const std::filesystem::path& path, const std::vector<std::string>& header) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  write_csv_row(os, header);
  return os;
}

}  // namespace

MeanStd mean_std(std::span<const double> xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

void write_report(const std::filesystem::path& dir, std::span<const FoldReport> folds) {
  if (folds.empty()) throw ArgumentError("report needs at least one fold");

  std::vector<const FoldReport*> sorted;
  for (const auto& f : folds) sorted.push_back(&f);
  std::sort(sorted.begin(), sorted.end(), [](const FoldReport* a, const FoldReport* b) {
    return parse_fold_id(a->fold_id) < parse_fold_id(b->fold_id);
  });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const int prev = parse_fold_id(sorted[i - 1]->fold_id);
    const int cur = parse_fold_id(sorted[i]->fold_id);
    if (cur == prev) throw ArgumentError("fold " + sorted[i]->fold_id + " appears twice");
    if (cur != prev + 1) {
      throw ArgumentError("missing fold F" + std::to_string(prev + 1) + " between " + sorted[i - 1]->fold_id +
                          " and " + sorted[i]->fold_id);
    }
  }

  // role -> (variant, per-fold values)
  struct RoleStats {
    std::string variant;
    std::size_t param_count = 0;
    std::vector<double> precision, recall, f1;
  };
  std::vector<std::string> role_order;
  std::map<std::string, RoleStats> roles;
  std::vector<std::string> curve_order;
  std::map<std::string, std::vector<double>> aucs;
  for (const FoldReport* f : sorted) {
    for (const ModelResult& m : f->models) {
      auto [it, fresh] = roles.try_emplace(m.role);
      if (fresh) {
        role_order.push_back(m.role);
        it->second.variant = m.report.model_variant;
        it->second.param_count = m.param_count;
      } else if (it->second.variant != m.report.model_variant) {
        throw ArgumentError("model role '" + m.role + "' is " + it->second.variant + " in one fold and " +
                            m.report.model_variant + " in " + f->fold_id);
      }
      it->second.precision.push_back(m.report.precision);
      it->second.recall.push_back(m.report.recall);
      it->second.f1.push_back(m.report.f1);
    }
    for (const FidelityCurve& c : f->curves) {
      const std::string key = to_string(c.mode) + "/" + to_string(c.ranking_source);
      if (!aucs.count(key)) curve_order.push_back(key);
      aucs[key].push_back(c.auc);
    }
  }

  std::filesystem::create_directories(dir);
  nlohmann::ordered_json summary;
  auto fold_names = nlohmann::ordered_json::array();
  for (const FoldReport* f : sorted) fold_names.push_back(f->fold_id);
  summary["folds"] = fold_names;
  auto models = nlohmann::ordered_json::array();
  for (const auto& role : role_order) {
    const RoleStats& s = roles[role];
    models.push_back({{"role", role},
                      {"model_variant", s.variant},
                      {"param_count", s.param_count},
                      {"precision", to_json(mean_std(s.precision))},
                      {"recall", to_json(mean_std(s.recall))},
                      {"f1", to_json(mean_std(s.f1))}});
  }
  summary["models"] = models;
  auto fidelity = nlohmann::ordered_json::array();
  for (const auto& key : curve_order) {
    const auto slash = key.find('/');
    fidelity.push_back({{"mode", key.substr(0, slash)},
                        {"ranking_source", key.substr(slash + 1)},
                        {"granularity", "channel"},
                        {"auc", to_json(mean_std(aucs[key]))}});
  }
  summary["fidelity"] = fidelity;
  {
    std::ofstream os(dir / "summary.json");
    if (!os) throw IoError("cannot write " + (dir / "summary.json").string());
    os << summary.dump(2) << '\n';
  }

  auto box = open_csv(dir / "boxplot.csv", {"fold_id", "role", "model_variant", "f1"});
  auto bar = open_csv(dir / "importance_bar.csv", {"fold_id", "channel_name", "psi"});
  auto curves = open_csv(dir / "fidelity_curves.csv",
                         {"fold_id", "mode", "ranking_source", "n_features_changed", "f1", "auc"});
  auto pairs = open_csv(dir / "shap_vs_value.csv", {"fold_id", "channel_name", "value", "phi"});
  for (const FoldReport* f : sorted) {
    for (const ModelResult& m : f->models) {
      write_csv_row(box, {f->fold_id, m.role, m.report.model_variant, format_double(m.report.f1)});
    }
    for (std::size_t c = 0; c < f->global_importance.size(); ++c) {
      write_csv_row(bar, {f->fold_id, f->channel_names.at(c), format_double(f->global_importance[c])});
    }
    for (const FidelityCurve& c : f->curves) {
      for (const auto& [k, y] : c.steps) {
        write_csv_row(curves, {f->fold_id, to_string(c.mode), to_string(c.ranking_source), std::to_string(k),
                               format_double(y), format_double(c.auc)});
      }
    }
    for (const ShapValuePair& p : f->shap_vs_value) {
      write_csv_row(pairs, {f->fold_id, p.channel, format_double(p.value), format_double(p.phi)});
    }
  }
}

}  // namespace prometheus::eval
