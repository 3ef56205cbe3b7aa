// Copyright 2026 The rankprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rankprobe/report.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"
#include "rankprobe/actstore.h"
#include "rankprobe/common.h"
#include "rankprobe/group_expr.h"

namespace rankprobe::report {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void ensure_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw ConfigError(what + " not found: " + path);
}

fs::path subdir(const Context& ctx, const std::string& name) {
  fs::path p = ctx.out / name;
  fs::create_directories(p);
  return p;
}

std::string canonical_feature(const std::string& name) {
  return ir::is_feature_name(name) ? ir::resolve_feature(name).id : name;
}

// Feature names from `key`, falling back to features.names. "all" expands
// to the registry.
std::vector<std::string> feature_list(const Context& ctx, const std::string& key) {
  std::vector<std::string> names = ctx.config.get_list(key);
  if (names.empty()) names = ctx.config.get_list("features.names");
  if (names.empty()) throw ConfigError("no features configured (set " + key + ")");
  std::vector<std::string> out;
  for (const auto& n : names) {
    if (n == "all") {
      for (const auto& info : ir::feature_registry()) out.push_back(info.id);
    } else {
      out.push_back(n);
    }
  }
  return out;
}

std::string labels_dir(const Context& ctx) {
  return ctx.config.get("labels.dir", (ctx.out / "labels").string());
}

// A balanced dataset when one exists, else every labelled pair.
corpus::ProbeDataset dataset_for(const Context& ctx, const std::string& feature) {
  const std::string name = slug(canonical_feature(feature));
  const fs::path ds = fs::path(ctx.config.get("probe.datasets_dir",
                                              (ctx.out / "datasets").string())) /
                      (name + ".csv");
  if (fs::is_regular_file(ds)) return corpus::read_dataset(ds.string());
  const std::string lp = (fs::path(labels_dir(ctx)) / (name + ".csv")).string();
  if (!fs::is_regular_file(lp)) {
    throw ConfigError("no dataset or labels for feature '" + feature + "' (looked for " +
                      ds.string() + " and " + lp + ")");
  }
  const ir::LabelTable t = ir::read_labels(lp);
  corpus::ProbeDataset d;
  d.feature_name = t.feature_name;
  d.pair_ids = t.pair_ids;
  d.labels = t.values;
  d.seed = ctx.seed;
  return d;
}

ordered_json curve_summary(const probe::LayerCurve& c) {
  ordered_json j;
  j["verdict"] = to_string(probe::verdict(c));
  j["argmax_layer"] = c.argmax_layer;
  j["max_r2"] = c.max_r2;
  j["final_r2"] = c.final_r2();
  return j;
}

void merge_verdicts(const Context& ctx, const std::map<std::string, ordered_json>& entries) {
  const fs::path path = ctx.out / "verdicts.json";
  fs::create_directories(ctx.out);
  std::map<std::string, ordered_json> all;
  if (fs::is_regular_file(path)) {
    const auto existing = ordered_json::parse(read_file(path.string()));
    for (const auto& [k, v] : existing.items()) all[k] = v;
  }
  for (const auto& [k, v] : entries) all[k] = v;
  ordered_json out = ordered_json::object();
  for (const auto& [k, v] : all) out[k] = v;
  write_file(path.string(), out.dump(2) + "\n");
}

void write_curve(const Context& ctx, const std::string& name, const probe::LayerCurve& c) {
  const fs::path dir = subdir(ctx, "curves");
  write_file((dir / (name + ".csv")).string(), probe::curve_to_csv(c));
  write_file((dir / (name + ".json")).string(), probe::curve_to_json(c));
}

act::ActivationStore load_store(const Context& ctx, const std::string& key) {
  const std::string path = ctx.config.require(key);
  ensure_file(path, "activation store");
  return act::read_store(path);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const std::string t = trim(text);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) {
    throw ConfigError("invalid value for " + key + ": '" + text + "'");
  }
  return v;
}

}  // namespace

// ---- Config ----------------------------------------------------------------

Config Config::parse(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Config c;
  for (const auto& [section, node] : tree) {
    if (node.empty()) {
      c.values_[section] = trim(node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) c.values_[section + "." + key] = trim(leaf.data());
  }
  return c;
}

Config Config::load(const std::string& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path);
  return parse(read_file(path));
}

void Config::set(const std::string& dotted_key, const std::string& value) {
  values_[dotted_key] = trim(value);
}

bool Config::has(const std::string& dotted_key) const { return values_.contains(dotted_key); }

std::optional<std::string> Config::get(const std::string& dotted_key) const {
  auto it = values_.find(dotted_key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get(const std::string& dotted_key, const std::string& fallback) const {
  return get(dotted_key).value_or(fallback);
}

std::string Config::require(const std::string& dotted_key) const {
  auto v = get(dotted_key);
  if (!v || v->empty()) throw ConfigError("missing config key " + dotted_key);
  return *v;
}

double Config::get_double(const std::string& dotted_key, double fallback) const {
  auto v = get(dotted_key);
  if (!v) return fallback;
  const double d = parse_number<double>(dotted_key, *v);
  if (!std::isfinite(d)) throw ConfigError("non-finite value for " + dotted_key);
  return d;
}

int64_t Config::get_int(const std::string& dotted_key, int64_t fallback) const {
  auto v = get(dotted_key);
  return v ? parse_number<int64_t>(dotted_key, *v) : fallback;
}

bool Config::get_bool(const std::string& dotted_key, bool fallback) const {
  auto v = get(dotted_key);
  if (!v) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ConfigError("invalid boolean for " + dotted_key + ": '" + *v + "'");
}

std::vector<std::string> Config::get_list(const std::string& dotted_key, char sep) const {
  std::vector<std::string> out;
  auto v = get(dotted_key);
  if (!v) return out;
  for (const auto& part : split(*v, sep)) {
    std::string t = trim(part);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

Context make_context(Config config, std::optional<std::string> out,
                     std::optional<uint64_t> seed, std::optional<unsigned> threads) {
  Context ctx;
  ctx.out = out ? *out : config.get("run.out", "rankprobe_out");
  if (seed) {
    ctx.seed = *seed;
  } else {
    const int64_t s = config.get_int("run.seed", 0);
    if (s < 0) throw ConfigError("run.seed must be non-negative");
    ctx.seed = static_cast<uint64_t>(s);
  }
  if (threads) {
    ctx.threads = *threads;
  } else {
    const int64_t t = config.get_int("run.threads", 1);
    if (t < 1) throw ConfigError("run.threads must be positive");
    ctx.threads = static_cast<unsigned>(t);
  }
  if (ctx.threads == 0) throw ConfigError("--threads must be positive");
  ctx.config = std::move(config);
  return ctx;
}

probe::ProbeConfig probe_config(const Context& ctx) {
  const Config& c = ctx.config;
  probe::ProbeConfig p;
  p.alpha = c.get_double("probe.alpha", p.alpha);
  p.l2 = c.get_double("probe.l2", p.l2);
  p.max_iter = static_cast<int>(c.get_int("probe.max_iter", p.max_iter));
  p.tol = c.get_double("probe.tol", p.tol);
  p.k_folds = static_cast<int>(c.get_int("probe.k_folds", p.k_folds));
  p.seed = ctx.seed;
  p.split = corpus::parse_split(c.get("probe.split", "60:20:20"), ctx.seed);
  p.sweep_cv = c.get_bool("probe.cv", false);
  p.validate();
  return p;
}

std::string slug(const std::string& name) {
  std::string out;
  for (unsigned char ch : name) {
    if (std::isalnum(ch) || ch == '_' || ch == '-' || ch == '.') {
      out += static_cast<char>(ch);
    } else if (ch == '+') {
      out += "_plus_";
    } else if (ch == '*') {
      out += "_x_";
    } else if (ch == '^') {
      out += "_pow";
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  if (out.empty()) throw ConfigError("name '" + name + "' has no usable characters");
  return out;
}

// ---- Comparison --------------------------------------------------------------

std::vector<SpiderCell> ComparisonTable::spider() const {
  std::vector<SpiderCell> out;
  for (size_t f = 0; f < features.size(); ++f) {
    for (size_t r = 0; r < runs.size(); ++r) {
      const double raw = cells[f][r];
      out.push_back({features[f], runs[r], std::clamp(raw, 0.0, 1.0), raw});
    }
  }
  return out;
}

std::string comparison_to_json(const ComparisonTable& table) {
  ordered_json j;
  j["statistic"] = table.statistic;
  j["runs"] = table.runs;
  j["features"] = table.features;
  ordered_json cells = ordered_json::object();
  for (size_t f = 0; f < table.features.size(); ++f) {
    ordered_json row = ordered_json::object();
    for (size_t r = 0; r < table.runs.size(); ++r) row[table.runs[r]] = table.cells[f][r];
    cells[table.features[f]] = row;
  }
  j["table"] = cells;
  ordered_json spider = ordered_json::array();
  for (const auto& s : table.spider()) {
    spider.push_back({{"feature", s.feature}, {"run", s.run}, {"value", s.value}, {"raw", s.raw}});
  }
  j["spider"] = spider;
  return j.dump(2) + "\n";
}

// ---- Commands --------------------------------------------------------------

std::vector<ir::LabelTable> cmd_features(const Context& ctx) {
  const auto names = feature_list(ctx, "features.names");
  for (const auto& n : names) ir::resolve_feature(n);
  const std::string run = ctx.config.require("corpus.run");
  const std::string queries = ctx.config.require("corpus.queries");
  const std::string collection = ctx.config.require("corpus.collection");
  ensure_file(run, "run file");
  ensure_file(queries, "queries file");
  ensure_file(collection, "collection file");
  ir::Bm25Params params;
  params.k1 = ctx.config.get_double("features.k1", params.k1);
  params.b = ctx.config.get_double("features.b", params.b);

  const corpus::PairSet pairs = corpus::load_run(run, queries, collection);
  auto tables = ir::compute_labels(pairs, names, params, ctx.threads);
  const fs::path dir = subdir(ctx, "labels");
  for (const auto& t : tables) ir::write_labels(t, (dir / (t.feature_name + ".csv")).string());
  return tables;
}

std::vector<corpus::ProbeDataset> cmd_balance(const Context& ctx) {
  const auto names = feature_list(ctx, "balance.features");
  corpus::BalanceOptions opts;
  opts.n_bins = static_cast<int>(ctx.config.get_int("balance.n_bins", opts.n_bins));
  opts.per_bin = static_cast<int>(ctx.config.get_int("balance.per_bin", opts.per_bin));
  opts.seed = ctx.seed;
  const std::string binning = ctx.config.get("balance.binning", "equal_width");
  if (binning == "equal_width") {
    opts.binning = corpus::Binning::kEqualWidth;
  } else if (binning == "equal_frequency") {
    opts.binning = corpus::Binning::kEqualFrequency;
  } else {
    throw ConfigError("balance.binning must be equal_width or equal_frequency");
  }
  if (opts.n_bins < 2 || opts.per_bin < 1) {
    throw ConfigError("balance.n_bins must be >= 2 and balance.per_bin positive");
  }

  std::vector<std::string> paths;
  for (const auto& n : names) {
    const auto p = (fs::path(labels_dir(ctx)) / (slug(canonical_feature(n)) + ".csv")).string();
    ensure_file(p, "label file");
    paths.push_back(p);
  }
  std::vector<corpus::ProbeDataset> out;
  const fs::path dir = subdir(ctx, "datasets");
  for (const auto& p : paths) {
    const ir::LabelTable t = ir::read_labels(p);
    auto d = corpus::build_balanced_dataset(t.pair_ids, t.values, t.feature_name, opts);
    corpus::write_dataset(d, (dir / (slug(t.feature_name) + ".csv")).string());
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<probe::LayerCurve> cmd_probe(const Context& ctx) {
  const auto names = feature_list(ctx, "probe.features");
  const probe::ProbeConfig pc = probe_config(ctx);
  std::vector<corpus::ProbeDataset> datasets;
  for (const auto& n : names) datasets.push_back(dataset_for(ctx, n));
  const act::ActivationStore store = load_store(ctx, "probe.store");

  std::vector<probe::LayerCurve> curves;
  std::map<std::string, ordered_json> verdicts;
  const fs::path probes = subdir(ctx, "probes");
  for (const auto& d : datasets) {
    const auto result = probe::sweep_layers(store, d, pc, ctx.threads);
    const std::string name = slug(d.feature_name);
    write_curve(ctx, name, result.curve);
    write_file((probes / (name + ".final.json")).string(),
               probe::model_to_json(result.models.back()));
    write_file((probes / (name + ".best.json")).string(),
               probe::model_to_json(result.models[result.curve.argmax_layer]));
    verdicts[d.feature_name] = curve_summary(result.curve);
    curves.push_back(result.curve);
  }
  merge_verdicts(ctx, verdicts);
  return curves;
}

std::vector<GroupProbeResult> cmd_group_probe(const Context& ctx) {
  const auto exprs_text = ctx.config.get_list("group.expressions", ';');
  if (exprs_text.empty()) throw ConfigError("missing config key group.expressions");
  std::vector<ir::GroupExpr> exprs;
  for (const auto& t : exprs_text) {
    try {
      exprs.push_back(ir::GroupExpr::parse(t));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    for (const auto& leaf : exprs.back().leaves()) ir::resolve_feature(leaf);
  }
  const probe::ProbeConfig pc = probe_config(ctx);
  const act::ActivationStore store =
      load_store(ctx, ctx.config.has("group.store") ? "group.store" : "probe.store");
  const bool normalize = ctx.config.get_bool("group.normalize", true);

  std::vector<GroupProbeResult> results;
  std::map<std::string, ordered_json> verdicts;
  for (const auto& expr : exprs) {
    std::map<std::string, std::vector<double>> columns;
    std::vector<std::string> ids;
    for (const auto& leaf : expr.leaves()) {
      const std::string id = ir::resolve_feature(leaf).id;
      const auto path = (fs::path(labels_dir(ctx)) / (id + ".csv")).string();
      ensure_file(path, "label file");
      const ir::LabelTable t = ir::read_labels(path);
      if (ids.empty()) {
        ids = t.pair_ids;
      } else if (t.pair_ids != ids) {
        throw std::runtime_error("label files for " + expr.to_string() +
                                 " cover different pairs");
      }
      columns[leaf] = t.values;
    }
    GroupProbeResult r;
    r.expression = expr.to_string();
    r.name = "group_" + slug(r.expression);
    corpus::ProbeDataset d;
    d.feature_name = r.expression;
    d.pair_ids = ids;
    d.labels = ir::group_labels(expr, columns, normalize);
    d.seed = ctx.seed;
    auto sweep = probe::sweep_layers(store, d, pc, ctx.threads);
    r.curve = sweep.curve;
    for (const auto& leaf : expr.leaves()) {
      corpus::ProbeDataset single = d;
      single.feature_name = ir::resolve_feature(leaf).id;
      single.labels = columns.at(leaf);
      r.leaf_curves.push_back(probe::sweep_layers(store, single, pc, ctx.threads).curve);
    }
    write_curve(ctx, r.name, r.curve);
    ordered_json summary;
    summary["expression"] = r.expression;
    summary["group"] = curve_summary(r.curve);
    ordered_json leaves = ordered_json::object();
    for (const auto& lc : r.leaf_curves) {
      ordered_json lj = curve_summary(lc);
      lj["r2_at_group_layer"] = lc.r2_test.at(static_cast<size_t>(r.curve.argmax_layer));
      leaves[lc.feature_name] = lj;
    }
    summary["leaves"] = leaves;
    write_file((subdir(ctx, "curves") / (r.name + ".summary.json")).string(),
               summary.dump(2) + "\n");
    verdicts[r.expression] = curve_summary(r.curve);
    results.push_back(std::move(r));
  }
  merge_verdicts(ctx, verdicts);
  return results;
}

ComparisonTable cmd_compare(const Context& ctx) {
  const auto specs = ctx.config.get_list("compare.runs");
  if (specs.size() < 2) throw ConfigError("compare.runs needs at least two label=dir entries");
  ComparisonTable table;
  table.statistic = ctx.config.get("compare.statistic", "max");
  if (table.statistic != "max" && table.statistic != "final") {
    throw ConfigError("compare.statistic must be max or final");
  }
  const int64_t from_layer = ctx.config.get_int("compare.from_layer", 0);
  if (from_layer < 0) throw ConfigError("compare.from_layer must be >= 0");
  std::vector<fs::path> dirs;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("compare.runs entry '" + s + "' is not label=dir");
    const std::string label = trim(s.substr(0, eq));
    if (std::find(table.runs.begin(), table.runs.end(), label) != table.runs.end()) {
      throw ConfigError("duplicate run label '" + label + "'");
    }
    const fs::path dir = fs::path(trim(s.substr(eq + 1))) / "curves";
    if (!fs::is_directory(dir)) throw ConfigError("no curves directory: " + dir.string());
    table.runs.push_back(label);
    dirs.push_back(dir);
  }

  std::vector<std::map<std::string, probe::LayerCurve>> per_run;
  for (const auto& dir : dirs) {
    std::map<std::string, probe::LayerCurve> curves;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto name = entry.path().filename().string();
      if (entry.path().extension() != ".json" || name.ends_with(".summary.json")) continue;
      auto c = probe::curve_from_json(read_file(entry.path().string()));
      curves[c.feature_name] = std::move(c);
    }
    per_run.push_back(std::move(curves));
  }
  auto wanted = ctx.config.get_list("compare.features");
  std::vector<std::string> features;
  if (wanted.empty()) {
    for (const auto& [f, c] : per_run[0]) features.push_back(f);
    for (size_t r = 1; r < per_run.size(); ++r) {
      std::vector<std::string> other;
      for (const auto& [f, c] : per_run[r]) other.push_back(f);
      if (other != features) {
        throw std::runtime_error("runs '" + table.runs[0] + "' and '" + table.runs[r] +
                                 "' have different feature lists");
      }
    }
  } else {
    for (const auto& w : wanted) features.push_back(canonical_feature(w));
  }
  if (features.empty()) throw std::runtime_error("no curves to compare");
  table.features = features;
  for (const auto& f : features) {
    std::vector<double> row;
    for (size_t r = 0; r < per_run.size(); ++r) {
      auto it = per_run[r].find(f);
      if (it == per_run[r].end()) {
        throw std::runtime_error("run '" + table.runs[r] + "' has no curve for " + f);
      }
      const auto& r2 = it->second.r2_test;
      if (static_cast<size_t>(from_layer) >= r2.size()) {
        throw ConfigError("compare.from_layer is past the last layer of run '" +
                          table.runs[r] + "'");
      }
      row.push_back(table.statistic == "max"
                        ? *std::max_element(r2.begin() + from_layer, r2.end())
                        : it->second.final_r2());
    }
    table.cells.push_back(std::move(row));
  }

  fs::create_directories(ctx.out);
  write_file((ctx.out / "comparison.json").string(), comparison_to_json(table));
  std::string csv = "feature,run,value,raw\n";
  for (const auto& s : table.spider()) {
    csv += csv_field(s.feature) + "," + csv_field(s.run) + "," + format_double(s.value) + "," +
           format_double(s.raw) + "\n";
  }
  write_file((ctx.out / "spider.csv").string(), csv);
  return table;
}

attr::ValidationSummary cmd_validate(const Context& ctx) {
  const std::string feature = canonical_feature(ctx.config.require("validate.feature"));
  const std::string probe_path = ctx.config.get(
      "validate.probe", (ctx.out / "probes" / (slug(feature) + ".final.json")).string());
  const std::string head_path = ctx.config.require("validate.head");
  ensure_file(probe_path, "probe file");
  ensure_file(head_path, "score head file");
  attr::ValidationOptions opts;
  const int64_t n_pairs = ctx.config.get_int("validate.n_pairs", 100);
  if (n_pairs < 1) throw ConfigError("validate.n_pairs must be positive");
  opts.n_pairs = static_cast<size_t>(n_pairs);
  opts.seed = ctx.seed;
  opts.baseline = attr::parse_baseline(ctx.config.get("validate.baseline", "zero"));
  opts.threshold = ctx.config.get_double("validate.threshold", 95.0);
  opts.threads = ctx.threads;
  const act::ActivationStore store =
      load_store(ctx, ctx.config.has("validate.store") ? "validate.store" : "probe.store");

  const probe::ProbeModel model = probe::model_from_json(read_file(probe_path));
  const attr::ScoreHead head = attr::read_head(head_path);
  auto summary = attr::validate_probe_neurons(model, store, head, opts);
  if (summary.feature.empty()) summary.feature = feature;
  write_file((subdir(ctx, "validation") / (slug(feature) + ".json")).string(),
             attr::summary_to_json(summary));
  return summary;
}

act::ActivationStore cmd_synth(const Context& ctx) {
  const Config& c = ctx.config;
  act::SynthOptions opts;
  opts.seed = ctx.seed;
  opts.n_layers = static_cast<size_t>(c.get_int("synth.n_layers", 5));
  opts.n_neurons = static_cast<size_t>(c.get_int("synth.n_neurons", 256));
  opts.dtype = act::parse_dtype(c.get("synth.dtype", "f32"));
  const std::string feature = c.get("synth.feature", "synthetic");
  const auto layer = c.get_int("synth.layer", 3);
  const auto k = c.get_int("synth.neurons", 3);
  const double noise = c.get_double("synth.noise", 0.01);
  if (layer < 0 || static_cast<size_t>(layer) >= opts.n_layers) {
    throw ConfigError("synth.layer must be a valid layer index");
  }
  if (k < 1 || static_cast<size_t>(k) > opts.n_neurons) {
    throw ConfigError("synth.neurons must be in [1, n_neurons]");
  }
  if (noise < 0.0) throw ConfigError("synth.noise must be >= 0");

  act::PlantedSignal signal;
  signal.layer = static_cast<size_t>(layer);
  if (auto path = c.get("synth.labels")) {
    ensure_file(*path, "label file");
    const ir::LabelTable t = ir::read_labels(*path);
    opts.pair_ids = t.pair_ids;
    signal.labels = t.values;
  } else {
    const auto n = c.get_int("synth.n_samples", 2000);
    if (n < 2) throw ConfigError("synth.n_samples must be >= 2");
    opts.pair_ids = act::default_pair_ids(static_cast<size_t>(n));
    const double scale = c.get_double("synth.label_scale", 10.0);
    Rng rng(derive_seed(ctx.seed, "synth-labels"));
    for (int64_t i = 0; i < n; ++i) signal.labels.push_back(rng.uniform(0.0, scale));
  }
  opts.n_samples = opts.pair_ids.size();

  Rng rng(derive_seed(ctx.seed, "synth-neurons"));
  signal.neurons = rng.sample_without_replacement(opts.n_neurons, static_cast<size_t>(k));
  std::sort(signal.neurons.begin(), signal.neurons.end());
  const auto weights = c.get_list("synth.weights");
  if (weights.empty()) {
    signal.weights.assign(signal.neurons.size(), 1.0);
  } else {
    if (weights.size() != signal.neurons.size()) {
      throw ConfigError("synth.weights needs one weight per planted neuron");
    }
    for (const auto& w : weights) signal.weights.push_back(parse_number<double>("synth.weights", w));
  }
  const double mean = std::accumulate(signal.labels.begin(), signal.labels.end(), 0.0) /
                      static_cast<double>(signal.labels.size());
  double var = 0.0;
  for (double v : signal.labels) var += (v - mean) * (v - mean);
  signal.noise_sd = noise * std::sqrt(var / static_cast<double>(signal.labels.size()));

  const act::ActivationStore store =
      act::synth_activations(opts, std::span<const act::PlantedSignal>(&signal, 1));
  fs::create_directories(ctx.out);
  const std::string store_path = c.get("synth.store_out", (ctx.out / "store.aprb").string());
  act::write_store(store, store_path);

  ir::LabelTable t{feature, opts.pair_ids, signal.labels};
  ir::write_labels(t, (subdir(ctx, "labels") / (slug(feature) + ".csv")).string());

  const std::string head_mode = c.get("synth.head", "aligned");
  if (head_mode != "none") {
    if (head_mode != "aligned" && head_mode != "zeroed") {
      throw ConfigError("synth.head must be aligned, zeroed or none");
    }
    const double bg = c.get_double("synth.head_background", 0.05);
    attr::ScoreHead head;
    head.weights.resize(static_cast<Eigen::Index>(opts.n_neurons));
    Rng hr(derive_seed(ctx.seed, "synth-head"));
    for (auto& w : head.weights) w = bg * hr.normal();
    for (size_t i = 0; i < signal.neurons.size(); ++i) {
      head.weights(static_cast<Eigen::Index>(signal.neurons[i])) =
          head_mode == "aligned" ? signal.weights[i] : 0.0;
    }
    attr::write_head(head, (ctx.out / "head.json").string());
  }

  ordered_json meta;
  meta["feature"] = feature;
  meta["layer"] = signal.layer;
  meta["neurons"] = signal.neurons;
  meta["weights"] = signal.weights;
  meta["noise_sd"] = signal.noise_sd;
  meta["seed"] = ctx.seed;
  write_file((ctx.out / "synth.json").string(), meta.dump(2) + "\n");
  return store;
}

void cmd_demo_corpus(const Context& ctx) {
  corpus::DemoCorpusOptions opts;
  opts.n_queries = static_cast<int>(ctx.config.get_int("demo.n_queries", opts.n_queries));
  opts.docs_per_query =
      static_cast<int>(ctx.config.get_int("demo.docs_per_query", opts.docs_per_query));
  opts.vocab_size = static_cast<int>(ctx.config.get_int("demo.vocab_size", opts.vocab_size));
  opts.seed = ctx.seed;
  if (opts.n_queries < 1 || opts.docs_per_query < 1 || opts.vocab_size < 10) {
    throw ConfigError("demo corpus sizes must be positive (vocab_size >= 10)");
  }
  corpus::write_demo_corpus((ctx.out / "corpus").string(), opts);
}

std::string example_config() {
  return R"(# rankprobe experiment config. Keys can be overridden with --set section.key=value.
[run]
out = rankprobe_out
seed = 0
threads = 1

[corpus]
run = corpus/run.trec
queries = corpus/queries.tsv
collection = corpus/collection.tsv

[features]
# comma-separated ids, display names or aliases; "all" for the registry
names = all
k1 = 1.2
b = 0.75

[balance]
n_bins = 10
per_bin = 600
binning = equal_width

[probe]
store = store.aprb
alpha = 0.1
l2 = 0
max_iter = 10000
tol = 1e-6
k_folds = 5
split = 60:20:20
cv = false

[group]
expressions = (QTR+STF+VTFIDF)^2
normalize = true

[compare]
runs = in-dist=run_a, ood=run_b
statistic = max
# "max" looks at layers from_layer..last only
from_layer = 0

[validate]
feature = bm25
head = head.json
n_pairs = 100
baseline = zero
threshold = 95

[synth]
n_samples = 2000
n_layers = 5
n_neurons = 256
layer = 3
neurons = 3
noise = 0.01
label_scale = 10
dtype = f32
head = aligned
)";
}

}  // namespace rankprobe::report
