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

// Experiment orchestration behind the command-line tool.
//
// Every command reads an INI-style Config and writes into one output
// directory:
//
//   labels/<feature>.csv        pair_id,feature_name,value
//   datasets/<feature>.csv      balanced ProbeDataset (+ .json sidecar)
//   curves/<feature>.{csv,json} per-layer R^2 and verdict
//   probes/<feature>.{final,best}.json
//   verdicts.json               feature -> verdict summary
//   comparison.json, spider.csv
//   validation/<feature>.json
//
// All output is a pure function of the config and seed.

#ifndef RANKPROBE_REPORT_H_
#define RANKPROBE_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rankprobe/attribution.h"
#include "rankprobe/corpus.h"
#include "rankprobe/irfeatures.h"
#include "rankprobe/probekit.h"

namespace rankprobe::report {

// Sections of `key = value` lines. Keys are addressed as "section.key".
// Typed getters throw ConfigError on malformed values.
class Config {
 public:
  Config() = default;
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  void set(const std::string& dotted_key, const std::string& value);
  bool has(const std::string& dotted_key) const;
  std::optional<std::string> get(const std::string& dotted_key) const;
  std::string get(const std::string& dotted_key, const std::string& fallback) const;
  // Throws ConfigError naming the key when it is absent.
  std::string require(const std::string& dotted_key) const;

  double get_double(const std::string& dotted_key, double fallback) const;
  int64_t get_int(const std::string& dotted_key, int64_t fallback) const;
  bool get_bool(const std::string& dotted_key, bool fallback) const;
  // Comma-separated list; empty when the key is absent.
  std::vector<std::string> get_list(const std::string& dotted_key, char sep = ',') const;

 private:
  std::map<std::string, std::string> values_;
};

struct Context {
  Config config;
  std::filesystem::path out = "rankprobe_out";
  uint64_t seed = 0;
  unsigned threads = 1;
};

// Resolves [run] out/seed/threads from the config; explicit overrides win.
Context make_context(Config config, std::optional<std::string> out,
                     std::optional<uint64_t> seed, std::optional<unsigned> threads);

probe::ProbeConfig probe_config(const Context& ctx);

// Spider-chart cell: the display value is clamped to [0, 1].
struct SpiderCell {
  std::string feature;
  std::string run;
  double value = 0.0;
  double raw = 0.0;
};

struct ComparisonTable {
  std::string statistic;  // "max" or "final"
  std::vector<std::string> runs;
  std::vector<std::string> features;
  // cells[f][r]
  std::vector<std::vector<double>> cells;

  std::vector<SpiderCell> spider() const;
};

std::string comparison_to_json(const ComparisonTable& table);

struct GroupProbeResult {
  std::string expression;
  std::string name;
  probe::LayerCurve curve;
  // Single-leaf probes on the same store, in expr.leaves() order.
  std::vector<probe::LayerCurve> leaf_curves;
};

// File-system safe name for a feature or expression.
std::string slug(const std::string& name);

std::vector<ir::LabelTable> cmd_features(const Context& ctx);
std::vector<corpus::ProbeDataset> cmd_balance(const Context& ctx);
std::vector<probe::LayerCurve> cmd_probe(const Context& ctx);
std::vector<GroupProbeResult> cmd_group_probe(const Context& ctx);
ComparisonTable cmd_compare(const Context& ctx);
attr::ValidationSummary cmd_validate(const Context& ctx);
act::ActivationStore cmd_synth(const Context& ctx);
void cmd_demo_corpus(const Context& ctx);

// Template config listing every recognised key with its default.
std::string example_config();

}  // namespace rankprobe::report

#endif  // RANKPROBE_REPORT_H_
