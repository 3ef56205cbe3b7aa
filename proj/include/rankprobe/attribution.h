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

// Score attribution to final-layer neurons through a linear score head.
//
// For score(a) = w . a + bias the path-integrated gradient from a baseline
// b is exactly w_j * (a_j - b_j) per neuron, so no integration is done.

#ifndef RANKPROBE_ATTRIBUTION_H_
#define RANKPROBE_ATTRIBUTION_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rankprobe/actstore.h"
#include "rankprobe/probekit.h"

namespace rankprobe::attr {

struct ScoreHead {
  Eigen::VectorXd weights;
  double bias = 0.0;

  double score(const Eigen::Ref<const Eigen::VectorXd>& acts) const;
};

// {"weights": [...], "bias": x}
std::string head_to_json(const ScoreHead& head);
ScoreHead head_from_json(const std::string& text);
ScoreHead read_head(const std::string& path);
void write_head(const ScoreHead& head, const std::string& path);

struct AttributionResult {
  Eigen::VectorXd contributions;
  Eigen::VectorXd baseline;
  double score = 0.0;           // head(acts)
  double baseline_score = 0.0;  // head(baseline)
};

AttributionResult neuron_contributions(const Eigen::Ref<const Eigen::VectorXd>& final_acts,
                                       const ScoreHead& head,
                                       const Eigen::Ref<const Eigen::VectorXd>& baseline);

// Relative gap between sum(contributions) + head(baseline) and head(acts).
double completeness_error(const AttributionResult& r);

inline constexpr size_t kRandomGroups = 10000;

// Percentage of `n_random` random same-size neuron groups whose mean
// |contribution| is <= the group's. Ties count in the group's favour, so a
// vector of equal contributions scores 100.
double group_percentile(std::span<const double> contributions,
                        std::span<const size_t> group, uint64_t seed,
                        size_t n_random = kRandomGroups);

enum class Baseline { kZero, kMean };
Baseline parse_baseline(const std::string& text);

struct ValidationOptions {
  size_t n_pairs = 100;
  uint64_t seed = 0;
  Baseline baseline = Baseline::kZero;
  double threshold = 95.0;
  size_t n_random = kRandomGroups;
  unsigned threads = 1;
};

struct ValidationSummary {
  std::string feature;
  size_t cases_at_95th = 0;
  size_t n_pairs = 0;
  uint64_t seed = 0;
  std::vector<std::string> pair_ids;
  std::vector<double> percentiles;
};

// Samples n_pairs store rows, attributes each pair's score and counts the
// pairs where the probe's nonzero neurons reach the threshold percentile.
// The probe must come from the store's final layer.
ValidationSummary validate_probe_neurons(const probe::ProbeModel& probe,
                                         const act::ActivationStore& store,
                                         const ScoreHead& head,
                                         const ValidationOptions& options);

// {feature, cases_at_95th, n_pairs, seed}
std::string summary_to_json(const ValidationSummary& summary);

}  // namespace rankprobe::attr

#endif  // RANKPROBE_ATTRIBUTION_H_
