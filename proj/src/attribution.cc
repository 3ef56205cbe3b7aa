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

#include "rankprobe/attribution.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "rankprobe/common.h"

namespace rankprobe::attr {

double ScoreHead::score(const Eigen::Ref<const Eigen::VectorXd>& acts) const {
  if (acts.size() != weights.size()) {
    throw std::invalid_argument("score head expects " + std::to_string(weights.size()) +
                                " activations, got " + std::to_string(acts.size()));
  }
  return weights.dot(acts) + bias;
}

std::string head_to_json(const ScoreHead& head) {
  nlohmann::ordered_json j;
  j["weights"] = std::vector<double>(head.weights.begin(), head.weights.end());
  j["bias"] = head.bias;
  return j.dump() + "\n";
}

ScoreHead head_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("score head: ") + e.what());
  }
  if (!j.is_object() || !j.contains("weights") || !j.contains("bias")) {
    throw std::runtime_error("score head JSON needs 'weights' and 'bias'");
  }
  const auto w = j.at("weights").get<std::vector<double>>();
  ScoreHead head;
  head.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  head.bias = j.at("bias").get<double>();
  if (!head.weights.allFinite() || !std::isfinite(head.bias)) {
    throw std::runtime_error("score head has non-finite values");
  }
  return head;
}

ScoreHead read_head(const std::string& path) { return head_from_json(read_file(path)); }

void write_head(const ScoreHead& head, const std::string& path) {
  write_file(path, head_to_json(head));
}

AttributionResult neuron_contributions(const Eigen::Ref<const Eigen::VectorXd>& final_acts,
                                       const ScoreHead& head,
                                       const Eigen::Ref<const Eigen::VectorXd>& baseline) {
  if (final_acts.size() != head.weights.size() || baseline.size() != head.weights.size()) {
    throw std::invalid_argument("attribution length mismatch: acts " +
                                std::to_string(final_acts.size()) + ", baseline " +
                                std::to_string(baseline.size()) + ", head " +
                                std::to_string(head.weights.size()));
  }
  AttributionResult r;
  r.baseline = baseline;
  r.contributions = head.weights.cwiseProduct(final_acts - baseline);
  r.score = head.score(final_acts);
  r.baseline_score = head.score(baseline);
  return r;
}

double completeness_error(const AttributionResult& r) {
  const double lhs = r.contributions.sum() + r.baseline_score;
  const double denom = std::max({std::abs(r.score), std::abs(r.baseline_score),
                                 r.contributions.cwiseAbs().sum(), 1e-300});
  return std::abs(lhs - r.score) / denom;
}

double group_percentile(std::span<const double> contributions,
                        std::span<const size_t> group, uint64_t seed, size_t n_random) {
  const size_t n = contributions.size();
  if (group.empty()) throw std::invalid_argument("empty neuron group");
  if (group.size() > n) throw std::invalid_argument("neuron group larger than layer");
  if (n_random == 0) throw std::invalid_argument("n_random must be positive");
  std::vector<double> mag(n);
  for (size_t i = 0; i < n; ++i) mag[i] = std::abs(contributions[i]);
  double target = 0.0;
  for (size_t idx : group) {
    if (idx >= n) {
      throw std::invalid_argument("neuron index " + std::to_string(idx) + " out of range");
    }
    target += mag[idx];
  }
  const size_t k = group.size();
  target /= static_cast<double>(k);

  Rng rng(seed);
  // Partial Fisher-Yates on a persistent pool: any permutation is a valid
  // starting point, so the pool never needs resetting.
  std::vector<size_t> pool(n);
  std::iota(pool.begin(), pool.end(), size_t{0});
  size_t at_or_below = 0;
  for (size_t g = 0; g < n_random; ++g) {
    double s = 0.0;
    for (size_t i = 0; i < k; ++i) {
      const size_t j = i + static_cast<size_t>(rng.below(n - i));
      std::swap(pool[i], pool[j]);
      s += mag[pool[i]];
    }
    if (s / static_cast<double>(k) <= target) ++at_or_below;
  }
  return 100.0 * static_cast<double>(at_or_below) / static_cast<double>(n_random);
}

Baseline parse_baseline(const std::string& text) {
  if (text == "zero") return Baseline::kZero;
  if (text == "mean") return Baseline::kMean;
  throw ConfigError("unknown baseline '" + text + "' (expected zero or mean)");
}

ValidationSummary validate_probe_neurons(const probe::ProbeModel& probe,
                                         const act::ActivationStore& store,
                                         const ScoreHead& head,
                                         const ValidationOptions& options) {
  if (store.n_layers() == 0) throw std::invalid_argument("empty activation store");
  const size_t final_layer = store.n_layers() - 1;
  if (probe.layer != static_cast<int>(final_layer)) {
    throw std::invalid_argument("probe was fitted on layer " + std::to_string(probe.layer) +
                                ", but validation uses the final layer " +
                                std::to_string(final_layer));
  }
  if (static_cast<size_t>(head.weights.size()) != store.n_neurons()) {
    throw std::invalid_argument("score head has " + std::to_string(head.weights.size()) +
                                " weights, store has " + std::to_string(store.n_neurons()) +
                                " neurons");
  }
  if (static_cast<size_t>(probe.coefficients.size()) != store.n_neurons()) {
    throw std::invalid_argument("probe width does not match the store");
  }
  if (probe.nonzero_idx.empty()) {
    throw std::invalid_argument("probe has no nonzero coefficients to validate");
  }
  if (options.n_pairs == 0 || options.n_pairs > store.n_samples()) {
    throw std::invalid_argument("n_pairs must be in [1, " + std::to_string(store.n_samples()) +
                                "]");
  }

  const Eigen::MatrixXd acts = store.layer(final_layer);
  Eigen::VectorXd baseline = Eigen::VectorXd::Zero(acts.cols());
  if (options.baseline == Baseline::kMean) baseline = acts.colwise().mean().transpose();

  Rng rng(derive_seed(options.seed, "validate-pairs"));
  std::vector<size_t> rows = rng.sample_without_replacement(store.n_samples(), options.n_pairs);
  std::sort(rows.begin(), rows.end());

  ValidationSummary summary;
  summary.feature = probe.feature;
  summary.n_pairs = rows.size();
  summary.seed = options.seed;
  summary.percentiles.resize(rows.size());
  for (size_t r : rows) summary.pair_ids.push_back(store.pair_ids()[r]);

  parallel_for(rows.size(), options.threads, [&](size_t i) {
    const AttributionResult a =
        neuron_contributions(acts.row(static_cast<Eigen::Index>(rows[i])).transpose(), head,
                             baseline);
    summary.percentiles[i] = group_percentile(
        std::span<const double>(a.contributions.data(), a.contributions.size()),
        probe.nonzero_idx, derive_seed(options.seed, summary.pair_ids[i]), options.n_random);
  });
  summary.cases_at_95th = static_cast<size_t>(
      std::count_if(summary.percentiles.begin(), summary.percentiles.end(),
                    [&](double p) { return p >= options.threshold; }));
  return summary;
}

std::string summary_to_json(const ValidationSummary& summary) {
  nlohmann::ordered_json j;
  j["feature"] = summary.feature;
  j["cases_at_95th"] = summary.cases_at_95th;
  j["n_pairs"] = summary.n_pairs;
  j["seed"] = summary.seed;
  return j.dump(2) + "\n";
}

}  // namespace rankprobe::attr
