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

// Synthetic fixtures shared by the unit tests and the acceptance binary.

#ifndef RANKPROBE_TESTS_SYNTHETIC_H_
#define RANKPROBE_TESTS_SYNTHETIC_H_

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "rankprobe/actstore.h"
#include "rankprobe/attribution.h"
#include "rankprobe/common.h"
#include "rankprobe/corpus.h"
#include "rankprobe/group_expr.h"
#include "rankprobe/irfeatures.h"

namespace synthetic {

struct FeatureInstance {
  rankprobe::ir::TokenStream query;
  rankprobe::ir::TokenStream doc;
  std::vector<rankprobe::ir::TokenStream> corpus;  // includes doc
};

// Small random query/doc/corpus over a tiny vocabulary so that repeats,
// misses and shared terms are all common.
inline FeatureInstance random_instance(rankprobe::Rng& rng) {
  static const std::vector<std::string> vocab = {"a", "b", "c", "d", "e",
                                                 "f", "g", "\xc3\xa9t\xc3\xa9", "x1"};
  auto stream = [&](size_t lo, size_t hi) {
    rankprobe::ir::TokenStream s;
    const size_t n = lo + rng.below(hi - lo + 1);
    for (size_t i = 0; i < n; ++i) s.tokens.push_back(vocab[rng.below(vocab.size())]);
    return s;
  };
  FeatureInstance f;
  f.query = stream(1, 4);
  f.doc = stream(1, 20);
  const size_t others = rng.below(6);
  const size_t at = rng.below(others + 1);
  for (size_t i = 0; i <= others; ++i) f.corpus.push_back(i == at ? f.doc : stream(1, 20));
  return f;
}

struct PlantedStore {
  rankprobe::act::ActivationStore store;
  rankprobe::corpus::ProbeDataset dataset;
  rankprobe::act::PlantedSignal signal;
};

// `n_layers` x `n_samples` x `n_neurons` Gaussian store with one linear
// signal over `k` neurons of `layer`. Labels are U(0, label_scale) unless
// given; noise sd is noise_frac * sd(labels).
inline PlantedStore planted_store(uint64_t seed, size_t layer, size_t n_layers = 5,
                                  size_t n_samples = 2000, size_t n_neurons = 256,
                                  size_t k = 3, double noise_frac = 0.01,
                                  std::vector<double> labels = {}, double weight = 1.0,
                                  double label_scale = 10.0) {
  PlantedStore p;
  rankprobe::Rng rng(rankprobe::derive_seed(seed, "fixture"));
  if (labels.empty()) {
    for (size_t i = 0; i < n_samples; ++i) labels.push_back(rng.uniform(0.0, label_scale));
  }
  const double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / labels.size();
  double var = 0.0;
  for (double v : labels) var += (v - mean) * (v - mean);
  var /= labels.size();

  p.signal.layer = layer;
  p.signal.neurons = rng.sample_without_replacement(n_neurons, k);
  std::sort(p.signal.neurons.begin(), p.signal.neurons.end());
  p.signal.weights.assign(k, weight);
  p.signal.labels = labels;
  p.signal.noise_sd = noise_frac * std::sqrt(var);

  rankprobe::act::SynthOptions opts;
  opts.seed = seed;
  opts.n_samples = n_samples;
  opts.n_layers = n_layers;
  opts.n_neurons = n_neurons;
  p.store = rankprobe::act::synth_activations(
      opts, std::span<const rankprobe::act::PlantedSignal>(&p.signal, 1));
  p.dataset.feature_name = "planted";
  p.dataset.pair_ids = p.store.pair_ids();
  p.dataset.labels = labels;
  p.dataset.seed = seed;
  return p;
}

// Score head carrying `planted` weights on the planted neurons and small
// Gaussian weights elsewhere.
inline rankprobe::attr::ScoreHead head_for(const PlantedStore& p, bool aligned,
                                           uint64_t seed, double background = 0.05) {
  rankprobe::attr::ScoreHead head;
  const auto n = static_cast<Eigen::Index>(p.store.n_neurons());
  head.weights.resize(n);
  rankprobe::Rng rng(rankprobe::derive_seed(seed, "head"));
  for (Eigen::Index j = 0; j < n; ++j) head.weights(j) = background * rng.normal();
  for (size_t i = 0; i < p.signal.neurons.size(); ++i) {
    head.weights(static_cast<Eigen::Index>(p.signal.neurons[i])) =
        aligned ? p.signal.weights[i] : 0.0;
  }
  return head;
}

// Three independent base features and the composite label
// (QTR + STF + VTFIDF)^2 over their min-max normalized values.
struct GroupFixture {
  std::map<std::string, std::vector<double>> base;
  std::vector<double> group;
};

inline GroupFixture group_fixture(uint64_t seed, size_t n) {
  GroupFixture g;
  rankprobe::Rng rng(rankprobe::derive_seed(seed, "group-base"));
  for (const char* name : {"QTR", "STF", "VTFIDF"}) {
    auto& col = g.base[name];
    for (size_t i = 0; i < n; ++i) col.push_back(rng.uniform());
  }
  const auto expr = rankprobe::ir::GroupExpr::parse("(QTR+STF+VTFIDF)^2");
  g.group = rankprobe::ir::group_labels(expr, g.base, true);
  return g;
}

}  // namespace synthetic

#endif  // RANKPROBE_TESTS_SYNTHETIC_H_
