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

// Statistical query-document features used as probe targets: MSLR-style
// term-frequency aggregates, Okapi BM25, and tf*idf distance metrics.
//
// All statistics aggregate over the UNIQUE query terms in first-occurrence
// order; a query term absent from the document contributes tf = 0.

#ifndef RANKPROBE_IRFEATURES_H_
#define RANKPROBE_IRFEATURES_H_

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rankprobe/corpus.h"

namespace rankprobe::ir {

struct TokenStream {
  std::vector<std::string> tokens;
  size_t length() const { return tokens.size(); }
};

// Splits on every non-alphanumeric code point (Unicode-aware) and lowercases.
// No stemming, no stopwords.
TokenStream tokenize(std::string_view text);

struct CorpusStats {
  std::string query_id;
  int n_docs = 0;
  std::unordered_map<std::string, int> doc_freq;
  double avg_doc_length = 0.0;

  static CorpusStats from_documents(std::string query_id,
                                    std::span<const TokenStream> docs);
  int df(const std::string& term) const;
};

// Smoothed idf for tf*idf features: ln((N + 1) / (df + 1)) + 1.
double idf(const std::string& term, const CorpusStats& stats);

// Okapi idf used inside BM25: ln(1 + (N - df + 0.5) / (df + 0.5)).
double okapi_idf(const std::string& term, const CorpusStats& stats);

struct TermStatVector {
  std::vector<std::string> terms;
  std::vector<double> tf;
  std::vector<double> tfl;
  std::vector<double> tfidf;
};

TermStatVector term_stats(const TokenStream& query, const TokenStream& doc,
                          const CorpusStats& stats);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

double bm25(const TokenStream& query, const TokenStream& doc,
            const CorpusStats& stats, double avgdl,
            const Bm25Params& params = {});

enum class Aggregate { kMin, kMax, kMean, kVar, kSum };
enum class TermStat { kTf, kTfL, kTfIdf };

enum class MslrFeature {
  kMinTf, kMaxTf, kMeanTf, kVarTf, kSumTf,
  kMinTfL, kMaxTfL, kMeanTfL, kVarTfL, kSumTfL,
  kMinTfIdf, kMaxTfIdf, kMeanTfIdf, kVarTfIdf, kSumTfIdf,
  kCoveredQtNumber, kCoveredQtRatio, kStreamLength, kBm25,
};
inline constexpr int kNumMslrFeatures = 19;

enum class DistanceMetric { kCosine, kEuclidean, kManhattan, kKl, kJs };
inline constexpr int kNumDistanceMetrics = 5;

// Additive smoothing applied to KL/JS term distributions.
inline constexpr double kDistributionEpsilon = 1e-9;

// BM25 uses stats.avg_doc_length as avgdl.
double mslr_feature(MslrFeature id, const TokenStream& query,
                    const TokenStream& doc, const CorpusStats& stats,
                    const Bm25Params& params = {});

double distance_metric(DistanceMetric id, const TokenStream& query,
                       const TokenStream& doc, const CorpusStats& stats);

// Registry of every computable feature. Canonical ids are snake_case
// (`mean_tfl`, `bm25`, `js_divergence`); display names and the group
// aliases QTR / STF / VTFIDF resolve to them as well.
using FeatureId = std::variant<MslrFeature, DistanceMetric>;

struct FeatureInfo {
  std::string id;
  std::string display_name;
  FeatureId feature;
};

const std::vector<FeatureInfo>& feature_registry();

// Throws ConfigError listing the valid names when `name` is unknown.
const FeatureInfo& resolve_feature(std::string_view name);
bool is_feature_name(std::string_view name);

double compute_feature(const FeatureId& id, const TokenStream& query,
                       const TokenStream& doc, const CorpusStats& stats,
                       const Bm25Params& params = {});

// One feature's labels over a pair set, rows sorted by pair_id.
struct LabelTable {
  std::string feature_name;
  std::vector<std::string> pair_ids;
  std::vector<double> values;

  std::unordered_map<std::string, double> as_map() const;
};

// Computes the named features for every pair. CorpusStats for a query are
// built from the documents of that query's corpus list.
std::vector<LabelTable> compute_labels(const corpus::PairSet& pairs,
                                       const std::vector<std::string>& features,
                                       const Bm25Params& params = {},
                                       unsigned threads = 1);

// CSV `pair_id,feature_name,value`.
void write_labels(const LabelTable& table, const std::string& path);
LabelTable read_labels(const std::string& path);

}  // namespace rankprobe::ir

#endif  // RANKPROBE_IRFEATURES_H_
