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

// Query/document pair ingestion and probing-dataset assembly: TREC run
// loading, value-balanced subsampling, and seeded train/val/test splits.

#ifndef RANKPROBE_CORPUS_H_
#define RANKPROBE_CORPUS_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace rankprobe::corpus {

struct QueryDocPair {
  std::string pair_id;
  std::string query_id;
  std::string query_text;
  std::string doc_id;
  std::string doc_text;
};

// Pair identifier used by load_run: "<qid>:<docid>".
std::string make_pair_id(const std::string& query_id, const std::string& doc_id);

class PairSet {
 public:
  PairSet() = default;
  // Validates every invariant and throws std::invalid_argument on violation.
  PairSet(std::vector<QueryDocPair> pairs,
          std::map<std::string, std::vector<std::string>> per_query_corpus);

  const std::vector<QueryDocPair>& pairs() const { return pairs_; }
  const std::map<std::string, std::vector<std::string>>& per_query_corpus()
      const {
    return per_query_corpus_;
  }
  size_t size() const { return pairs_.size(); }

  // Index of pair_id in pairs(), or throws std::out_of_range naming it.
  size_t index_of(const std::string& pair_id) const;

 private:
  std::vector<QueryDocPair> pairs_;
  std::map<std::string, std::vector<std::string>> per_query_corpus_;
  std::unordered_map<std::string, size_t> index_;
};

// Reads a TREC run (6 columns, `qid Q0 docid rank score tag`) or a
// two-column `qid docid` run plus `id<TAB>text` TSVs for queries and
// documents. Corpus lists follow rank order; pairs follow file order.
PairSet load_run(const std::string& run_file, const std::string& queries_file,
                 const std::string& collection_file);

enum class Binning { kEqualWidth, kEqualFrequency };

struct ProbeDataset {
  std::string feature_name;
  std::vector<std::string> pair_ids;
  std::vector<double> labels;
  std::vector<double> bin_edges;
  uint64_t seed = 0;
};

struct BalanceOptions {
  int n_bins = 10;
  int per_bin = 600;
  uint64_t seed = 0;
  Binning binning = Binning::kEqualWidth;
};

// Subsamples up to per_bin items from every nonempty bin. Under-full bins
// keep all their members. Output keeps the input order of the survivors.
ProbeDataset build_balanced_dataset(std::span<const std::string> pair_ids,
                                    std::span<const double> labels,
                                    const std::string& feature_name,
                                    const BalanceOptions& options);

ProbeDataset build_balanced_dataset(const PairSet& pairs,
                                    std::span<const double> labels,
                                    const std::string& feature_name,
                                    const BalanceOptions& options);

// Bin index of `value` under `edges` (n_bins + 1 ascending edges). The last
// bin is closed on the right.
int bin_of(double value, std::span<const double> edges);

// Per-bin counts of the dataset's labels against its own bin_edges.
std::vector<int> bin_occupancy(const ProbeDataset& dataset);

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  uint64_t seed = 0;

  void validate() const;
};

// Parses "60:20:20" (any positive weights, normalized to fractions).
SplitSpec parse_split(const std::string& text, uint64_t seed);

struct Split {
  std::vector<size_t> train;
  std::vector<size_t> val;
  std::vector<size_t> test;
};

// Val and test sizes are floor(frac * n); train takes the remainder.
Split split_indices(size_t n, const SplitSpec& spec);

inline Split split_dataset(const ProbeDataset& dataset, const SplitSpec& spec) {
  return split_indices(dataset.pair_ids.size(), spec);
}

// `csv_path` gets `pair_id,label`; the sidecar (.json next to it) gets
// feature_name, bin_edges and seed.
void write_dataset(const ProbeDataset& dataset, const std::string& csv_path);
ProbeDataset read_dataset(const std::string& csv_path);
std::string sidecar_path(const std::string& csv_path);

// Synthetic MS MARCO-shaped corpus for desk-scale runs: writes queries.tsv,
// collection.tsv and run.trec into `dir`. Documents mix query terms at a
// per-document density drawn uniformly, so lexical features spread evenly.
struct DemoCorpusOptions {
  int n_queries = 500;
  int docs_per_query = 100;
  int vocab_size = 5000;
  uint64_t seed = 0;
};
void write_demo_corpus(const std::string& dir, const DemoCorpusOptions& options);

}  // namespace rankprobe::corpus

#endif  // RANKPROBE_CORPUS_H_
