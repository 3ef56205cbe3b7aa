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

#include "rankprobe/corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "rankprobe/common.h"

namespace rankprobe::corpus {
namespace {

std::unordered_map<std::string, std::string> read_tsv(const std::string& path) {
  std::unordered_map<std::string, std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected id<TAB>text");
    }
    out.insert_or_assign(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

bool blank(const std::string& s) { return trim(s).empty(); }

}  // namespace

std::string make_pair_id(const std::string& query_id,
                         const std::string& doc_id) {
  return query_id + ":" + doc_id;
}

PairSet::PairSet(std::vector<QueryDocPair> pairs,
                 std::map<std::string, std::vector<std::string>> per_query_corpus)
    : pairs_(std::move(pairs)), per_query_corpus_(std::move(per_query_corpus)) {
  for (const auto& [qid, docs] : per_query_corpus_) {
    std::set<std::string> seen;
    for (const auto& d : docs) {
      if (!seen.insert(d).second) {
        throw std::invalid_argument("duplicate doc_id '" + d +
                                    "' in corpus of query '" + qid + "'");
      }
    }
  }
  index_.reserve(pairs_.size());
  for (size_t i = 0; i < pairs_.size(); ++i) {
    const auto& p = pairs_[i];
    if (!index_.emplace(p.pair_id, i).second) {
      throw std::invalid_argument("duplicate pair_id '" + p.pair_id + "'");
    }
    if (blank(p.query_text)) {
      throw std::invalid_argument("empty query text for pair '" + p.pair_id +
                                  "'");
    }
    if (blank(p.doc_text)) {
      throw std::invalid_argument("empty document text for pair '" +
                                  p.pair_id + "'");
    }
    auto it = per_query_corpus_.find(p.query_id);
    if (it == per_query_corpus_.end() ||
        std::find(it->second.begin(), it->second.end(), p.doc_id) ==
            it->second.end()) {
      throw std::invalid_argument("doc '" + p.doc_id +
                                  "' missing from corpus of query '" +
                                  p.query_id + "'");
    }
  }
}

size_t PairSet::index_of(const std::string& pair_id) const {
  auto it = index_.find(pair_id);
  if (it == index_.end()) throw std::out_of_range("unknown pair_id: " + pair_id);
  return it->second;
}

PairSet load_run(const std::string& run_file, const std::string& queries_file,
                 const std::string& collection_file) {
  const auto queries = read_tsv(queries_file);
  const auto collection = read_tsv(collection_file);

  struct Entry {
    std::string qid, docid;
    double rank;
    size_t order;
  };
  std::vector<Entry> entries;
  std::set<std::pair<std::string, std::string>> seen;
  std::istringstream in(read_file(run_file));
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> cols;
    for (std::string f; fields >> f;) cols.push_back(std::move(f));
    if (cols.empty()) continue;
    Entry e;
    e.order = entries.size();
    if (cols.size() == 6) {
      e.qid = cols[0];
      e.docid = cols[2];
      try {
        e.rank = std::stod(cols[3]);
      } catch (const std::exception&) {
        throw std::runtime_error(run_file + ":" + std::to_string(line_no) +
                                 ": bad rank '" + cols[3] + "'");
      }
    } else if (cols.size() == 2) {
      e.qid = cols[0];
      e.docid = cols[1];
      e.rank = static_cast<double>(e.order);
    } else {
      throw std::runtime_error(run_file + ":" + std::to_string(line_no) +
                               ": expected 6 or 2 columns, got " +
                               std::to_string(cols.size()));
    }
    if (!queries.contains(e.qid)) {
      throw std::runtime_error("unresolved query id: " + e.qid);
    }
    if (!collection.contains(e.docid)) {
      throw std::runtime_error("unresolved doc id: " + e.docid);
    }
    if (!seen.emplace(e.qid, e.docid).second) {
      throw std::runtime_error("duplicate run line for (" + e.qid + ", " +
                               e.docid + ")");
    }
    entries.push_back(std::move(e));
  }

  std::vector<QueryDocPair> pairs;
  pairs.reserve(entries.size());
  for (const auto& e : entries) {
    pairs.push_back({make_pair_id(e.qid, e.docid), e.qid, queries.at(e.qid),
                     e.docid, collection.at(e.docid)});
  }
  std::vector<const Entry*> by_rank;
  by_rank.reserve(entries.size());
  for (const auto& e : entries) by_rank.push_back(&e);
  std::stable_sort(by_rank.begin(), by_rank.end(),
                   [](const Entry* a, const Entry* b) { return a->rank < b->rank; });
  std::map<std::string, std::vector<std::string>> corpus;
  for (const Entry* e : by_rank) corpus[e->qid].push_back(e->docid);
  return PairSet(std::move(pairs), std::move(corpus));
}

int bin_of(double value, std::span<const double> edges) {
  const int n_bins = static_cast<int>(edges.size()) - 1;
  // upper_bound finds the first edge strictly above value.
  auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, value);
  return std::clamp(static_cast<int>(it - (edges.begin() + 1)), 0, n_bins - 1);
}

ProbeDataset build_balanced_dataset(std::span<const std::string> pair_ids,
                                    std::span<const double> labels,
                                    const std::string& feature_name,
                                    const BalanceOptions& options) {
  if (pair_ids.size() != labels.size()) {
    throw std::invalid_argument("labels not aligned with pairs");
  }
  if (options.n_bins < 2) throw std::invalid_argument("n_bins must be >= 2");
  if (options.per_bin < 1) throw std::invalid_argument("per_bin must be >= 1");
  if (labels.empty()) throw std::invalid_argument("no labels");
  for (size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(labels[i])) {
      throw std::invalid_argument("non-finite label for pair '" + pair_ids[i] +
                                  "'");
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(labels.begin(), labels.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw std::invalid_argument("degenerate label distribution");

  const int n_bins = options.n_bins;
  std::vector<double> edges(n_bins + 1);
  std::vector<int> bin(labels.size());
  if (options.binning == Binning::kEqualWidth) {
    for (int b = 0; b <= n_bins; ++b) {
      edges[b] = lo + (hi - lo) * static_cast<double>(b) / n_bins;
    }
    edges[n_bins] = hi;
    for (size_t i = 0; i < labels.size(); ++i) bin[i] = bin_of(labels[i], edges);
  } else {
    std::vector<size_t> order(labels.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return labels[a] < labels[b]; });
    const size_t n = labels.size();
    // Edge b is the smallest label of rank >= b * n / n_bins. Items are then
    // binned by value like equal-width, so ties always share a bin and the
    // edges alone reproduce the assignment.
    edges[0] = lo;
    edges[n_bins] = hi;
    for (int b = 1; b < n_bins; ++b) {
      const size_t r = (static_cast<size_t>(b) * n + n_bins - 1) / n_bins;
      edges[b] = labels[order[std::min(r, n - 1)]];
    }
    for (size_t i = 0; i < n; ++i) bin[i] = bin_of(labels[i], edges);
  }

  std::vector<std::vector<size_t>> members(n_bins);
  for (size_t i = 0; i < labels.size(); ++i) members[bin[i]].push_back(i);
  const auto nonempty = std::count_if(members.begin(), members.end(),
                                      [](const auto& m) { return !m.empty(); });
  if (nonempty < 2) throw std::invalid_argument("degenerate label distribution");

  std::vector<size_t> keep;
  for (int b = 0; b < n_bins; ++b) {
    auto& m = members[b];
    if (m.size() <= static_cast<size_t>(options.per_bin)) {
      keep.insert(keep.end(), m.begin(), m.end());
      continue;
    }
    Rng rng(derive_seed(options.seed, static_cast<uint64_t>(b)));
    for (size_t k : rng.sample_without_replacement(m.size(), options.per_bin)) {
      keep.push_back(m[k]);
    }
  }
  std::sort(keep.begin(), keep.end());

  ProbeDataset out;
  out.feature_name = feature_name;
  out.bin_edges = std::move(edges);
  out.seed = options.seed;
  out.pair_ids.reserve(keep.size());
  out.labels.reserve(keep.size());
  for (size_t i : keep) {
    out.pair_ids.push_back(pair_ids[i]);
    out.labels.push_back(labels[i]);
  }
  return out;
}

ProbeDataset build_balanced_dataset(const PairSet& pairs,
                                    std::span<const double> labels,
                                    const std::string& feature_name,
                                    const BalanceOptions& options) {
  std::vector<std::string> ids;
  ids.reserve(pairs.size());
  for (const auto& p : pairs.pairs()) ids.push_back(p.pair_id);
  return build_balanced_dataset(ids, labels, feature_name, options);
}

std::vector<int> bin_occupancy(const ProbeDataset& dataset) {
  if (dataset.bin_edges.size() < 3) {
    throw std::invalid_argument("dataset has fewer than 2 bins");
  }
  std::vector<int> counts(dataset.bin_edges.size() - 1, 0);
  for (double v : dataset.labels) ++counts[bin_of(v, dataset.bin_edges)];
  return counts;
}

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac}) {
    if (!(f > 0.0 && f < 1.0)) {
      throw std::invalid_argument("split fractions must lie in (0, 1)");
    }
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
}

SplitSpec parse_split(const std::string& text, uint64_t seed) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) {
    throw ConfigError("split must look like 60:20:20, got '" + text + "'");
  }
  double w[3];
  for (int i = 0; i < 3; ++i) {
    try {
      w[i] = std::stod(parts[i]);
    } catch (const std::exception&) {
      throw ConfigError("bad split weight '" + parts[i] + "'");
    }
  }
  const double total = w[0] + w[1] + w[2];
  SplitSpec spec{w[0] / total, w[1] / total, w[2] / total, seed};
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

Split split_indices(size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n == 0) throw std::invalid_argument("cannot split an empty dataset");
  // The epsilon keeps 0.2 * 5 from landing just under 1 after rounding.
  const auto floor_size = [n](double frac) {
    return static_cast<size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
  };
  const size_t n_val = floor_size(spec.val_frac);
  const size_t n_test = floor_size(spec.test_frac);
  const size_t n_train = n - n_val - n_test;

  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(std::span<size_t>(perm));

  Split s;
  s.train.assign(perm.begin(), perm.begin() + n_train);
  s.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  s.test.assign(perm.begin() + n_train + n_val, perm.end());
  return s;
}

std::string sidecar_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".json");
  return p.string();
}

void write_dataset(const ProbeDataset& dataset, const std::string& csv_path) {
  std::string csv = "pair_id,label\n";
  for (size_t i = 0; i < dataset.pair_ids.size(); ++i) {
    csv += csv_field(dataset.pair_ids[i]);
    csv += ',';
    csv += format_double(dataset.labels[i]);
    csv += '\n';
  }
  write_file(csv_path, csv);
  nlohmann::ordered_json meta;
  meta["feature_name"] = dataset.feature_name;
  meta["bin_edges"] = dataset.bin_edges;
  meta["seed"] = dataset.seed;
  write_file(sidecar_path(csv_path), meta.dump(2) + "\n");
}

ProbeDataset read_dataset(const std::string& csv_path) {
  ProbeDataset d;
  std::istringstream in(read_file(csv_path));
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (trim(line).empty()) continue;
    const auto f = parse_csv_line(line);
    if (f.size() != 2) throw std::runtime_error(csv_path + ": expected pair_id,label");
    d.pair_ids.push_back(f[0]);
    d.labels.push_back(std::stod(f[1]));
  }
  const auto meta = nlohmann::json::parse(read_file(sidecar_path(csv_path)));
  d.feature_name = meta.at("feature_name").get<std::string>();
  d.bin_edges = meta.at("bin_edges").get<std::vector<double>>();
  d.seed = meta.at("seed").get<uint64_t>();
  return d;
}

void write_demo_corpus(const std::string& dir, const DemoCorpusOptions& options) {
  std::filesystem::create_directories(dir);
  Rng rng(options.seed);
  const auto word = [](int i) { return "w" + std::to_string(i); };
  const int vocab = options.vocab_size;

  std::string queries, collection, run;
  for (int q = 0; q < options.n_queries; ++q) {
    const std::string qid = "q" + std::to_string(q);
    const int q_len = 2 + static_cast<int>(rng.below(3));
    std::vector<int> q_terms;
    while (static_cast<int>(q_terms.size()) < q_len) {
      const int t = static_cast<int>(rng.below(vocab));
      if (std::find(q_terms.begin(), q_terms.end(), t) == q_terms.end()) {
        q_terms.push_back(t);
      }
    }
    queries += qid + "\t";
    for (size_t i = 0; i < q_terms.size(); ++i) {
      queries += (i ? " " : "") + word(q_terms[i]);
    }
    queries += "?\n";

    for (int d = 0; d < options.docs_per_query; ++d) {
      const std::string docid = "d" + std::to_string(q) + "_" + std::to_string(d);
      const double density = rng.uniform();
      const int len = 20 + static_cast<int>(rng.below(61));
      std::vector<int> tokens;
      tokens.reserve(len);
      for (int i = 0; i < len; ++i) {
        if (rng.uniform() < 0.35 * density) {
          tokens.push_back(q_terms[rng.below(q_terms.size())]);
        } else {
          tokens.push_back(static_cast<int>(rng.below(vocab)));
        }
      }
      collection += docid + "\t";
      for (int i = 0; i < len; ++i) {
        collection += (i ? (i % 11 == 0 ? ", " : " ") : "") + word(tokens[i]);
      }
      collection += ".\n";
      run += qid + " Q0 " + docid + " " + std::to_string(d + 1) + " " +
             format_double(100.0 - d) + " demo\n";
    }
  }
  const std::filesystem::path base(dir);
  write_file((base / "queries.tsv").string(), queries);
  write_file((base / "collection.tsv").string(), collection);
  write_file((base / "run.trec").string(), run);
}

}  // namespace rankprobe::corpus
