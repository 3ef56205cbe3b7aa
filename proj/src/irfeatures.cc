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

#include "rankprobe/irfeatures.h"

#include <algorithm>
#include <cmath>
#include <locale>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rankprobe/common.h"

namespace rankprobe::ir {
namespace {

const std::ctype<wchar_t>& wide_ctype() {
  static const std::locale loc = [] {
    for (const char* name : {"C.UTF-8", "en_US.UTF-8", "C.utf8"}) {
      try {
        return std::locale(name);
      } catch (const std::runtime_error&) {
      }
    }
    return std::locale::classic();
  }();
  return std::use_facet<std::ctype<wchar_t>>(loc);
}

// Decodes one UTF-8 sequence at s[i]; malformed bytes decode as U+FFFD and
// consume one byte.
char32_t decode_utf8(std::string_view s, size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const int c = cont(k);
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::vector<std::string> unique_terms(const TokenStream& query) {
  std::vector<std::string> out;
  for (const auto& t : query.tokens) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  return out;
}

void require_streams(const TokenStream& query, const TokenStream& doc) {
  if (doc.length() == 0) throw std::invalid_argument("empty stream");
  if (query.length() == 0) throw std::invalid_argument("empty query");
}

double aggregate(std::span<const double> v, Aggregate agg) {
  switch (agg) {
    case Aggregate::kMin:
      return *std::min_element(v.begin(), v.end());
    case Aggregate::kMax:
      return *std::max_element(v.begin(), v.end());
    case Aggregate::kSum:
      return std::accumulate(v.begin(), v.end(), 0.0);
    case Aggregate::kMean:
      return std::accumulate(v.begin(), v.end(), 0.0) /
             static_cast<double>(v.size());
    case Aggregate::kVar: {
      const double mean = aggregate(v, Aggregate::kMean);
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      return ss / static_cast<double>(v.size());
    }
  }
  throw std::logic_error("unreachable aggregate");
}

// Term counts over a sorted union vocabulary.
struct PairVocabulary {
  std::vector<std::string> terms;
  std::vector<double> q_tf;
  std::vector<double> d_tf;
};

PairVocabulary union_vocabulary(const TokenStream& query,
                                const TokenStream& doc) {
  std::map<std::string, std::pair<double, double>> counts;
  for (const auto& t : query.tokens) counts[t].first += 1.0;
  for (const auto& t : doc.tokens) counts[t].second += 1.0;
  PairVocabulary v;
  for (const auto& [term, c] : counts) {
    v.terms.push_back(term);
    v.q_tf.push_back(c.first);
    v.d_tf.push_back(c.second);
  }
  return v;
}

std::vector<double> smoothed_distribution(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  std::vector<double> p(counts.size());
  double norm = 0.0;
  for (size_t i = 0; i < counts.size(); ++i) {
    p[i] = counts[i] / total + kDistributionEpsilon;
    norm += p[i];
  }
  for (double& x : p) x /= norm;
  return p;
}

double kl(std::span<const double> p, std::span<const double> q) {
  double d = 0.0;
  for (size_t i = 0; i < p.size(); ++i) d += p[i] * std::log(p[i] / q[i]);
  return std::max(0.0, d);
}

}  // namespace

TokenStream tokenize(std::string_view text) {
  const auto& ct = wide_ctype();
  TokenStream out;
  std::string cur;
  size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode_utf8(text, i);
    const auto wc = static_cast<wchar_t>(cp);
    if (ct.is(std::ctype_base::alnum, wc)) {
      append_utf8(cur, static_cast<char32_t>(ct.tolower(wc)));
    } else if (!cur.empty()) {
      out.tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.tokens.push_back(std::move(cur));
  return out;
}

CorpusStats CorpusStats::from_documents(std::string query_id,
                                        std::span<const TokenStream> docs) {
  if (docs.empty()) throw std::invalid_argument("corpus has no documents");
  CorpusStats s;
  s.query_id = std::move(query_id);
  s.n_docs = static_cast<int>(docs.size());
  double total_len = 0.0;
  for (const auto& d : docs) {
    total_len += static_cast<double>(d.length());
    std::vector<std::string> uniq = d.tokens;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (auto& t : uniq) ++s.doc_freq[t];
  }
  s.avg_doc_length = total_len / static_cast<double>(docs.size());
  return s;
}

int CorpusStats::df(const std::string& term) const {
  auto it = doc_freq.find(term);
  return it == doc_freq.end() ? 0 : it->second;
}

double idf(const std::string& term, const CorpusStats& stats) {
  return std::log((stats.n_docs + 1.0) / (stats.df(term) + 1.0)) + 1.0;
}

double okapi_idf(const std::string& term, const CorpusStats& stats) {
  const double df = stats.df(term);
  return std::log(1.0 + (stats.n_docs - df + 0.5) / (df + 0.5));
}

TermStatVector term_stats(const TokenStream& query, const TokenStream& doc,
                          const CorpusStats& stats) {
  require_streams(query, doc);
  TermStatVector v;
  v.terms = unique_terms(query);
  const double len = static_cast<double>(doc.length());
  for (const auto& t : v.terms) {
    const double tf =
        static_cast<double>(std::count(doc.tokens.begin(), doc.tokens.end(), t));
    v.tf.push_back(tf);
    v.tfl.push_back(tf / len);
    v.tfidf.push_back(tf * idf(t, stats));
  }
  return v;
}

double bm25(const TokenStream& query, const TokenStream& doc,
            const CorpusStats& stats, double avgdl, const Bm25Params& params) {
  if (!(avgdl > 0.0)) throw std::invalid_argument("avgdl must be positive");
  const double len = static_cast<double>(doc.length());
  const double norm = params.k1 * (1.0 - params.b + params.b * len / avgdl);
  double score = 0.0;
  for (const auto& t : unique_terms(query)) {
    const double tf =
        static_cast<double>(std::count(doc.tokens.begin(), doc.tokens.end(), t));
    if (tf == 0.0) continue;
    score += okapi_idf(t, stats) * tf * (params.k1 + 1.0) / (tf + norm);
  }
  return score;
}

double mslr_feature(MslrFeature id, const TokenStream& query,
                    const TokenStream& doc, const CorpusStats& stats,
                    const Bm25Params& params) {
  require_streams(query, doc);
  switch (id) {
    case MslrFeature::kStreamLength:
      return static_cast<double>(doc.length());
    case MslrFeature::kBm25:
      return bm25(query, doc, stats, stats.avg_doc_length, params);
    default:
      break;
  }
  const TermStatVector v = term_stats(query, doc, stats);
  if (id == MslrFeature::kCoveredQtNumber || id == MslrFeature::kCoveredQtRatio) {
    const auto covered = static_cast<double>(
        std::count_if(v.tf.begin(), v.tf.end(), [](double x) { return x > 0; }));
    return id == MslrFeature::kCoveredQtNumber
               ? covered
               : covered / static_cast<double>(v.terms.size());
  }
  const int k = static_cast<int>(id);
  if (k < 0 || k >= 15) throw std::invalid_argument("unknown MSLR feature id");
  const auto stat = static_cast<TermStat>(k / 5);
  const auto agg = static_cast<Aggregate>(k % 5);
  const std::vector<double>& values = stat == TermStat::kTf    ? v.tf
                                      : stat == TermStat::kTfL ? v.tfl
                                                               : v.tfidf;
  return aggregate(values, agg);
}

double distance_metric(DistanceMetric id, const TokenStream& query,
                       const TokenStream& doc, const CorpusStats& stats) {
  require_streams(query, doc);
  const PairVocabulary v = union_vocabulary(query, doc);
  switch (id) {
    case DistanceMetric::kCosine:
    case DistanceMetric::kEuclidean:
    case DistanceMetric::kManhattan: {
      double dot = 0.0, qq = 0.0, dd = 0.0, l1 = 0.0, l2 = 0.0;
      for (size_t i = 0; i < v.terms.size(); ++i) {
        const double w = idf(v.terms[i], stats);
        const double a = v.q_tf[i] * w;
        const double b = v.d_tf[i] * w;
        dot += a * b;
        qq += a * a;
        dd += b * b;
        l1 += std::abs(a - b);
        l2 += (a - b) * (a - b);
      }
      if (id == DistanceMetric::kManhattan) return l1;
      if (id == DistanceMetric::kEuclidean) return std::sqrt(l2);
      return std::clamp(dot / (std::sqrt(qq) * std::sqrt(dd)), 0.0, 1.0);
    }
    case DistanceMetric::kKl:
    case DistanceMetric::kJs: {
      const auto p = smoothed_distribution(v.q_tf);
      const auto q = smoothed_distribution(v.d_tf);
      if (id == DistanceMetric::kKl) return kl(p, q);
      std::vector<double> m(p.size());
      for (size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
      return std::clamp(0.5 * kl(p, m) + 0.5 * kl(q, m), 0.0, std::log(2.0));
    }
  }
  throw std::invalid_argument("unknown distance metric id");
}

const std::vector<FeatureInfo>& feature_registry() {
  static const std::vector<FeatureInfo> registry = [] {
    std::vector<FeatureInfo> r;
    const char* aggs[] = {"min", "max", "mean", "var", "sum"};
    const char* agg_display[] = {"Min", "Max", "Mean", "Var", "Sum"};
    const char* stats[] = {"tf", "tfl", "tfidf"};
    const char* stat_display[] = {"TF", "TF/L", "TF*IDF"};
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 5; ++a) {
        r.push_back({std::string(aggs[a]) + "_" + stats[s],
                     std::string(agg_display[a]) + " " + stat_display[s],
                     static_cast<MslrFeature>(s * 5 + a)});
      }
    }
    r.push_back({"covered_qt_number", "Covered QT Number",
                 MslrFeature::kCoveredQtNumber});
    r.push_back({"covered_qt_ratio", "Covered QT Ratio",
                 MslrFeature::kCoveredQtRatio});
    r.push_back({"stream_length", "Stream Length", MslrFeature::kStreamLength});
    r.push_back({"bm25", "BM25", MslrFeature::kBm25});
    r.push_back({"cosine", "TF*IDF Cosine", DistanceMetric::kCosine});
    r.push_back({"euclidean", "Euclidean", DistanceMetric::kEuclidean});
    r.push_back({"manhattan", "Manhattan", DistanceMetric::kManhattan});
    r.push_back({"kl_divergence", "KL Divergence", DistanceMetric::kKl});
    r.push_back({"js_divergence", "JS Divergence", DistanceMetric::kJs});
    return r;
  }();
  return registry;
}

namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const FeatureInfo* find_feature(std::string_view name) {
  const std::string key = lower_ascii(trim(name));
  std::string_view target = key;
  if (key == "qtr") target = "covered_qt_ratio";
  if (key == "stf") target = "mean_tfl";
  if (key == "vtfidf") target = "var_tfidf";
  for (const auto& f : feature_registry()) {
    if (f.id == target || lower_ascii(f.display_name) == target) return &f;
  }
  return nullptr;
}

}  // namespace

bool is_feature_name(std::string_view name) {
  return find_feature(name) != nullptr;
}

const FeatureInfo& resolve_feature(std::string_view name) {
  if (const FeatureInfo* f = find_feature(name)) return *f;
  std::string msg = "unknown feature '" + std::string(name) + "'; valid names:";
  for (const auto& f : feature_registry()) msg += " " + f.id;
  throw ConfigError(msg);
}

double compute_feature(const FeatureId& id, const TokenStream& query,
                       const TokenStream& doc, const CorpusStats& stats,
                       const Bm25Params& params) {
  if (const auto* m = std::get_if<MslrFeature>(&id)) {
    return mslr_feature(*m, query, doc, stats, params);
  }
  return distance_metric(std::get<DistanceMetric>(id), query, doc, stats);
}

std::unordered_map<std::string, double> LabelTable::as_map() const {
  std::unordered_map<std::string, double> m;
  m.reserve(pair_ids.size());
  for (size_t i = 0; i < pair_ids.size(); ++i) m.emplace(pair_ids[i], values[i]);
  return m;
}

std::vector<LabelTable> compute_labels(const corpus::PairSet& pairs,
                                       const std::vector<std::string>& features,
                                       const Bm25Params& params,
                                       unsigned threads) {
  std::vector<const FeatureInfo*> infos;
  for (const auto& name : features) infos.push_back(&resolve_feature(name));

  const auto& all = pairs.pairs();
  std::vector<TokenStream> q_tokens(all.size()), d_tokens(all.size());
  parallel_for(all.size(), threads, [&](size_t i) {
    q_tokens[i] = tokenize(all[i].query_text);
    d_tokens[i] = tokenize(all[i].doc_text);
  });

  std::unordered_map<std::string, size_t> doc_index;
  for (size_t i = 0; i < all.size(); ++i) {
    doc_index.emplace(all[i].query_id + '\x1f' + all[i].doc_id, i);
  }
  std::map<std::string, CorpusStats> stats;
  for (const auto& [qid, docs] : pairs.per_query_corpus()) {
    std::vector<TokenStream> streams;
    for (const auto& d : docs) {
      auto it = doc_index.find(qid + '\x1f' + d);
      if (it != doc_index.end()) streams.push_back(d_tokens[it->second]);
    }
    if (!streams.empty()) stats.emplace(qid, CorpusStats::from_documents(qid, streams));
  }

  std::vector<size_t> order(all.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return all[a].pair_id < all[b].pair_id; });

  std::vector<LabelTable> tables(infos.size());
  for (size_t f = 0; f < infos.size(); ++f) {
    tables[f].feature_name = infos[f]->id;
    tables[f].pair_ids.resize(all.size());
    tables[f].values.resize(all.size());
  }
  parallel_for(all.size(), threads, [&](size_t r) {
    const size_t i = order[r];
    const CorpusStats& s = stats.at(all[i].query_id);
    for (size_t f = 0; f < infos.size(); ++f) {
      tables[f].pair_ids[r] = all[i].pair_id;
      tables[f].values[r] =
          compute_feature(infos[f]->feature, q_tokens[i], d_tokens[i], s, params);
    }
  });
  return tables;
}

void write_labels(const LabelTable& table, const std::string& path) {
  std::string csv = "pair_id,feature_name,value\n";
  const std::string name = csv_field(table.feature_name);
  for (size_t i = 0; i < table.pair_ids.size(); ++i) {
    csv += csv_field(table.pair_ids[i]);
    csv += ',';
    csv += name;
    csv += ',';
    csv += format_double(table.values[i]);
    csv += '\n';
  }
  write_file(path, csv);
}

LabelTable read_labels(const std::string& path) {
  LabelTable t;
  std::istringstream in(read_file(path));
  std::string line;
  bool header = true;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (header) {
      header = false;
      continue;
    }
    if (trim(line).empty()) continue;
    const auto f = parse_csv_line(line);
    if (f.size() != 3) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected pair_id,feature_name,value");
    }
    if (t.feature_name.empty()) {
      t.feature_name = f[1];
    } else if (f[1] != t.feature_name) {
      throw std::runtime_error(path + ": mixed feature names '" +
                               t.feature_name + "' and '" + f[1] + "'");
    }
    t.pair_ids.push_back(f[0]);
    try {
      t.values.push_back(std::stod(f[2]));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad value '" + f[2] + "'");
    }
  }
  return t;
}

}  // namespace rankprobe::ir
