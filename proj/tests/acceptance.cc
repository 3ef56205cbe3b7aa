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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oracle.h"
#include "rankprobe/actstore.h"
#include "rankprobe/attribution.h"
#include "rankprobe/common.h"
#include "rankprobe/corpus.h"
#include "rankprobe/group_expr.h"
#include "rankprobe/irfeatures.h"
#include "rankprobe/probekit.h"
#include "synthetic.h"

namespace {

using namespace rankprobe;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

Outcome feature_oracle() {
  const auto t0 = Clock::now();
  Rng rng(20260101);
  double worst = 0.0;
  size_t mismatches = 0, checks = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto inst = synthetic::random_instance(rng);
    const auto stats = ir::CorpusStats::from_documents("q", inst.corpus);
    oracle::Corpus oc;
    for (const auto& d : inst.corpus) oc.docs.push_back(d.tokens);
    const auto want = oracle::features(inst.query.tokens, inst.doc.tokens, oc);
    for (const auto& info : ir::feature_registry()) {
      const double got = ir::compute_feature(info.feature, inst.query, inst.doc, stats);
      const double ref = want.at(info.id);
      ++checks;
      const double denom = std::max(std::abs(ref), 1e-300);
      if (!oracle::close(got, ref, 1e-9)) ++mismatches;
      if (std::abs(ref) > 1e-12) worst = std::max(worst, std::abs(got - ref) / denom);
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10.0,
          std::to_string(checks) + " checks, " + std::to_string(mismatches) +
              " mismatches, max rel err " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s"};
}

Outcome lasso_correctness() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;

  // Orthonormal design: centered columns with X^T X = n I.
  const Eigen::Index n = 400, d = 24;
  Rng rng(7);
  Eigen::MatrixXd a(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  a.rowwise() -= a.colwise().mean();
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                            Eigen::MatrixXd::Identity(n, d);
  const Eigen::MatrixXd x = q * std::sqrt(static_cast<double>(n));
  Eigen::VectorXd beta_true(d);
  for (Eigen::Index j = 0; j < d; ++j) beta_true(j) = (j % 3 == 0) ? rng.uniform(-2, 2) : 0.05 * rng.normal();
  Eigen::VectorXd y = x * beta_true;
  for (Eigen::Index i = 0; i < n; ++i) y(i) += 3.0 + 0.3 * rng.normal();
  double worst = 0.0;
  for (double alpha : {0.0, 0.01, 0.05, 0.1, 0.5, 1.0}) {
    probe::ProbeConfig cfg;
    cfg.alpha = alpha;
    const auto m = probe::fit_lasso(x, y, cfg);
    const Eigen::VectorXd z = x.transpose() * (y.array() - y.mean()).matrix() / static_cast<double>(n);
    for (Eigen::Index j = 0; j < d; ++j) {
      worst = std::max(worst, std::abs(m.coefficients(j) - probe::soft_threshold(z(j), alpha)));
    }
  }
  ok &= worst <= 1e-8;
  detail += "orthonormal max err " + fmt(worst, 3);

  // Full-shrinkage threshold on a generic correlated design.
  Eigen::MatrixXd g(300, 40);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const double common = rng.normal();
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal() + 0.5 * common;
  }
  Eigen::VectorXd gy(g.rows());
  for (Eigen::Index i = 0; i < g.rows(); ++i) gy(i) = 2.0 * g(i, 0) - g(i, 5) + rng.normal() + 1.5;
  const auto s = probe::standardize(g);
  const double alpha_max =
      (s.x.transpose() * (gy.array() - gy.mean()).matrix()).cwiseAbs().maxCoeff() /
      static_cast<double>(g.rows());
  probe::ProbeConfig at;
  at.alpha = alpha_max;
  const auto m_at = probe::fit_lasso(s.x, gy, at);
  const bool zeroed = m_at.nonzero_idx.empty() &&
                      std::abs(m_at.intercept - gy.mean()) <= 1e-12 * std::abs(gy.mean());
  at.alpha = alpha_max * 0.99;
  const bool below_nonzero = !probe::fit_lasso(s.x, gy, at).nonzero_idx.empty();
  ok &= zeroed && below_nonzero;
  detail += zeroed && below_nonzero ? ", threshold exact" : ", threshold FAILED";

  // Sparsity over the alpha grid.
  std::vector<size_t> nnz;
  for (double alpha : {0.0, 0.01, 0.1, 1.0, 10.0}) {
    probe::ProbeConfig cfg;
    cfg.alpha = alpha;
    nnz.push_back(probe::fit_lasso(s.x, gy, cfg).nonzero_idx.size());
  }
  const bool monotone = std::is_sorted(nnz.rbegin(), nnz.rend());
  ok &= monotone;
  detail += ", nnz";
  for (size_t k : nnz) detail += " " + std::to_string(k);
  const double secs = seconds_since(t0);
  ok &= secs < 30.0;
  return {ok, detail + ", " + fmt(secs, 3) + " s"};
}

const synthetic::PlantedStore& planted_layer3() {
  static const synthetic::PlantedStore p = synthetic::planted_store(42, 3);
  return p;
}

Outcome planted_recovery() {
  const auto t0 = Clock::now();
  const auto& p = planted_layer3();
  probe::ProbeConfig cfg;
  cfg.seed = 42;
  cfg.split.seed = 42;
  const auto r = probe::sweep_layers(p.store, p.dataset, cfg);
  const auto& c = r.curve;
  bool others = true;
  for (size_t l = 0; l < c.r2_test.size(); ++l) {
    if (l != 3 && !(c.r2_test[l] < 0.2)) others = false;
  }
  const double secs = seconds_since(t0);
  const bool ok = c.argmax_layer == 3 && c.max_r2 >= 0.95 && others &&
                  probe::verdict(c) == probe::Verdict::kPresent && secs < 120.0;
  std::string curve;
  for (double v : c.r2_test) curve += " " + fmt(v, 3);
  return {ok, "argmax " + std::to_string(c.argmax_layer) + ", r2_test" + curve + ", verdict " +
                  probe::to_string(probe::verdict(c)) + ", " + fmt(secs, 3) + " s"};
}

Outcome null_control() {
  const auto t0 = Clock::now();
  const auto& p = planted_layer3();
  std::vector<Eigen::MatrixXd> layers;
  for (size_t l = 0; l < p.store.n_layers(); ++l) layers.push_back(p.store.layer(l));
  int seeds_ok = 0, absent = 0;
  double worst = -1.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    corpus::ProbeDataset shuffled = p.dataset;
    Rng rng(derive_seed(seed, "null-control"));
    rng.shuffle(std::span<double>(shuffled.labels));
    const Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(shuffled.labels.data(), shuffled.labels.size());
    probe::ProbeConfig cfg;
    cfg.seed = seed;
    cfg.split.seed = seed;
    bool all = true;
    for (const auto& x : layers) {
      const double r2 = probe::cross_validate(x, y, cfg).mean_r2;
      worst = std::max(worst, r2);
      all &= r2 <= 0.05;
    }
    seeds_ok += all ? 1 : 0;
    const auto sweep = probe::sweep_layers(p.store, shuffled, cfg);
    absent += probe::verdict(sweep.curve) == probe::Verdict::kAbsent ? 1 : 0;
  }
  const bool ok = seeds_ok >= 19 && absent >= 19;
  return {ok, std::to_string(seeds_ok) + "/20 seeds with every layer CV R^2 <= 0.05 (max " +
                  fmt(worst, 3) + "), verdict absent on " + std::to_string(absent) + "/20, " +
                  fmt(seconds_since(t0), 3) + " s"};
}

Outcome split_and_balance() {
  bool ok = true;
  std::string detail;
  corpus::SplitSpec spec;
  spec.seed = 7;
  const auto s = corpus::split_indices(100, spec);
  std::set<size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  const bool sizes = s.train.size() == 60 && s.val.size() == 20 && s.test.size() == 20 &&
                     all.size() == 100 && *all.rbegin() == 99;
  ok &= sizes;
  detail += "split " + std::to_string(s.train.size()) + "/" + std::to_string(s.val.size()) +
            "/" + std::to_string(s.test.size());

  // Occupancy over skewed random label distributions.
  bool occupancy = true;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const size_t n = 200 + rng.below(3000);
    std::vector<double> labels;
    std::vector<std::string> ids;
    for (size_t i = 0; i < n; ++i) {
      const double u = rng.uniform();
      labels.push_back(seed % 2 ? u * u * u * 10.0 : std::exp(2.0 * rng.normal()));
      ids.push_back("p" + std::to_string(i));
    }
    corpus::BalanceOptions opt;
    opt.n_bins = 2 + static_cast<int>(rng.below(12));
    opt.per_bin = 1 + static_cast<int>(rng.below(300));
    opt.seed = seed;
    const auto d = corpus::build_balanced_dataset(ids, labels, "f", opt);
    std::vector<int> available(opt.n_bins, 0);
    for (double v : labels) ++available[corpus::bin_of(v, d.bin_edges)];
    const auto occ = corpus::bin_occupancy(d);
    for (int b = 0; b < opt.n_bins; ++b) {
      occupancy &= occ[b] == std::min(available[b], opt.per_bin);
    }
  }
  ok &= occupancy;
  detail += occupancy ? ", occupancy holds" : ", occupancy FAILED";

  const auto dir = std::filesystem::temp_directory_path() / "rankprobe_acceptance_demo";
  std::filesystem::remove_all(dir);
  corpus::write_demo_corpus(dir.string(), {});
  const auto pairs = corpus::load_run((dir / "run.trec").string(), (dir / "queries.tsv").string(),
                                      (dir / "collection.tsv").string());
  const auto labels = ir::compute_labels(pairs, {"bm25"});
  const auto ds = corpus::build_balanced_dataset(pairs, labels[0].values, "bm25", {});
  std::filesystem::remove_all(dir);
  ok &= pairs.size() == 50000 && ds.pair_ids.size() >= 5000;
  detail += ", demo run " + std::to_string(pairs.size()) + " pairs -> balanced bm25 dataset " +
            std::to_string(ds.pair_ids.size());
  return {ok, detail};
}

Eigen::MatrixXd golden_values(int layer) {
  Eigen::MatrixXd m(3, 4);
  for (int s = 0; s < 3; ++s)
    for (int j = 0; j < 4; ++j) m(s, j) = (layer + 1) * 0.25 * (s - 1) + 0.125 * j - 0.3 + 0.01 * layer;
  return m;
}

Outcome store_format() {
  bool ok = true;
  std::string detail;
  Rng rng(99);
  std::vector<Eigen::MatrixXd> layers;
  for (int l = 0; l < 3; ++l) {
    Eigen::MatrixXd m(17, 9);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 3.0 * rng.normal();
    layers.push_back(m);
  }
  const auto ids = act::default_pair_ids(17);
  bool roundtrip = true, bound = true;
  for (auto dtype : {act::DType::kF32, act::DType::kI8}) {
    const auto store = act::ActivationStore::from_layers(ids, layers, dtype);
    const std::string bytes = act::serialize_store(store);
    const auto back = act::parse_store(bytes);
    roundtrip &= back == store && act::serialize_store(back) == bytes;
    for (size_t l = 0; l < layers.size(); ++l) {
      const Eigen::MatrixXd deq = back.layer(l);
      const double tol = dtype == act::DType::kF32 ? 0.0 : store.scale(l) / 2.0;
      for (Eigen::Index i = 0; i < deq.size(); ++i) {
        const double ref =
            dtype == act::DType::kF32 ? static_cast<double>(static_cast<float>(layers[l].data()[i]))
                                      : layers[l].data()[i];
        bound &= std::abs(deq.data()[i] - ref) <= tol * (1 + 1e-12);
      }
    }
  }
  ok &= roundtrip && bound;
  detail += roundtrip ? "round-trip bit-exact" : "round-trip FAILED";
  detail += bound ? ", i8 error <= scale/2" : ", i8 bound FAILED";

  const auto store = act::ActivationStore::from_layers(ids, layers, act::DType::kI8);
  const std::string bytes = act::serialize_store(store);
  size_t detected = 0;
  for (size_t i = 0; i < bytes.size(); ++i) {
    std::string bad = bytes;
    bad[i] = static_cast<char>(bad[i] ^ 0x5a);
    try {
      act::parse_store(bad);
    } catch (const act::StoreError&) {
      ++detected;
    }
  }
  ok &= detected == bytes.size();
  detail += ", corruption detected at " + std::to_string(detected) + "/" +
            std::to_string(bytes.size()) + " byte positions";

  bool golden = true;
  const std::vector<std::string> gids = {"q1:d1", "q1:d2", "q2:d\xc3\xa9" "7"};
  for (auto [name, dtype] : {std::pair{"golden_f32.aprb", act::DType::kF32},
                             std::pair{"golden_i8.aprb", act::DType::kI8}}) {
    const std::string want = read_file(std::string(RANKPROBE_TEST_DATA) + "/" + name);
    const auto s = act::ActivationStore::from_layers(gids, {golden_values(0), golden_values(1)},
                                                     dtype);
    golden &= act::serialize_store(s) == want && act::parse_store(want) == s;
  }
  ok &= golden;
  detail += golden ? ", golden files match" : ", golden MISMATCH";
  return {ok, detail};
}

Outcome attribution_validation() {
  const auto t0 = Clock::now();
  const auto p = synthetic::planted_store(4242, 4);
  probe::ProbeConfig cfg;
  cfg.seed = 4242;
  cfg.split.seed = 4242;
  const auto sweep = probe::sweep_layers(p.store, p.dataset, cfg);
  const auto& final_probe = sweep.models.back();
  attr::ValidationOptions opts;
  opts.n_pairs = 100;
  opts.seed = 4242;
  const auto aligned = attr::validate_probe_neurons(final_probe, p.store,
                                                    synthetic::head_for(p, true, 4242), opts);
  const auto zeroed = attr::validate_probe_neurons(final_probe, p.store,
                                                   synthetic::head_for(p, false, 4242), opts);
  const bool ok = aligned.cases_at_95th >= 79 && zeroed.cases_at_95th <= 15;
  return {ok, "aligned head " + std::to_string(aligned.cases_at_95th) + "/100, zeroed head " +
                  std::to_string(zeroed.cases_at_95th) + "/100, probe uses " +
                  std::to_string(final_probe.nonzero_idx.size()) + " neurons, " +
                  fmt(seconds_since(t0), 3) + " s"};
}

Outcome group_probe() {
  const auto t0 = Clock::now();
  const size_t n = 2000;
  const auto g = synthetic::group_fixture(77, n);
  const auto p = synthetic::planted_store(77, 2, 5, n, 256, 3, 0.01, g.group, 0.2);
  probe::ProbeConfig cfg;
  cfg.seed = 77;
  cfg.split.seed = 77;
  const auto group = probe::sweep_layers(p.store, p.dataset, cfg);
  const int layer = group.curve.argmax_layer;
  bool ok = layer == 2 && group.curve.max_r2 >= 0.95;
  std::string detail = "group R^2 " + fmt(group.curve.max_r2) + " at layer " +
                       std::to_string(layer) + "; single-feature R^2:";
  for (const auto& [name, col] : g.base) {
    corpus::ProbeDataset single = p.dataset;
    single.feature_name = name;
    single.labels = ir::min_max_normalize(col);
    const auto r = probe::sweep_layers(p.store, single, cfg);
    const double r2 = r.curve.r2_test[static_cast<size_t>(layer)];
    ok &= r2 <= 0.7;
    detail += " " + name + " " + fmt(r2);
  }
  return {ok, detail + ", " + fmt(seconds_since(t0), 3) + " s"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"feature-oracle", feature_oracle},
      {"lasso-correctness", lasso_correctness},
      {"planted-signal-recovery", planted_recovery},
      {"null-control", null_control},
      {"split-balance-contracts", split_and_balance},
      {"store-format", store_format},
      {"attribution-validation", attribution_validation},
      {"group-probe", group_probe},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
