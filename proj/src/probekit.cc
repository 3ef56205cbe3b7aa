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

#include "rankprobe/probekit.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "rankprobe/common.h"

namespace rankprobe::probe {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd select_rows(const Eigen::Ref<const MatrixXd>& m,
                     std::span<const size_t> rows) {
  MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Index>(i)) = m.row(static_cast<Index>(rows[i]));
  }
  return out;
}

VectorXd select(const Eigen::Ref<const VectorXd>& v, std::span<const size_t> rows) {
  VectorXd out(static_cast<Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = v(static_cast<Index>(rows[i]));
  return out;
}

std::vector<size_t> nonzero_indices(const VectorXd& coef) {
  std::vector<size_t> idx;
  for (Index j = 0; j < coef.size(); ++j) {
    if (std::abs(coef(j)) > 0.0) idx.push_back(static_cast<size_t>(j));
  }
  return idx;
}

double r2_or_nan(const VectorXd& y, const VectorXd& pred) {
  try {
    return r2_score(y, pred);
  } catch (const std::invalid_argument&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double json_number(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

void ProbeConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw ConfigError("l2 must be >= 0");
  if (max_iter < 1) throw ConfigError("max_iter must be positive");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (k_folds < 2) throw ConfigError("k_folds must be >= 2");
  try {
    split.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Standardized standardize(const Eigen::Ref<const MatrixXd>& x) {
  if (x.rows() < 2) throw std::invalid_argument("standardize needs at least 2 rows");
  Standardized s;
  const double n = static_cast<double>(x.rows());
  s.means = x.colwise().mean().transpose();
  s.sds.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.means(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    s.sds(j) = sd > 0.0 ? sd : 1.0;
  }
  s.x = apply_standardization(x, s.means, s.sds);
  for (Index j = 0; j < x.cols(); ++j) {
    // Exactly constant columns become exact zeros.
    if (!((x.col(j).array() != x(0, j)).any())) s.x.col(j).setZero();
  }
  return s;
}

MatrixXd apply_standardization(const Eigen::Ref<const MatrixXd>& x,
                               const VectorXd& means, const VectorXd& sds) {
  if (means.size() != x.cols() || sds.size() != x.cols()) {
    throw std::invalid_argument("standardization width mismatch");
  }
  return (x.rowwise() - means.transpose()).array().rowwise() /
         sds.transpose().array();
}

VectorXd ProbeModel::predict(const Eigen::Ref<const MatrixXd>& raw) const {
  if (raw.cols() != coefficients.size()) {
    throw std::invalid_argument("probe expects " + std::to_string(coefficients.size()) +
                                " inputs, got " + std::to_string(raw.cols()));
  }
  VectorXd out = apply_standardization(raw, feature_means, feature_sds) * coefficients;
  out.array() += intercept;
  return out;
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

double lasso_objective(const Eigen::Ref<const MatrixXd>& x,
                       const Eigen::Ref<const VectorXd>& y,
                       const Eigen::Ref<const VectorXd>& coef, double intercept,
                       double alpha, double l2) {
  const VectorXd r = (y - x * coef).array() - intercept;
  const double n = static_cast<double>(x.rows());
  return r.squaredNorm() / (2.0 * n) + alpha * coef.lpNorm<1>() +
         0.5 * l2 * coef.squaredNorm();
}

ProbeModel fit_lasso(const Eigen::Ref<const MatrixXd>& x,
                     const Eigen::Ref<const VectorXd>& y, const ProbeConfig& config,
                     const SnapshotFn& snapshot) {
  config.validate();
  const Index n = x.rows();
  const Index d = x.cols();
  if (n < 2) throw std::invalid_argument("fit_lasso needs at least 2 samples");
  if (y.size() != n) throw std::invalid_argument("y length does not match X rows");
  if (!x.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("fit_lasso inputs must be finite");
  }

  const double nn = static_cast<double>(n);
  const VectorXd x_mean = x.colwise().mean().transpose();
  const MatrixXd xc = x.rowwise() - x_mean.transpose();
  const double y_mean = y.mean();
  VectorXd r = y.array() - y_mean;
  VectorXd col_sq(d);
  for (Index j = 0; j < d; ++j) col_sq(j) = xc.col(j).squaredNorm() / nn;

  VectorXd beta = VectorXd::Zero(d);
  std::vector<Index> active;
  bool full_sweep = true;
  bool converged = false;
  int iter = 0;
  int next_snapshot = 1;
  int last_snapshot = 0;
  const auto intercept_of = [&](const VectorXd& b) { return y_mean - x_mean.dot(b); };

  const auto update = [&](Index j) {
    if (col_sq(j) == 0.0) return 0.0;
    const double old = beta(j);
    const double rho = xc.col(j).dot(r) / nn + col_sq(j) * old;
    const double next = soft_threshold(rho, config.alpha) / (col_sq(j) + config.l2);
    if (next == old) return 0.0;
    r.noalias() -= (next - old) * xc.col(j);
    beta(j) = next;
    return std::abs(next - old);
  };

  while (iter < config.max_iter) {
    double max_change = 0.0;
    if (full_sweep) {
      for (Index j = 0; j < d; ++j) max_change = std::max(max_change, update(j));
    } else {
      for (Index j : active) max_change = std::max(max_change, update(j));
    }
    ++iter;
    if (snapshot && iter == next_snapshot) {
      snapshot(iter, beta, intercept_of(beta));
      last_snapshot = iter;
      next_snapshot *= 2;
    }
    if (full_sweep) {
      if (max_change < config.tol) {
        converged = true;
        break;
      }
      // Iterate on the current support until it settles, then re-check all
      // coordinates with a full sweep.
      active.clear();
      for (Index j = 0; j < d; ++j) {
        if (beta(j) != 0.0) active.push_back(j);
      }
      full_sweep = active.empty();
    } else if (max_change < config.tol) {
      full_sweep = true;
    }
  }
  if (snapshot && last_snapshot != iter) snapshot(iter, beta, intercept_of(beta));

  ProbeModel m;
  m.coefficients = beta;
  m.intercept = intercept_of(beta);
  m.feature_means = VectorXd::Zero(d);
  m.feature_sds = VectorXd::Ones(d);
  m.nonzero_idx = nonzero_indices(beta);
  m.iterations = iter;
  m.converged = converged;
  VectorXd pred = x * beta;
  pred.array() += m.intercept;
  m.r2_train = r2_or_nan(y, pred);
  return m;
}

ProbeModel fit_probe(const Eigen::Ref<const MatrixXd>& raw,
                     const Eigen::Ref<const VectorXd>& y, const ProbeConfig& config) {
  Standardized s = standardize(raw);
  ProbeModel m = fit_lasso(s.x, y, config);
  m.feature_means = std::move(s.means);
  m.feature_sds = std::move(s.sds);
  return m;
}

double r2_score(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.empty() || y_true.size() != y_pred.size()) {
    throw std::invalid_argument("r2_score needs equal nonzero lengths");
  }
  const double mean =
      std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(y_true.size());
  double sse = 0.0, sst = 0.0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    sse += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    sst += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (!(sst > 0.0)) throw std::invalid_argument("degenerate target");
  return 1.0 - sse / sst;
}

double r2_score(const Eigen::Ref<const VectorXd>& y_true,
                const Eigen::Ref<const VectorXd>& y_pred) {
  return r2_score(std::span<const double>(y_true.data(), static_cast<size_t>(y_true.size())),
                  std::span<const double>(y_pred.data(), static_cast<size_t>(y_pred.size())));
}

CvResult cross_validate(const Eigen::Ref<const MatrixXd>& raw,
                        const Eigen::Ref<const VectorXd>& y, const ProbeConfig& config) {
  config.validate();
  const auto n = static_cast<size_t>(raw.rows());
  const auto k = static_cast<size_t>(config.k_folds);
  if (k < 2) throw std::invalid_argument("cross_validate needs k_folds >= 2");
  if (n < k) throw std::invalid_argument("fewer samples than folds");
  if (y.size() != raw.rows()) throw std::invalid_argument("y length does not match X rows");

  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  Rng rng(derive_seed(config.seed, "cv-folds"));
  rng.shuffle(std::span<size_t>(perm));
  std::vector<size_t> fold_of(n);
  for (size_t i = 0; i < n; ++i) fold_of[perm[i]] = i % k;

  CvResult result;
  for (size_t f = 0; f < k; ++f) {
    std::vector<size_t> train, held;
    for (size_t i = 0; i < n; ++i) (fold_of[i] == f ? held : train).push_back(i);
    const VectorXd y_train = select(y, train);
    const VectorXd y_held = select(y, held);
    const ProbeModel m = fit_probe(select_rows(raw, train), y_train, config);
    const VectorXd pred = m.predict(select_rows(raw, held));
    double score;
    const double sst_held = (y_held.array() - y_held.mean()).square().sum();
    if (sst_held > 0.0) {
      score = r2_score(y_held, pred);
    } else {
      const double sst = (y_held.array() - y_train.mean()).square().sum();
      const double sse = (y_held - pred).squaredNorm();
      score = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
    }
    result.fold_r2.push_back(score);
  }
  result.mean_r2 = std::accumulate(result.fold_r2.begin(), result.fold_r2.end(), 0.0) /
                   static_cast<double>(k);
  return result;
}

void finalize_curve(LayerCurve& curve) {
  if (curve.r2_test.empty()) throw std::invalid_argument("empty layer curve");
  curve.argmax_layer = 0;
  curve.max_r2 = curve.r2_test[0];
  for (size_t l = 1; l < curve.r2_test.size(); ++l) {
    if (curve.r2_test[l] > curve.max_r2) {
      curve.max_r2 = curve.r2_test[l];
      curve.argmax_layer = static_cast<int>(l);
    }
  }
}

SweepResult sweep_layers(const act::ActivationStore& store,
                         const corpus::ProbeDataset& dataset,
                         const ProbeConfig& config, unsigned threads) {
  config.validate();
  const size_t n = dataset.pair_ids.size();
  if (dataset.labels.size() != n) throw std::invalid_argument("dataset labels misaligned");
  std::vector<size_t> rows(n);
  for (size_t i = 0; i < n; ++i) {
    if (!store.contains(dataset.pair_ids[i])) {
      throw std::invalid_argument("pair_id missing from activation store: " +
                                  dataset.pair_ids[i]);
    }
    rows[i] = store.row_of(dataset.pair_ids[i]);
  }
  const VectorXd y = Eigen::Map<const VectorXd>(dataset.labels.data(), static_cast<Index>(n));
  const corpus::Split split = corpus::split_indices(n, config.split);
  if (split.train.size() < 2 || split.val.size() < 2 || split.test.size() < 2) {
    throw std::invalid_argument("dataset of " + std::to_string(n) +
                                " pairs is too small to split for probing");
  }
  const VectorXd y_train = select(y, split.train);
  const VectorXd y_val = select(y, split.val);
  const VectorXd y_test = select(y, split.test);

  const size_t n_layers = store.n_layers();
  SweepResult result;
  result.models.resize(n_layers);
  std::vector<double> cv(config.sweep_cv ? n_layers : 0);

  parallel_for(n_layers, threads, [&](size_t l) {
    const MatrixXd x = select_rows(store.layer(l), rows);
    const Standardized train = standardize(select_rows(x, split.train));
    const MatrixXd x_val = apply_standardization(select_rows(x, split.val), train.means, train.sds);
    const MatrixXd x_test =
        apply_standardization(select_rows(x, split.test), train.means, train.sds);

    double best_val = -std::numeric_limits<double>::infinity();
    VectorXd best_coef;
    double best_intercept = 0.0;
    auto keep_best = [&](int, const VectorXd& coef, double intercept) {
      VectorXd pred = x_val * coef;
      pred.array() += intercept;
      const double score = r2_score(y_val, pred);
      // >= prefers the later, more converged snapshot on ties.
      if (score >= best_val) {
        best_val = score;
        best_coef = coef;
        best_intercept = intercept;
      }
    };
    ProbeModel m = fit_lasso(train.x, y_train, config, keep_best);
    m.coefficients = best_coef;
    m.intercept = best_intercept;
    m.nonzero_idx = nonzero_indices(best_coef);
    m.feature_means = train.means;
    m.feature_sds = train.sds;
    m.feature = dataset.feature_name;
    m.layer = static_cast<int>(l);
    VectorXd pred_train = train.x * best_coef;
    pred_train.array() += best_intercept;
    VectorXd pred_test = x_test * best_coef;
    pred_test.array() += best_intercept;
    m.r2_train = r2_or_nan(y_train, pred_train);
    m.r2_val = best_val;
    m.r2_test = r2_score(y_test, pred_test);
    result.models[l] = std::move(m);
    if (config.sweep_cv) cv[l] = cross_validate(x, y, config).mean_r2;
  });

  LayerCurve& curve = result.curve;
  curve.feature_name = dataset.feature_name;
  for (const auto& m : result.models) {
    curve.r2_test.push_back(m.r2_test);
    curve.r2_val.push_back(m.r2_val);
    curve.r2_train.push_back(m.r2_train);
  }
  curve.cv_r2 = std::move(cv);
  finalize_curve(curve);
  return result;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kPresent:
      return "present";
    case Verdict::kAbsent:
      return "absent";
    case Verdict::kWeak:
      return "weak";
  }
  return "weak";
}

bool is_present(const LayerCurve& curve) {
  return std::any_of(curve.r2_test.begin(), curve.r2_test.end(),
                     [](double r) { return r > kPresentThreshold; });
}

bool is_absent(const LayerCurve& curve) {
  return !curve.r2_test.empty() && curve.final_r2() < kAbsentThreshold;
}

Verdict verdict(const LayerCurve& curve) {
  if (is_present(curve)) return Verdict::kPresent;
  if (is_absent(curve)) return Verdict::kAbsent;
  return Verdict::kWeak;
}

std::string model_to_json(const ProbeModel& model) {
  nlohmann::ordered_json j;
  j["feature"] = model.feature;
  j["layer"] = model.layer;
  j["n_features"] = model.coefficients.size();
  j["intercept"] = model.intercept;
  auto coef = nlohmann::ordered_json::array();
  for (size_t idx : model.nonzero_idx) {
    coef.push_back({idx, model.coefficients(static_cast<Index>(idx))});
  }
  j["coefficients"] = coef;
  j["feature_means"] = std::vector<double>(model.feature_means.begin(), model.feature_means.end());
  j["feature_sds"] = std::vector<double>(model.feature_sds.begin(), model.feature_sds.end());
  j["r2_train"] = model.r2_train;
  j["r2_val"] = model.r2_val;
  j["r2_test"] = model.r2_test;
  j["iterations"] = model.iterations;
  j["converged"] = model.converged;
  return j.dump(1) + "\n";
}

ProbeModel model_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ProbeModel m;
  m.feature = j.at("feature").get<std::string>();
  m.layer = j.at("layer").get<int>();
  const auto d = j.at("n_features").get<Index>();
  m.coefficients = VectorXd::Zero(d);
  for (const auto& entry : j.at("coefficients")) {
    const auto idx = entry.at(0).get<Index>();
    if (idx < 0 || idx >= d) throw std::runtime_error("probe coefficient index out of range");
    m.coefficients(idx) = entry.at(1).get<double>();
  }
  m.nonzero_idx = nonzero_indices(m.coefficients);
  m.intercept = j.at("intercept").get<double>();
  const auto means = j.at("feature_means").get<std::vector<double>>();
  const auto sds = j.at("feature_sds").get<std::vector<double>>();
  if (static_cast<Index>(means.size()) != d || static_cast<Index>(sds.size()) != d) {
    throw std::runtime_error("probe standardization vectors have wrong length");
  }
  m.feature_means = Eigen::Map<const VectorXd>(means.data(), d);
  m.feature_sds = Eigen::Map<const VectorXd>(sds.data(), d);
  m.r2_train = json_number(j.at("r2_train"));
  m.r2_val = json_number(j.at("r2_val"));
  m.r2_test = json_number(j.at("r2_test"));
  m.iterations = j.value("iterations", 0);
  m.converged = j.value("converged", false);
  return m;
}

std::string curve_to_csv(const LayerCurve& curve) {
  std::string out = "layer,r2_test\n";
  for (size_t l = 0; l < curve.r2_test.size(); ++l) {
    out += std::to_string(l) + "," + format_double(curve.r2_test[l]) + "\n";
  }
  return out;
}

std::string curve_to_json(const LayerCurve& curve) {
  nlohmann::ordered_json j;
  j["feature"] = curve.feature_name;
  j["argmax_layer"] = curve.argmax_layer;
  j["max_r2"] = curve.max_r2;
  j["present"] = is_present(curve);
  j["absent"] = is_absent(curve);
  j["final_r2"] = curve.final_r2();
  j["verdict"] = to_string(verdict(curve));
  j["r2_test"] = curve.r2_test;
  j["r2_val"] = curve.r2_val;
  j["r2_train"] = curve.r2_train;
  if (!curve.cv_r2.empty()) j["cv_r2"] = curve.cv_r2;
  return j.dump(2) + "\n";
}

LayerCurve curve_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  LayerCurve c;
  c.feature_name = j.at("feature").get<std::string>();
  auto numbers = [](const nlohmann::json& arr) {
    std::vector<double> out;
    for (const auto& v : arr) out.push_back(json_number(v));
    return out;
  };
  c.r2_test = numbers(j.at("r2_test"));
  if (j.contains("r2_val")) c.r2_val = numbers(j.at("r2_val"));
  if (j.contains("r2_train")) c.r2_train = numbers(j.at("r2_train"));
  if (j.contains("cv_r2")) c.cv_r2 = numbers(j.at("cv_r2"));
  finalize_curve(c);
  return c;
}

}  // namespace rankprobe::probe
