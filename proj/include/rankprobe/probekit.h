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

// Sparse linear probes from layer activations to scalar feature labels.
//
// A probe minimizes
//
//   (1 / 2n) ||y - X b - b0||^2 + alpha ||b||_1 + (l2 / 2) ||b||^2
//
// by cyclic coordinate descent with soft-thresholding over standardized
// activations. l2 defaults to 0 (plain Lasso).

#ifndef RANKPROBE_PROBEKIT_H_
#define RANKPROBE_PROBEKIT_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rankprobe/actstore.h"
#include "rankprobe/corpus.h"

namespace rankprobe::probe {

struct ProbeConfig {
  double alpha = 0.1;
  double l2 = 0.0;
  int max_iter = 10000;
  double tol = 1e-6;
  int k_folds = 5;
  uint64_t seed = 0;
  corpus::SplitSpec split{};
  // Also run k-fold cross-validation per layer inside sweep_layers.
  bool sweep_cv = false;

  void validate() const;
};

struct Standardized {
  Eigen::MatrixXd x;
  Eigen::VectorXd means;
  Eigen::VectorXd sds;
};

// Column-wise zero mean and unit population variance. Constant columns
// become zeros with sd recorded as 1.
Standardized standardize(const Eigen::Ref<const Eigen::MatrixXd>& x);

Eigen::MatrixXd apply_standardization(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                      const Eigen::VectorXd& means,
                                      const Eigen::VectorXd& sds);

struct ProbeModel {
  std::string feature;
  int layer = -1;
  // Coefficients act on standardized inputs.
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  Eigen::VectorXd feature_means;
  Eigen::VectorXd feature_sds;
  std::vector<size_t> nonzero_idx;
  double r2_train = std::numeric_limits<double>::quiet_NaN();
  double r2_val = std::numeric_limits<double>::quiet_NaN();
  double r2_test = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;

  // Predicts from raw (unstandardized) activations.
  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& raw) const;
};

double soft_threshold(double z, double gamma);

// Value of the probe objective at (coef, intercept).
double lasso_objective(const Eigen::Ref<const Eigen::MatrixXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& coef,
                       double intercept, double alpha, double l2 = 0.0);

// Called after selected sweeps (1, 2, 4, 8, ... and the last) with the
// current coefficients and intercept.
using SnapshotFn =
    std::function<void(int iteration, const Eigen::VectorXd& coef, double intercept)>;

// Fits on `x` as given (callers standardize first); columns are centered
// internally so the intercept absorbs any residual offset. Stops once the
// largest coefficient change in a full sweep falls below tol, or after
// max_iter sweeps with converged = false. feature_means / feature_sds are
// set to 0 / 1.
ProbeModel fit_lasso(const Eigen::Ref<const Eigen::MatrixXd>& x,
                     const Eigen::Ref<const Eigen::VectorXd>& y,
                     const ProbeConfig& config, const SnapshotFn& snapshot = {});

// Standardizes raw activations, fits, and records the standardization.
ProbeModel fit_probe(const Eigen::Ref<const Eigen::MatrixXd>& raw,
                     const Eigen::Ref<const Eigen::VectorXd>& y,
                     const ProbeConfig& config);

// 1 - SSE / SST. Throws std::invalid_argument("degenerate target") when
// y_true is constant.
double r2_score(std::span<const double> y_true, std::span<const double> y_pred);
double r2_score(const Eigen::Ref<const Eigen::VectorXd>& y_true,
                const Eigen::Ref<const Eigen::VectorXd>& y_pred);

struct CvResult {
  double mean_r2 = 0.0;
  std::vector<double> fold_r2;
};

// Seeded k-fold CV over raw activations. Each fold standardizes with its
// own training statistics. A held-out fold with a constant target (e.g.
// leave-one-out) is scored against the training-fold mean instead.
CvResult cross_validate(const Eigen::Ref<const Eigen::MatrixXd>& raw,
                        const Eigen::Ref<const Eigen::VectorXd>& y,
                        const ProbeConfig& config);

struct LayerCurve {
  std::string feature_name;
  std::vector<double> r2_test;
  std::vector<double> r2_val;
  std::vector<double> r2_train;
  std::vector<double> cv_r2;  // empty unless ProbeConfig::sweep_cv
  int argmax_layer = 0;
  double max_r2 = 0.0;

  double final_r2() const { return r2_test.back(); }
};

struct SweepResult {
  LayerCurve curve;
  std::vector<ProbeModel> models;  // one per layer
};

// Probes every layer of `store` for the dataset's labels. Rows are aligned
// by pair_id; each layer is standardized on its training split, fitted,
// and the sweep snapshot with the best validation R^2 is kept. Layers are
// independent and run on up to `threads` workers.
SweepResult sweep_layers(const act::ActivationStore& store,
                         const corpus::ProbeDataset& dataset,
                         const ProbeConfig& config, unsigned threads = 1);

// Argmax over a curve, ties to the lowest layer.
void finalize_curve(LayerCurve& curve);

inline constexpr double kPresentThreshold = 0.85;
inline constexpr double kAbsentThreshold = 0.1;

enum class Verdict { kPresent, kAbsent, kWeak };
std::string to_string(Verdict v);

// "present" when some layer's R^2 > 0.85; otherwise "absent" when the final
// layer's R^2 < 0.1; otherwise "weak".
Verdict verdict(const LayerCurve& curve);
bool is_present(const LayerCurve& curve);
bool is_absent(const LayerCurve& curve);

std::string model_to_json(const ProbeModel& model);
ProbeModel model_from_json(const std::string& text);

// `layer,r2_test` rows.
std::string curve_to_csv(const LayerCurve& curve);
// {feature, argmax_layer, max_r2, present, absent, final_r2, verdict, r2_test}
std::string curve_to_json(const LayerCurve& curve);
LayerCurve curve_from_json(const std::string& text);

}  // namespace rankprobe::probe

#endif  // RANKPROBE_PROBEKIT_H_
