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

#include <cmath>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "rankprobe/common.h"
#include "synthetic.h"

namespace rankprobe::probe {
namespace {

using ::testing::ElementsAre;

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// Centered columns with X^T X / n = I.
Eigen::MatrixXd orthonormal_design(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Eigen::MatrixXd g = gaussian(rng, n, d);
  g.rowwise() -= g.colwise().mean();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
  return q * std::sqrt(static_cast<double>(n));
}

ProbeConfig tight(double alpha) {
  ProbeConfig c;
  c.alpha = alpha;
  c.tol = 1e-12;
  c.max_iter = 100000;
  return c;
}

TEST(SoftThresholdTest, Values) {
  EXPECT_EQ(soft_threshold(3.0, 1.0), 2.0);
  EXPECT_EQ(soft_threshold(-3.0, 1.0), -2.0);
  EXPECT_EQ(soft_threshold(0.5, 1.0), 0.0);
  EXPECT_EQ(soft_threshold(-1.0, 1.0), 0.0);
}

TEST(LassoTest, OrthonormalDesignHasClosedForm) {
  Rng rng(1);
  const Eigen::Index n = 200, d = 12;
  const auto x = orthonormal_design(rng, n, d);
  Eigen::VectorXd y = x * Eigen::VectorXd::LinSpaced(d, -1.5, 1.5);
  y.array() += 5.0;
  for (Eigen::Index i = 0; i < n; ++i) y(i) += 0.1 * rng.normal();
  for (double alpha : {0.0, 0.2, 0.7}) {
    const auto m = fit_lasso(x, y, tight(alpha));
    ASSERT_TRUE(m.converged);
    const Eigen::VectorXd z = x.transpose() * y / static_cast<double>(n);
    for (Eigen::Index j = 0; j < d; ++j) {
      EXPECT_NEAR(m.coefficients(j), soft_threshold(z(j), alpha), 1e-9) << alpha << " " << j;
    }
    EXPECT_NEAR(m.intercept, y.mean(), 1e-9);
  }
}

TEST(LassoTest, AboveAlphaMaxEverythingIsZero) {
  Rng rng(2);
  const auto x = gaussian(rng, 150, 20);
  Eigen::VectorXd y = x.col(3) * 2.0 + Eigen::VectorXd::Constant(150, 1.0);
  Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const double alpha_max =
      (xc.transpose() * (y.array() - y.mean()).matrix()).cwiseAbs().maxCoeff() / 150.0;
  const auto zero = fit_lasso(x, y, tight(alpha_max * 1.001));
  EXPECT_EQ(zero.coefficients.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(zero.nonzero_idx.empty());
  EXPECT_NEAR(zero.intercept, y.mean(), 1e-12);
  const auto some = fit_lasso(x, y, tight(alpha_max * 0.99));
  EXPECT_THAT(some.nonzero_idx, ElementsAre(3u));
}

TEST(LassoTest, SatisfiesOptimalityConditions) {
  Rng rng(3);
  const Eigen::Index n = 120, d = 30;
  Eigen::MatrixXd x = gaussian(rng, n, d);
  x.col(1) = 0.8 * x.col(0) + 0.2 * x.col(1);
  Eigen::VectorXd y = x.col(0) - 2.0 * x.col(5) + 0.5 * x.col(7);
  for (Eigen::Index i = 0; i < n; ++i) y(i) += 0.3 * rng.normal();
  for (double alpha : {0.01, 0.1, 0.4}) {
    const auto m = fit_lasso(x, y, tight(alpha));
    ASSERT_TRUE(m.converged);
    const Eigen::VectorXd r = y - x * m.coefficients - Eigen::VectorXd::Constant(n, m.intercept);
    EXPECT_NEAR(r.mean(), 0.0, 1e-9);
    const Eigen::VectorXd g = x.transpose() * r / static_cast<double>(n);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double b = m.coefficients(j);
      if (b != 0.0) {
        EXPECT_NEAR(g(j), alpha * (b > 0 ? 1.0 : -1.0), 1e-7);
      } else {
        EXPECT_LE(std::abs(g(j)), alpha + 1e-7);
      }
    }
    // Small moves never lower the objective.
    const double f0 = lasso_objective(x, y, m.coefficients, m.intercept, alpha);
    for (Eigen::Index j = 0; j < d; ++j) {
      for (double step : {1e-4, -1e-4}) {
        Eigen::VectorXd c = m.coefficients;
        c(j) += step;
        EXPECT_GE(lasso_objective(x, y, c, m.intercept, alpha), f0 - 1e-12);
      }
    }
  }
}

TEST(LassoTest, NonzeroCountShrinksWithAlpha) {
  Rng rng(4);
  const auto x = gaussian(rng, 100, 25);
  Eigen::VectorXd y = x * Eigen::VectorXd::LinSpaced(25, -1, 1);
  size_t prev = 26;
  for (double alpha : {0.0, 0.01, 0.1, 0.3, 1.0, 10.0}) {
    const auto m = fit_lasso(x, y, tight(alpha));
    EXPECT_LE(m.nonzero_idx.size(), prev) << alpha;
    prev = m.nonzero_idx.size();
  }
  EXPECT_EQ(prev, 0u);
}

TEST(LassoTest, SnapshotsArePowersOfTwoAndLast) {
  Rng rng(5);
  const auto x = gaussian(rng, 80, 10);
  Eigen::VectorXd y = x.col(0);
  std::vector<int> seen;
  ProbeConfig c = tight(0.01);
  const auto m = fit_lasso(x, y, c, [&](int it, const Eigen::VectorXd&, double) {
    seen.push_back(it);
  });
  ASSERT_FALSE(seen.empty());
  EXPECT_EQ(seen.front(), 1);
  EXPECT_EQ(seen.back(), m.iterations);
}

TEST(LassoTest, MaxIterReportsNotConverged) {
  Rng rng(6);
  const auto x = gaussian(rng, 60, 40);
  Eigen::VectorXd y = x.col(0) + x.col(1);
  ProbeConfig c = tight(1e-4);
  c.max_iter = 1;
  const auto m = fit_lasso(x, y, c);
  EXPECT_FALSE(m.converged);
  EXPECT_EQ(m.iterations, 1);
}

TEST(ConfigTest, Validation) {
  ProbeConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ProbeConfig{};
  c.k_folds = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ProbeConfig{};
  c.tol = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(R2Test, Examples) {
  const std::vector<double> y = {1, 2, 3};
  const std::vector<double> rev = {3, 2, 1};
  EXPECT_DOUBLE_EQ(r2_score(y, rev), -3.0);
  EXPECT_DOUBLE_EQ(r2_score(y, y), 1.0);
  const std::vector<double> mean = {2, 2, 2};
  EXPECT_DOUBLE_EQ(r2_score(y, mean), 0.0);
  try {
    r2_score(mean, y);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "degenerate target");
  }
}

TEST(StandardizeTest, Examples) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 7, 2, 7, 3, 7, 4, 7;
  const auto s = standardize(x);
  EXPECT_DOUBLE_EQ(s.means(0), 2.5);
  EXPECT_DOUBLE_EQ(s.sds(0), std::sqrt(1.25));
  EXPECT_EQ(s.sds(1), 1.0);
  EXPECT_EQ(s.x.col(1).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(s.x.col(0).mean(), 0.0, 1e-15);
  EXPECT_NEAR(s.x.col(0).squaredNorm() / 4, 1.0, 1e-15);
  EXPECT_TRUE(apply_standardization(x, s.means, s.sds).isApprox(s.x));
}

TEST(FitProbeTest, PredictUsesRawInputs) {
  Rng rng(7);
  Eigen::MatrixXd x = gaussian(rng, 100, 5) * 3.0;
  x.array() += 10.0;
  Eigen::VectorXd y = (2.0 * x.col(2)).array() - 4.0;
  const auto m = fit_probe(x, y, tight(0.0));
  EXPECT_LT((m.predict(x) - y).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(CrossValidateTest, LeaveOneOut) {
  Eigen::MatrixXd x(5, 1);
  x << 1, 2, 3, 4, 6;
  Eigen::VectorXd y = 2.0 * x.col(0).array() + 1.0;
  ProbeConfig c = tight(0.0);
  c.k_folds = 5;
  const auto cv = cross_validate(x, y, c);
  ASSERT_EQ(cv.fold_r2.size(), 5u);
  for (double r : cv.fold_r2) EXPECT_NEAR(r, 1.0, 1e-9);
  EXPECT_NEAR(cv.mean_r2, 1.0, 1e-9);
}

TEST(CrossValidateTest, DeterministicInSeed) {
  Rng rng(8);
  const auto x = gaussian(rng, 60, 8);
  Eigen::VectorXd y = x.col(0);
  for (Eigen::Index i = 0; i < 60; ++i) y(i) += rng.normal();
  ProbeConfig c;
  c.seed = 3;
  EXPECT_EQ(cross_validate(x, y, c).fold_r2, cross_validate(x, y, c).fold_r2);
  c.k_folds = 61;
  EXPECT_THROW(cross_validate(x, y, c), std::invalid_argument);
}

LayerCurve curve_of(std::vector<double> r2) {
  LayerCurve c;
  c.feature_name = "f";
  c.r2_test = r2;
  finalize_curve(c);
  return c;
}

TEST(VerdictTest, Rules) {
  EXPECT_EQ(verdict(curve_of({0.2, 0.9, 0.3})), Verdict::kPresent);
  EXPECT_EQ(verdict(curve_of({0.2, 0.5, 0.05})), Verdict::kAbsent);
  EXPECT_EQ(verdict(curve_of({0.2, 0.5, 0.3})), Verdict::kWeak);
  EXPECT_EQ(verdict(curve_of({0.85, 0.1})), Verdict::kWeak);
  // Present wins when both hold.
  EXPECT_EQ(verdict(curve_of({0.95, 0.0})), Verdict::kPresent);
  EXPECT_EQ(to_string(Verdict::kWeak), "weak");
}

TEST(FinalizeCurveTest, TiesGoToLowestLayer) {
  const auto c = curve_of({0.3, 0.7, 0.7, 0.1});
  EXPECT_EQ(c.argmax_layer, 1);
  EXPECT_EQ(c.max_r2, 0.7);
  EXPECT_EQ(c.final_r2(), 0.1);
}

TEST(SerializationTest, ModelRoundTrip) {
  Rng rng(9);
  const auto x = gaussian(rng, 50, 6);
  Eigen::VectorXd y = x.col(1) * 0.3;
  auto m = fit_probe(x, y, tight(0.01));
  m.feature = "bm25";
  m.layer = 2;
  m.r2_test = 0.5;
  const auto back = model_from_json(model_to_json(m));
  EXPECT_EQ(back.feature, "bm25");
  EXPECT_EQ(back.layer, 2);
  EXPECT_EQ(back.coefficients, m.coefficients);
  EXPECT_EQ(back.intercept, m.intercept);
  EXPECT_EQ(back.feature_means, m.feature_means);
  EXPECT_EQ(back.feature_sds, m.feature_sds);
  EXPECT_EQ(back.nonzero_idx, m.nonzero_idx);
  EXPECT_EQ(back.r2_test, 0.5);
  EXPECT_TRUE(std::isnan(back.r2_val));
  EXPECT_EQ(model_to_json(back), model_to_json(m));
}

TEST(SerializationTest, CurveRoundTripAndCsv) {
  auto c = curve_of({0.25, 0.5});
  c.r2_val = {0.2, 0.4};
  c.r2_train = {0.3, 0.6};
  const auto back = curve_from_json(curve_to_json(c));
  EXPECT_EQ(back.r2_test, c.r2_test);
  EXPECT_EQ(back.r2_val, c.r2_val);
  EXPECT_EQ(back.argmax_layer, 1);
  EXPECT_EQ(curve_to_csv(c), "layer,r2_test\n0,0.25\n1,0.5\n");
  EXPECT_THAT(curve_to_json(c), ::testing::HasSubstr("\"verdict\": \"weak\""));
}

TEST(SweepTest, SingleLayerStore) {
  auto p = synthetic::planted_store(11, 0, 1, 300, 16);
  ProbeConfig c;
  c.seed = 1;
  const auto r = sweep_layers(p.store, p.dataset, c);
  ASSERT_EQ(r.curve.r2_test.size(), 1u);
  ASSERT_EQ(r.models.size(), 1u);
  EXPECT_GT(r.curve.r2_test[0], 0.95);
  EXPECT_EQ(r.curve.argmax_layer, 0);
}

TEST(SweepTest, RecoversPlantedLayerAndIgnoresThreads) {
  auto p = synthetic::planted_store(12, 2, 4, 600, 32);
  ProbeConfig c;
  c.seed = 2;
  const auto a = sweep_layers(p.store, p.dataset, c, 1);
  const auto b = sweep_layers(p.store, p.dataset, c, 4);
  EXPECT_EQ(a.curve.r2_test, b.curve.r2_test);
  EXPECT_EQ(a.curve.argmax_layer, 2);
  EXPECT_EQ(verdict(a.curve), Verdict::kPresent);
  for (size_t n : p.signal.neurons) {
    EXPECT_NE(a.models[2].coefficients(static_cast<Eigen::Index>(n)), 0.0);
  }
}

TEST(SweepTest, MissingPairIdIsNamed) {
  auto p = synthetic::planted_store(13, 0, 1, 50, 4);
  p.dataset.pair_ids[7] = "ghost";
  try {
    sweep_layers(p.store, p.dataset, ProbeConfig{});
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_THAT(e.what(), ::testing::HasSubstr("ghost"));
  }
}

}  // namespace
}  // namespace rankprobe::probe
