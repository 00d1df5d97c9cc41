/*
 * Copyright 2026 The OCAE Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "ocae/detector.h"
#include "ocae/error.h"
#include "test_support.h"

namespace ocae {
namespace {

TEST_CASE("calibrate analytic cases") {
  const std::vector<double> flat{0.1, 0.1, 0.1};
  const Threshold a = Calibrate(flat);
  CHECK(a.std <= 1e-15);
  CHECK(std::abs(a.value - 0.1) <= 1e-12);
  CHECK(a.n == 3);

  const std::vector<double> pair{0.0, 0.2};
  const Threshold b = Calibrate(pair);
  CHECK(std::abs(b.mean - 0.1) <= 1e-12);
  CHECK(std::abs(b.std - 0.1) <= 1e-12);
  CHECK(std::abs(b.value - 0.3) <= 1e-12);
}

TEST_CASE("calibrate needs two samples") {
  try {
    Calibrate(std::vector<double>{0.5});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInsufficientData);
  }
}

TEST_CASE("calibrate on normal draws matches the empirical mean + 2 sigma") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> dist(0.05, 0.01);
  std::vector<double> xs(10000);
  for (double& x : xs) x = dist(rng);
  const Threshold t = Calibrate(xs);
  // Independent two-pass oracle.
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double std = std::sqrt(ss / xs.size());
  CHECK(std::abs(t.value - (mean + 2.0 * std)) <= 1e-12);
  CHECK(std::abs(t.value - 0.07) <= 0.002);
}

TEST_CASE("property: calibrate is permutation invariant and above the mean") {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> dist(50.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(2 + trial * 7);
    for (double& x : xs) x = dist(rng);
    const Threshold t = Calibrate(xs);
    CHECK(t.value >= t.mean);
    std::shuffle(xs.begin(), xs.end(), rng);
    CHECK(std::abs(Calibrate(xs).value - t.value) <= 1e-12 * t.value);
  }
}

TEST_CASE("classify is a strict comparison") {
  const Threshold t = ThresholdFromValue(0.02);
  CHECK_FALSE(Classify(0.01, t).is_anomaly);
  CHECK(Classify(0.05, t).is_anomaly);
  CHECK_FALSE(Classify(0.02, t).is_anomaly);
  CHECK(DefaultThreshold().value == 0.02);
  CHECK(DefaultThreshold().is_default);
  CHECK(DefaultThreshold().n == 0);
}

TEST_CASE("score composes transform, forward and mse") {
  const auto frames = testing::NormalFrames(100, 1);
  const ChannelScaler scaler = ChannelScaler::Fit(frames);
  const auto model = AttentionAutoencoder::Init(16, 1);
  for (const auto& f : frames) {
    const double s = Score(model, scaler, f);
    const ChannelVector x = scaler.Transform(f);
    const Eigen::VectorXd xh = model.Forward(x).x_hat;
    double mse = 0.0;
    for (int i = 0; i < 7; ++i) mse += (x[i] - xh(i)) * (x[i] - xh(i));
    CHECK(s == doctest::Approx(mse / 7.0).epsilon(1e-14));
    CHECK(Score(model, scaler, f) == s);
  }
}

TEST_CASE("zero model scores a mid-range frame as 0") {
  const ChannelScaler scaler(ChannelVector{0, 0, 0, 0, 0, 0, 0},
                             ChannelVector{2, 2, 2, 2, 2, 2, 2});
  const SensorFrame f{"t", 0, {1, 1, 1, 1, 1, 1, 1}};
  CHECK(Score(AttentionAutoencoder::Zeros(8), scaler, f) == 0.0);
}

TEST_CASE("threshold text is lenient on read and exact on write") {
  CHECK(ParseThreshold("0.132\n") == 0.132);
  CHECK(ParseThreshold("  0.132 \r\n\t") == 0.132);
  CHECK(FormatThreshold(0.132) == "0.132\n");
  const double v = 0.010451647616844572;
  CHECK(ParseThreshold(FormatThreshold(v)) == v);
  for (const char* bad : {"", "abc", "-1", "nan", "0.1 0.2"}) {
    CHECK_THROWS_AS(ParseThreshold(bad), Error);
  }
}

}  // namespace
}  // namespace ocae
