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


#include <benchmark/benchmark.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ocae/autoencoder.h"
#include "ocae/detector.h"
#include "ocae/model_store.h"
#include "ocae/preprocess.h"
#include "ocae/simgen.h"

namespace {

using namespace ocae;

std::vector<SensorFrame> Frames(std::size_t n) {
  GeneratorConfig config = DefaultGeneratorConfig();
  config.seed = 11;
  return Generate(config, n);
}

void BM_Forward(benchmark::State& state) {
  const auto model = AttentionAutoencoder::Init(static_cast<int>(state.range(0)), 1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ChannelVector x;
  for (double& v : x) v = u(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.Reconstruct(x));
  }
}
BENCHMARK(BM_Forward)->RangeMultiplier(2)->Range(16, 128);

// Per-row cost in the monitor: min-max scaling, forward, mse, comparison.
void BM_ScoreClassify(benchmark::State& state) {
  const auto frames = Frames(1024);
  const ChannelScaler scaler = ChannelScaler::Fit(frames);
  const auto model =
      AttentionAutoencoder::Init(static_cast<int>(state.range(0)), 1).RoundedToFloat();
  const Threshold threshold = ThresholdFromValue(0.02);
  std::size_t i = 0;
  for (auto _ : state) {
    const Verdict v = Classify(Score(model, scaler, frames[i++ & 1023]), threshold);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_ScoreClassify)->Arg(64)->Arg(128);

void BM_ForwardBackward(benchmark::State& state) {
  const auto model = AttentionAutoencoder::Init(static_cast<int>(state.range(0)), 1);
  const ChannelVector x{0.2, 0.4, 0.6, 0.8, 0.1, 0.3, 0.5};
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(model.parameter_count()));
  for (auto _ : state) {
    model.AccumulateGradient(model.Forward(x), x, 1.0, grad);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(64)->Arg(128);

void BM_TrainEpoch(benchmark::State& state) {
  const auto frames = Frames(2000);
  const auto scaled = TransformAll(ChannelScaler::Fit(frames), frames);
  TrainConfig config;
  config.epochs = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        Train(AttentionAutoencoder::Init(static_cast<int>(state.range(0)), 1), scaled,
              config));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scaled.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Calibrate(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.05, 0.01);
  std::vector<double> errors(static_cast<std::size_t>(state.range(0)));
  for (double& e : errors) e = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(Calibrate(errors));
}
BENCHMARK(BM_Calibrate)->Arg(2000)->Arg(20000);

void BM_SerializeModel(benchmark::State& state) {
  const auto model = AttentionAutoencoder::Init(64, 1).RoundedToFloat();
  for (auto _ : state) benchmark::DoNotOptimize(SerializeModel(model));
}
BENCHMARK(BM_SerializeModel);

void BM_DeserializeModel(benchmark::State& state) {
  const auto bytes = SerializeModel(AttentionAutoencoder::Init(64, 1));
  for (auto _ : state) benchmark::DoNotOptimize(DeserializeModel(bytes));
}
BENCHMARK(BM_DeserializeModel);

void BM_LoadBundle(benchmark::State& state) {
  std::string pattern =
      (std::filesystem::temp_directory_path() / "ocae-bench-XXXXXX").string();
  if (mkdtemp(pattern.data()) == nullptr) {
    state.SkipWithError("mkdtemp failed");
    return;
  }
  const std::filesystem::path dir = pattern;
  const auto frames = Frames(64);
  SaveBundle(dir, AttentionAutoencoder::Init(64, 1).RoundedToFloat(),
             ChannelScaler::Fit(frames), 0.02);
  for (auto _ : state) benchmark::DoNotOptimize(LoadBundle(dir));
  std::filesystem::remove_all(dir);
}
BENCHMARK(BM_LoadBundle);

void BM_ParseClean(benchmark::State& state) {
  std::string text = CsvHeaderLine() + "\n";
  for (const SensorFrame& f : Frames(10000)) text += FormatFrame(f) + "\n";
  for (auto _ : state) {
    benchmark::DoNotOptimize(Clean(ParseCsv(text).rows));
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_ParseClean)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
