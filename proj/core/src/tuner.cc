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

#include "ocae/tuner.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "ocae/error.h"

namespace ocae {
namespace {

int SampleGrid(const IntGrid& grid, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, grid.size() - 1);
  return grid.lo + pick(rng) * grid.step;
}

TrialResult RunTrial(std::span<const ChannelVector> data,
                     const TuneOptions& options, int trial) {
  const std::uint64_t seed = options.seed + static_cast<std::uint64_t>(trial);
  std::mt19937_64 rng(seed);
  TrialResult result;
  result.trial = trial;
  result.params = Sample(options.space, rng);
  try {
    const TrainConfig config = MakeTrainConfig(
        result.params, seed, options.patience, options.val_fraction);
    TrainResult trained = Train(
        AttentionAutoencoder::Init(result.params.hidden_dim, seed), data,
        config);
    result.val_loss = trained.best_val_loss;
    result.epochs_run = static_cast<int>(trained.history.size());
    result.history = std::move(trained.history);
  } catch (const DivergenceError& e) {
    result.diverged = true;
    result.epochs_run = e.epoch();
  }
  return result;
}

}  // namespace

bool SearchSpace::Contains(const HyperParams& params) const {
  return hidden_dim.Contains(params.hidden_dim) &&
         batch_size.Contains(params.batch_size) &&
         epochs.Contains(params.epochs) &&
         params.learning_rate >= learning_rate_lo &&
         params.learning_rate <= learning_rate_hi;
}

HyperParams Sample(const SearchSpace& space, std::mt19937_64& rng) {
  HyperParams p;
  p.hidden_dim = SampleGrid(space.hidden_dim, rng);
  p.batch_size = SampleGrid(space.batch_size, rng);
  std::uniform_real_distribution<double> log_lr(
      std::log(space.learning_rate_lo), std::log(space.learning_rate_hi));
  p.learning_rate = std::clamp(std::exp(log_lr(rng)), space.learning_rate_lo,
                               space.learning_rate_hi);
  p.epochs = SampleGrid(space.epochs, rng);
  return p;
}

TrainConfig MakeTrainConfig(const HyperParams& params, std::uint64_t seed,
                            int patience, double val_fraction) {
  TrainConfig config;
  config.batch_size = params.batch_size;
  config.learning_rate = params.learning_rate;
  config.epochs = params.epochs;
  config.patience = patience;
  config.val_fraction = val_fraction;
  config.seed = seed;
  return config;
}

TuneResult Tune(std::span<const ChannelVector> data,
                const TuneOptions& options) {
  if (options.n_trials <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "n_trials must be positive");
  }
  if (data.size() < kMinTrainingRows) {
    throw Error(ErrorKind::kInsufficientData,
                "tuning needs at least " + std::to_string(kMinTrainingRows) +
                    " rows");
  }

  TuneResult result;
  result.trials.resize(static_cast<std::size_t>(options.n_trials));

  int workers = options.threads > 0
                    ? options.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, options.n_trials);

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (int k = next++; k < options.n_trials; k = next++) {
      try {
        result.trials[static_cast<std::size_t>(k)] =
            RunTrial(data, options, k);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  for (const TrialResult& trial : result.trials) {
    if (trial.val_loss <
        result.trials[static_cast<std::size_t>(result.best_trial)].val_loss) {
      result.best_trial = trial.trial;
    }
  }
  const TrialResult& best =
      result.trials[static_cast<std::size_t>(result.best_trial)];
  if (best.diverged) {
    throw DivergenceError(best.epochs_run, "every tuning trial diverged");
  }
  result.best = best.params;
  return result;
}

std::string TuneReportJson(const TuneResult& result) {
  nlohmann::ordered_json report = nlohmann::ordered_json::array();
  for (const TrialResult& trial : result.trials) {
    nlohmann::ordered_json entry;
    entry["trial"] = trial.trial;
    entry["params"] = {{"hidden_dim", trial.params.hidden_dim},
                       {"batch_size", trial.params.batch_size},
                       {"learning_rate", trial.params.learning_rate},
                       {"epochs", trial.params.epochs}};
    if (trial.diverged) {
      entry["val_loss"] = nullptr;
    } else {
      entry["val_loss"] = trial.val_loss;
    }
    entry["epochs_run"] = trial.epochs_run;
    report.push_back(std::move(entry));
  }
  return report.dump(2);
}

}  // namespace ocae
