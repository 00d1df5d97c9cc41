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

#pragma once

// Seeded random search over the autoencoder's hyperparameter grid.

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ocae/autoencoder.h"

namespace ocae {

struct IntGrid {
  int lo;
  int hi;
  int step;

  int size() const { return (hi - lo) / step + 1; }
  bool Contains(int v) const {
    return v >= lo && v <= hi && (v - lo) % step == 0;
  }
};

struct HyperParams {
  int hidden_dim = 64;
  int batch_size = 16;
  double learning_rate = 7e-4;
  int epochs = 10;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

struct SearchSpace {
  IntGrid hidden_dim{16, 128, 16};
  IntGrid batch_size{16, 64, 16};
  double learning_rate_lo = 1e-4;
  double learning_rate_hi = 1e-2;
  IntGrid epochs{5, 50, 5};

  bool Contains(const HyperParams& params) const;
};

// Uniform over each integer grid, log-uniform over the learning rate.
HyperParams Sample(const SearchSpace& space, std::mt19937_64& rng);

struct TrialResult {
  int trial = 0;
  HyperParams params;
  // Minimum validation loss reached; +inf when the trial diverged.
  double val_loss = std::numeric_limits<double>::infinity();
  int epochs_run = 0;
  bool diverged = false;
  std::vector<EpochLoss> history;
};

struct TuneOptions {
  int n_trials = 10;
  std::uint64_t seed = 42;
  int patience = 5;
  double val_fraction = 0.10;
  // Worker threads; 0 picks hardware concurrency. Results do not depend on
  // this value.
  int threads = 0;
  SearchSpace space;
};

struct TuneResult {
  HyperParams best;
  int best_trial = 0;
  std::vector<TrialResult> trials;  // ordered by trial index
};

// Trial k samples its parameters and trains with an RNG seeded by seed + k.
// Best is the minimum val_loss, ties going to the earlier trial.
TuneResult Tune(std::span<const ChannelVector> data,
                const TuneOptions& options);

TrainConfig MakeTrainConfig(const HyperParams& params, std::uint64_t seed,
                            int patience, double val_fraction);

// [{trial, params, val_loss, epochs_run}] with val_loss null on divergence.
std::string TuneReportJson(const TuneResult& result);

}  // namespace ocae
