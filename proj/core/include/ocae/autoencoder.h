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

// Attention one-class autoencoder: a shared per-token encoder, a softmax
// attention pooling over tokens, a bottleneck and a dense decoder back to the
// seven scaled channels.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ocae/preprocess.h"

namespace ocae {

enum class Activation { kRelu, kSigmoid, kLinear };

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixView = Eigen::Map<const RowMajorMatrix>;
using MatrixView = Eigen::Map<RowMajorMatrix>;
using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;
using VectorView = Eigen::Map<Eigen::VectorXd>;

// Weights are in_dim x out_dim; y = act(W^T x + b).
struct DenseLayer {
  ConstMatrixView weights;
  ConstVectorView bias;
  Activation activation;
};

struct AttentionParams {
  ConstVectorView w;  // hidden_dim x 1
  double b;
};

// Offsets of every parameter block inside the flat parameter vector. The
// order is also the on-disk order: enc1, attention (W then b), bottleneck,
// dec1, dec2, out; each dense block is weights (row-major) then bias.
struct ParameterLayout {
  struct Dense {
    std::size_t weights = 0;
    std::size_t bias = 0;
    Eigen::Index in = 0;
    Eigen::Index out = 0;
  };

  ParameterLayout(int hidden_dim, Layout layout);

  Dense enc1;
  std::size_t attn_w = 0;
  std::size_t attn_b = 0;
  Dense bottleneck;
  Dense dec1;
  Dense dec2;
  Dense out;
  std::size_t total = 0;
};

struct ForwardTrace {
  TokenMatrix tokens;         // T x token_dim
  Eigen::MatrixXd h_pre;      // T x d
  Eigen::MatrixXd h;          // T x d, per-token encodings
  Eigen::VectorXd e;          // T attention logits (after tanh)
  Eigen::VectorXd alpha;      // T attention weights
  Eigen::VectorXd c;          // d context vector
  Eigen::VectorXd z_pre;      // d/2
  Eigen::VectorXd z;          // d/2 latent
  Eigen::VectorXd dec1_pre;   // d/2
  Eigen::VectorXd dec1;       // d/2
  Eigen::VectorXd dec2_pre;   // d
  Eigen::VectorXd dec2;       // d
  Eigen::VectorXd x_hat;      // 7
};

// Numerically stable softmax.
Eigen::VectorXd Softmax(const Eigen::VectorXd& logits);

struct AttentionOutput {
  Eigen::VectorXd e;
  Eigen::VectorXd alpha;
  Eigen::VectorXd c;
};

// Generic attention pooling over a (T x d) sequence:
// e_t = tanh(h_t . w + b), alpha = softmax(e), c = sum_t alpha_t h_t.
AttentionOutput Attend(const Eigen::MatrixXd& h, const Eigen::VectorXd& w,
                       double b);

// Mean squared error over the seven channels.
double Mse(const ChannelVector& x, const ChannelVector& x_hat);
double Mse(const ChannelVector& x, const Eigen::VectorXd& x_hat);

class AttentionAutoencoder {
 public:
  // Glorot-uniform weights, zero biases. hidden_dim must be even and > 0.
  static AttentionAutoencoder Init(int hidden_dim, std::uint64_t seed,
                                   Layout layout = Layout::kChannelTokens);
  static AttentionAutoencoder Zeros(int hidden_dim,
                                    Layout layout = Layout::kChannelTokens);
  static AttentionAutoencoder FromParameters(int hidden_dim, Layout layout,
                                             Eigen::VectorXd parameters);

  static std::size_t ParameterCount(int hidden_dim,
                                    Layout layout = Layout::kChannelTokens);

  int hidden_dim() const { return hidden_dim_; }
  Layout layout() const { return layout_; }
  const ParameterLayout& parameter_layout() const { return offsets_; }
  std::size_t parameter_count() const { return offsets_.total; }
  Eigen::Index token_dim() const;

  const Eigen::VectorXd& parameters() const { return params_; }
  Eigen::VectorXd& mutable_parameters() { return params_; }

  DenseLayer enc1() const { return Dense(offsets_.enc1, Activation::kRelu); }
  AttentionParams attention() const;
  DenseLayer bottleneck() const {
    return Dense(offsets_.bottleneck, Activation::kRelu);
  }
  DenseLayer dec1() const { return Dense(offsets_.dec1, Activation::kRelu); }
  DenseLayer dec2() const { return Dense(offsets_.dec2, Activation::kRelu); }
  DenseLayer output() const {
    return Dense(offsets_.out, Activation::kSigmoid);
  }

  ForwardTrace Forward(const ChannelVector& scaled) const;
  ForwardTrace ForwardTokens(const TokenMatrix& tokens) const;

  ChannelVector Reconstruct(const ChannelVector& scaled) const;
  double ReconstructionError(const ChannelVector& scaled) const;

  // Adds scale * d(mse(target, x_hat))/d(params) into `gradient`.
  void AccumulateGradient(const ForwardTrace& trace,
                          const ChannelVector& target, double scale,
                          Eigen::VectorXd& gradient) const;
  Eigen::VectorXd Backward(const ForwardTrace& trace,
                           const ChannelVector& target) const;

  // Copy whose parameters are rounded to 32-bit floats (deployment model).
  AttentionAutoencoder RoundedToFloat() const;

  friend bool operator==(const AttentionAutoencoder& a,
                         const AttentionAutoencoder& b) {
    return a.hidden_dim_ == b.hidden_dim_ && a.layout_ == b.layout_ &&
           a.params_ == b.params_;
  }

 private:
  AttentionAutoencoder(int hidden_dim, Layout layout);

  DenseLayer Dense(const ParameterLayout::Dense& block,
                   Activation activation) const;

  int hidden_dim_;
  Layout layout_;
  ParameterLayout offsets_;
  Eigen::VectorXd params_;
};

double MeanReconstructionError(const AttentionAutoencoder& model,
                               std::span<const ChannelVector> data);

struct TrainConfig {
  int batch_size = 16;
  double learning_rate = 7e-4;
  int epochs = 10;
  int patience = 5;
  double val_fraction = 0.10;
  std::uint64_t seed = 42;
  // Minimum decrease of validation loss that counts as an improvement.
  double min_delta = 1e-6;
};

struct EpochLoss {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;

  friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

struct TrainResult {
  AttentionAutoencoder model;  // weights of the best validation epoch
  std::vector<EpochLoss> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

inline constexpr std::size_t kMinTrainingRows = 20;

// Seeded shuffle, tail split of ceil(val_fraction * N) validation rows, Adam
// (0.9, 0.999, 1e-8) on mean MSE, early stopping after `patience` epochs
// without a min_delta improvement. Throws DivergenceError on a non-finite
// loss.
TrainResult Train(AttentionAutoencoder model,
                  std::span<const ChannelVector> data,
                  const TrainConfig& config);

}  // namespace ocae
