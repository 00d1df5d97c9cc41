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

#include "ocae/autoencoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "ocae/error.h"

namespace ocae {
namespace {

ParameterLayout::Dense Block(std::size_t& cursor, Eigen::Index in,
                             Eigen::Index out) {
  ParameterLayout::Dense block;
  block.in = in;
  block.out = out;
  block.weights = cursor;
  cursor += static_cast<std::size_t>(in * out);
  block.bias = cursor;
  cursor += static_cast<std::size_t>(out);
  return block;
}

Eigen::VectorXd Relu(const Eigen::VectorXd& x) { return x.cwiseMax(0.0); }

Eigen::VectorXd Sigmoid(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::VectorXd Apply(const DenseLayer& layer, const Eigen::VectorXd& x,
                      Eigen::VectorXd* pre) {
  Eigen::VectorXd y = layer.weights.transpose() * x + layer.bias;
  if (pre != nullptr) *pre = y;
  switch (layer.activation) {
    case Activation::kRelu:
      return Relu(y);
    case Activation::kSigmoid:
      return Sigmoid(y);
    case Activation::kLinear:
      return y;
  }
  return y;
}

void CheckHiddenDim(int hidden_dim) {
  if (hidden_dim <= 0 || hidden_dim % 2 != 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "hidden_dim must be an even positive integer, got " +
                    std::to_string(hidden_dim));
  }
}

// Backprop through y = relu(W^T x + b): accumulates dW, db and returns dx.
Eigen::VectorXd DenseBackward(const ParameterLayout::Dense& block,
                              const ConstMatrixView& weights,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& d_pre, double scale,
                              Eigen::VectorXd& gradient) {
  MatrixView dw(gradient.data() + block.weights, block.in, block.out);
  VectorView db(gradient.data() + block.bias, block.out);
  dw.noalias() += scale * (x * d_pre.transpose());
  db += scale * d_pre;
  return weights * d_pre;
}

Eigen::VectorXd ReluMask(const Eigen::VectorXd& pre) {
  return pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

}  // namespace

ParameterLayout::ParameterLayout(int hidden_dim, Layout layout) {
  const Eigen::Index d = hidden_dim;
  const Eigen::Index half = hidden_dim / 2;
  const Eigen::Index token_dim =
      layout == Layout::kChannelTokens ? 1 : static_cast<Eigen::Index>(kNumChannels);
  std::size_t cursor = 0;
  enc1 = Block(cursor, token_dim, d);
  attn_w = cursor;
  cursor += static_cast<std::size_t>(d);
  attn_b = cursor;
  cursor += 1;
  bottleneck = Block(cursor, d, half);
  dec1 = Block(cursor, half, half);
  dec2 = Block(cursor, half, d);
  out = Block(cursor, d, static_cast<Eigen::Index>(kNumChannels));
  total = cursor;
}

Eigen::VectorXd Softmax(const Eigen::VectorXd& logits) {
  const double shift = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - shift).exp().matrix();
  return p / p.sum();
}

AttentionOutput Attend(const Eigen::MatrixXd& h, const Eigen::VectorXd& w,
                       double b) {
  AttentionOutput out;
  out.e = ((h * w).array() + b).tanh().matrix();
  out.alpha = Softmax(out.e);
  out.c = h.transpose() * out.alpha;
  return out;
}

double Mse(const ChannelVector& x, const ChannelVector& x_hat) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    const double diff = x[i] - x_hat[i];
    sum += diff * diff;
  }
  return sum / static_cast<double>(kNumChannels);
}

double Mse(const ChannelVector& x, const Eigen::VectorXd& x_hat) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    const double diff = x[i] - x_hat(static_cast<Eigen::Index>(i));
    sum += diff * diff;
  }
  return sum / static_cast<double>(kNumChannels);
}

AttentionAutoencoder::AttentionAutoencoder(int hidden_dim, Layout layout)
    : hidden_dim_(hidden_dim),
      layout_(layout),
      offsets_(hidden_dim, layout),
      params_(Eigen::VectorXd::Zero(
          static_cast<Eigen::Index>(offsets_.total))) {}

std::size_t AttentionAutoencoder::ParameterCount(int hidden_dim,
                                                 Layout layout) {
  CheckHiddenDim(hidden_dim);
  return ParameterLayout(hidden_dim, layout).total;
}

AttentionAutoencoder AttentionAutoencoder::Zeros(int hidden_dim,
                                                 Layout layout) {
  CheckHiddenDim(hidden_dim);
  return AttentionAutoencoder(hidden_dim, layout);
}

AttentionAutoencoder AttentionAutoencoder::Init(int hidden_dim,
                                                std::uint64_t seed,
                                                Layout layout) {
  AttentionAutoencoder model = Zeros(hidden_dim, layout);
  std::mt19937_64 rng(seed);
  auto glorot = [&](std::size_t offset, Eigen::Index fan_in,
                    Eigen::Index fan_out) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index k = 0; k < fan_in * fan_out; ++k) {
      model.params_(static_cast<Eigen::Index>(offset) + k) = dist(rng);
    }
  };
  const ParameterLayout& o = model.offsets_;
  glorot(o.enc1.weights, o.enc1.in, o.enc1.out);
  glorot(o.attn_w, hidden_dim, 1);
  for (const auto* block : {&o.bottleneck, &o.dec1, &o.dec2, &o.out}) {
    glorot(block->weights, block->in, block->out);
  }
  return model;
}

AttentionAutoencoder AttentionAutoencoder::FromParameters(
    int hidden_dim, Layout layout, Eigen::VectorXd parameters) {
  AttentionAutoencoder model = Zeros(hidden_dim, layout);
  if (parameters.size() != model.params_.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "parameter vector has " + std::to_string(parameters.size()) +
                    " entries, expected " +
                    std::to_string(model.params_.size()));
  }
  if (!parameters.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "non-finite model parameter");
  }
  model.params_ = std::move(parameters);
  return model;
}

Eigen::Index AttentionAutoencoder::token_dim() const {
  return offsets_.enc1.in;
}

DenseLayer AttentionAutoencoder::Dense(const ParameterLayout::Dense& block,
                                       Activation activation) const {
  return DenseLayer{
      ConstMatrixView(params_.data() + block.weights, block.in, block.out),
      ConstVectorView(params_.data() + block.bias, block.out), activation};
}

AttentionParams AttentionAutoencoder::attention() const {
  return AttentionParams{
      ConstVectorView(params_.data() + offsets_.attn_w, hidden_dim_),
      params_(static_cast<Eigen::Index>(offsets_.attn_b))};
}

ForwardTrace AttentionAutoencoder::Forward(const ChannelVector& scaled) const {
  return ForwardTokens(ToModelInput(scaled, layout_));
}

ForwardTrace AttentionAutoencoder::ForwardTokens(
    const TokenMatrix& tokens) const {
  if (tokens.cols() != token_dim() ||
      static_cast<std::size_t>(tokens.size()) != kNumChannels) {
    throw Error(ErrorKind::kInvalidArgument,
                "token matrix shape does not match the model layout");
  }
  if (!tokens.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "non-finite model input");
  }
  ForwardTrace t;
  t.tokens = tokens;

  const DenseLayer e1 = enc1();
  t.h_pre = tokens * e1.weights;
  t.h_pre.rowwise() += e1.bias.transpose();
  t.h = t.h_pre.cwiseMax(0.0);

  const AttentionParams attn = attention();
  AttentionOutput pooled = Attend(t.h, attn.w, attn.b);
  t.e = std::move(pooled.e);
  t.alpha = std::move(pooled.alpha);
  t.c = std::move(pooled.c);

  t.z = Apply(bottleneck(), t.c, &t.z_pre);
  t.dec1 = Apply(dec1(), t.z, &t.dec1_pre);
  t.dec2 = Apply(dec2(), t.dec1, &t.dec2_pre);
  t.x_hat = Apply(output(), t.dec2, nullptr);
  return t;
}

ChannelVector AttentionAutoencoder::Reconstruct(
    const ChannelVector& scaled) const {
  const ForwardTrace t = Forward(scaled);
  ChannelVector out{};
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    out[i] = t.x_hat(static_cast<Eigen::Index>(i));
  }
  return out;
}

double AttentionAutoencoder::ReconstructionError(
    const ChannelVector& scaled) const {
  return Mse(scaled, Forward(scaled).x_hat);
}

void AttentionAutoencoder::AccumulateGradient(const ForwardTrace& t,
                                              const ChannelVector& target,
                                              double scale,
                                              Eigen::VectorXd& gradient) const {
  const ParameterLayout& o = offsets_;
  constexpr double kInvN = 1.0 / static_cast<double>(kNumChannels);

  Eigen::VectorXd d_xhat(static_cast<Eigen::Index>(kNumChannels));
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    d_xhat(k) = 2.0 * kInvN * (t.x_hat(k) - target[i]);
  }
  const Eigen::VectorXd d_out_pre =
      d_xhat.cwiseProduct(t.x_hat.cwiseProduct(
          (1.0 - t.x_hat.array()).matrix()));
  const Eigen::VectorXd d_dec2 = DenseBackward(
      o.out, output().weights, t.dec2, d_out_pre, scale, gradient);

  const Eigen::VectorXd d_dec2_pre = d_dec2.cwiseProduct(ReluMask(t.dec2_pre));
  const Eigen::VectorXd d_dec1 = DenseBackward(
      o.dec2, dec2().weights, t.dec1, d_dec2_pre, scale, gradient);

  const Eigen::VectorXd d_dec1_pre = d_dec1.cwiseProduct(ReluMask(t.dec1_pre));
  const Eigen::VectorXd d_z = DenseBackward(o.dec1, dec1().weights, t.z,
                                            d_dec1_pre, scale, gradient);

  const Eigen::VectorXd d_z_pre = d_z.cwiseProduct(ReluMask(t.z_pre));
  const Eigen::VectorXd d_c = DenseBackward(
      o.bottleneck, bottleneck().weights, t.c, d_z_pre, scale, gradient);

  // c = sum_t alpha_t h_t
  Eigen::MatrixXd d_h = t.alpha * d_c.transpose();
  const Eigen::VectorXd d_alpha = t.h * d_c;
  // softmax Jacobian-vector product
  const double weighted = t.alpha.dot(d_alpha);
  const Eigen::VectorXd d_e =
      t.alpha.cwiseProduct((d_alpha.array() - weighted).matrix());
  // e = tanh(s), s = h w + b
  const Eigen::VectorXd d_s =
      d_e.cwiseProduct((1.0 - t.e.array().square()).matrix());
  const AttentionParams attn = attention();
  VectorView d_w(gradient.data() + o.attn_w, hidden_dim_);
  d_w += scale * (t.h.transpose() * d_s);
  gradient(static_cast<Eigen::Index>(o.attn_b)) += scale * d_s.sum();
  d_h += d_s * attn.w.transpose();

  // h = relu(X W1 + b1), W1 shared across tokens
  const Eigen::MatrixXd d_h_pre = d_h.cwiseProduct(
      t.h_pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
  MatrixView d_w1(gradient.data() + o.enc1.weights, o.enc1.in, o.enc1.out);
  VectorView d_b1(gradient.data() + o.enc1.bias, o.enc1.out);
  d_w1.noalias() += scale * (t.tokens.transpose() * d_h_pre);
  d_b1 += scale * d_h_pre.colwise().sum().transpose();
}

Eigen::VectorXd AttentionAutoencoder::Backward(
    const ForwardTrace& trace, const ChannelVector& target) const {
  Eigen::VectorXd gradient = Eigen::VectorXd::Zero(params_.size());
  AccumulateGradient(trace, target, 1.0, gradient);
  return gradient;
}

AttentionAutoencoder AttentionAutoencoder::RoundedToFloat() const {
  AttentionAutoencoder copy = *this;
  copy.params_ = params_.cast<float>().cast<double>();
  return copy;
}

double MeanReconstructionError(const AttentionAutoencoder& model,
                               std::span<const ChannelVector> data) {
  if (data.empty()) return 0.0;
  double sum = 0.0;
  for (const ChannelVector& x : data) sum += model.ReconstructionError(x);
  return sum / static_cast<double>(data.size());
}

namespace {

class Adam {
 public:
  Adam(Eigen::Index size, double learning_rate)
      : learning_rate_(learning_rate),
        m_(Eigen::VectorXd::Zero(size)),
        v_(Eigen::VectorXd::Zero(size)) {}

  void Step(Eigen::VectorXd& params, const Eigen::VectorXd& gradient) {
    ++t_;
    m_ = kBeta1 * m_ + (1.0 - kBeta1) * gradient;
    v_ = kBeta2 * v_ + (1.0 - kBeta2) * gradient.cwiseProduct(gradient);
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    params.array() -= learning_rate_ * (m_.array() / c1) /
                      ((v_.array() / c2).sqrt() + kEpsilon);
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  double learning_rate_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  int t_ = 0;
};

void ValidateConfig(const TrainConfig& config) {
  if (config.batch_size <= 0 || config.epochs <= 0 ||
      !(config.learning_rate > 0.0) || config.patience < 0 ||
      !(config.val_fraction > 0.0 && config.val_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid training configuration");
  }
}

}  // namespace

TrainResult Train(AttentionAutoencoder model,
                  std::span<const ChannelVector> data,
                  const TrainConfig& config) {
  ValidateConfig(config);
  if (data.size() < kMinTrainingRows) {
    throw Error(ErrorKind::kInsufficientData,
                "training needs at least " + std::to_string(kMinTrainingRows) +
                    " rows, got " + std::to_string(data.size()));
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_val = static_cast<std::size_t>(
      std::ceil(config.val_fraction * static_cast<double>(data.size())));
  const std::size_t n_train = data.size() - n_val;
  if (n_val == 0 || n_train == 0) {
    throw Error(ErrorKind::kInsufficientData,
                "validation split leaves an empty partition");
  }
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
  std::vector<ChannelVector> val_set;
  val_set.reserve(n_val);
  for (std::size_t k = n_train; k < order.size(); ++k) {
    val_set.push_back(data[order[k]]);
  }

  Eigen::VectorXd& params = model.mutable_parameters();
  Adam adam(params.size(), config.learning_rate);
  Eigen::VectorXd gradient(params.size());

  TrainResult result{model, {}, 0, 0.0, false};
  double best_val = std::numeric_limits<double>::infinity();
  int stagnant = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n_train;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(
          n_train, start + static_cast<std::size_t>(config.batch_size));
      const double scale = 1.0 / static_cast<double>(end - start);
      gradient.setZero();
      for (std::size_t k = start; k < end; ++k) {
        const ChannelVector& x = data[train_idx[k]];
        const ForwardTrace trace = model.Forward(x);
        loss_sum += Mse(x, trace.x_hat);
        model.AccumulateGradient(trace, x, scale, gradient);
      }
      adam.Step(params, gradient);
    }
    const double train_loss = loss_sum / static_cast<double>(n_train);
    const double val_loss = MeanReconstructionError(model, val_set);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss) ||
        !params.allFinite()) {
      throw DivergenceError(epoch, "training diverged at epoch " +
                                       std::to_string(epoch));
    }
    result.history.push_back({epoch, train_loss, val_loss});

    if (val_loss < best_val - config.min_delta) {
      best_val = val_loss;
      result.model = model;
      result.best_epoch = epoch;
      stagnant = 0;
    } else if (++stagnant >= config.patience) {
      result.stopped_early = epoch < config.epochs;
      break;
    }
  }
  result.best_val_loss = best_val;
  return result;
}

}  // namespace ocae
