// Copyright 2026 The halspan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "halspan/corpus.hpp"

namespace halspan {

using Matrix = Eigen::MatrixXd;

// Whatever an encoder keeps from forward() to run backward().
class Tape {
 public:
  virtual ~Tape() = default;
};

struct EncoderForward {
  Matrix hidden;  // one row per input token
  std::unique_ptr<Tape> tape;
};

// A token encoder with all trainable weights in one flat buffer, so optimizers
// and checkpoints need not know the architecture.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::string backbone_id() const = 0;
  virtual std::size_t hidden_size() const = 0;
  virtual std::size_t vocab_size() const = 0;
  // Architecture hyperparameters, enough for make_encoder() to rebuild it.
  virtual Json config() const = 0;

  virtual std::span<double> parameters() = 0;
  virtual std::span<const double> parameters() const = 0;

  virtual EncoderForward forward(std::span<const std::int32_t> ids) const = 0;
  // Adds d(loss)/d(parameters) into `grad` given d(loss)/d(hidden).
  virtual void backward(std::span<const std::int32_t> ids,
                        const EncoderForward& forward, const Matrix& d_hidden,
                        std::span<double> grad) const = 0;
};

struct ToyEncoderConfig {
  std::size_t vocab_size = 4096;
  std::size_t hidden_size = 32;
  std::size_t ffn_size = 64;
  std::size_t layers = 2;
};

// Pre-residual transformer: token embedding plus sinusoidal positions, then
// per layer single-head self-attention and a tanh feed-forward block, each
// added back to its input. No normalization layers.
class ToyTransformerEncoder : public Encoder {
 public:
  static constexpr const char* kBackboneId = "toy-transformer";

  ToyTransformerEncoder(const ToyEncoderConfig& config, std::uint64_t seed);

  std::string backbone_id() const override { return kBackboneId; }
  std::size_t hidden_size() const override { return config_.hidden_size; }
  std::size_t vocab_size() const override { return config_.vocab_size; }
  Json config() const override;

  std::span<double> parameters() override { return params_; }
  std::span<const double> parameters() const override { return params_; }

  EncoderForward forward(std::span<const std::int32_t> ids) const override;
  void backward(std::span<const std::int32_t> ids,
                const EncoderForward& forward, const Matrix& d_hidden,
                std::span<double> grad) const override;

 private:
  struct LayerOffsets {
    std::size_t wq, wk, wv, wo, w1, b1, w2, b2;
  };

  ToyEncoderConfig config_;
  std::size_t embedding_offset_ = 0;
  std::vector<LayerOffsets> layers_;
  std::vector<double> params_;
};

// Rebuilds an encoder from config(); weights are random until overwritten.
std::unique_ptr<Encoder> make_encoder(const Json& config, std::uint64_t seed);

}  // namespace halspan
