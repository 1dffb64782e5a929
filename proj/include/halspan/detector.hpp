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
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "halspan/align.hpp"
#include "halspan/encoder.hpp"

namespace halspan {

struct TrainConfig {
  std::size_t epochs = 6;
  double learning_rate = 1e-5;
  std::size_t batch_size = 4;
  std::size_t max_len = 4096;
  std::uint64_t seed = 0;
  std::string backbone_id = ToyTransformerEncoder::kBackboneId;
  std::int32_t ignore_label = kIgnoreLabel;
  // AdamW; no warmup, no schedule.
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

Json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);

// Encoder plus a single affine head from hidden size to two logits.
class TokenClassifier {
 public:
  // The head starts from small random weights drawn with `seed`.
  explicit TokenClassifier(std::unique_ptr<Encoder> encoder,
                           std::uint64_t seed = 0);

  const Encoder& encoder() const { return *encoder_; }
  Encoder& encoder() { return *encoder_; }
  std::span<double> head() { return head_; }
  std::span<const double> head() const { return head_; }

  // Positive-class probability for every token of `ids`.
  std::vector<double> token_probabilities(
      std::span<const std::int32_t> ids) const;

 private:
  std::unique_ptr<Encoder> encoder_;
  // Row-major [hidden][2] weights followed by 2 biases.
  std::vector<double> head_;
};

// Mean cross-entropy over the tokens of `batch` whose label is 0 or 1.
// Tokens labelled `ignore_label` never enter the sum. When `grads` is given,
// the gradient of that mean is added into it (encoder params, then head).
double batch_loss(const TokenClassifier& model,
                  std::span<const TokenLabelSequence> batch,
                  std::int32_t ignore_label = kIgnoreLabel,
                  std::vector<double>* grads = nullptr);

struct TrainResult {
  // Mean supervised-token loss for each epoch.
  std::vector<double> epoch_loss;
};

// Shuffles with config.seed each epoch and applies one AdamW step per batch.
// Throws ContractViolation on empty data, a sequence longer than max_len, or
// no supervised tokens at all.
TrainResult train(TokenClassifier& model,
                  std::span<const TokenLabelSequence> train_data,
                  const TrainConfig& config);

struct TokenPrediction {
  std::string id;
  // Positive-class probability per answer token.
  std::vector<double> probs;
  std::vector<OffsetToken> offsets;
};

// Sequences are independent, so `batch_size` only chunks the work and
// `threads` > 1 runs chunks concurrently; neither changes any probability.
std::vector<TokenPrediction> predict(const TokenClassifier& model,
                                     std::span<const TokenLabelSequence> seqs,
                                     std::size_t batch_size = 8,
                                     std::size_t threads = 1);

struct PredictedSpan {
  AnnotatedSpan span;
  double confidence = 0;  // mean probability over the run's tokens
};

inline constexpr double kDefaultThreshold = 0.5;

std::vector<PredictedSpan> detect_spans(const TokenPrediction& prediction,
                                        double threshold = kDefaultThreshold);

inline constexpr std::string_view kModelManifestVersion = "halspan-model/1";

struct ModelManifest {
  std::string backbone_id;
  std::size_t max_len = 4096;
  double threshold_default = kDefaultThreshold;
  std::int32_t ignore_label = kIgnoreLabel;
  std::string version = std::string(kModelManifestVersion);
  std::string tokenizer;
  std::uint64_t seed = 0;
  Json encoder_config = Json::object();
  Json train_config = Json::object();
};

Json to_json(const ModelManifest& m);
ModelManifest manifest_from_json(const Json& j);

// Writes manifest.json, encoder.bin and head.bin under `dir`.
void save_model(const TokenClassifier& model, const ModelManifest& manifest,
                const std::filesystem::path& dir);

struct LoadedModel {
  ModelManifest manifest;
  std::unique_ptr<TokenClassifier> model;
};

LoadedModel load_model(const std::filesystem::path& dir);

}  // namespace halspan
