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

#include "halspan/detector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include "halspan/error.hpp"

namespace halspan {
namespace {

constexpr char kWeightsMagic[4] = {'H', 'S', 'P', 'W'};
constexpr std::uint32_t kWeightsVersion = 1;

struct LossSum {
  double total = 0;
  std::size_t count = 0;
};

std::size_t head_size(std::size_t hidden) { return hidden * 2 + 2; }

LossSum accumulate_loss(const TokenClassifier& model,
                        std::span<const TokenLabelSequence> batch,
                        std::int32_t ignore_label, std::vector<double>* grads) {
  LossSum sum;
  for (const TokenLabelSequence& seq : batch) {
    for (std::int32_t l : seq.labels) sum.count += l != ignore_label;
  }
  if (sum.count == 0) return sum;

  const Encoder& encoder = model.encoder();
  const std::size_t h = encoder.hidden_size();
  const std::size_t n_enc = encoder.parameters().size();
  if (grads && grads->size() != n_enc + head_size(h)) {
    grads->assign(n_enc + head_size(h), 0.0);
  }
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 2,
                                       Eigen::RowMajor>>
      w(model.head().data(), static_cast<Eigen::Index>(h), 2);
  const Eigen::Map<const Eigen::RowVector2d> b(model.head().data() + 2 * h);
  const double inv_count = 1.0 / static_cast<double>(sum.count);

  for (const TokenLabelSequence& seq : batch) {
    const std::vector<std::int32_t> ids = seq.input_ids();
    const EncoderForward fwd = encoder.forward(ids);
    const Matrix logits = (fwd.hidden * w).rowwise() + b;
    Matrix d_logits = Matrix::Zero(logits.rows(), 2);
    bool any = false;
    for (Eigen::Index t = 0; t < logits.rows(); ++t) {
      const std::int32_t label = seq.labels[static_cast<std::size_t>(t)];
      if (label == ignore_label) continue;
      if (label != 0 && label != 1) {
        throw ContractViolation("sequence " + seq.id + ": label " +
                                std::to_string(label) + " is not 0 or 1");
      }
      any = true;
      const double peak = logits.row(t).maxCoeff();
      const double z0 = std::exp(logits(t, 0) - peak);
      const double z1 = std::exp(logits(t, 1) - peak);
      const double log_norm = peak + std::log(z0 + z1);
      sum.total += log_norm - logits(t, label);
      d_logits(t, 0) = (z0 / (z0 + z1) - (label == 0)) * inv_count;
      d_logits(t, 1) = (z1 / (z0 + z1) - (label == 1)) * inv_count;
    }
    if (!grads || !any) continue;
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>> gw(
        grads->data() + n_enc, static_cast<Eigen::Index>(h), 2);
    Eigen::Map<Eigen::RowVector2d> gb(grads->data() + n_enc + 2 * h);
    gw += fwd.hidden.transpose() * d_logits;
    gb += d_logits.colwise().sum();
    const Matrix d_hidden = d_logits * w.transpose();
    encoder.backward(ids, fwd, d_hidden,
                     std::span<double>(grads->data(), n_enc));
  }
  return sum;
}

void write_weights(const std::filesystem::path& path,
                   std::span<const double> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::uint64_t count = values.size();
  out.write(kWeightsMagic, sizeof(kWeightsMagic));
  out.write(reinterpret_cast<const char*>(&kWeightsVersion),
            sizeof(kWeightsVersion));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw IoError("write failed for " + path.string());
}

void read_weights(const std::filesystem::path& path, std::span<double> values) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t count = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || std::memcmp(magic, kWeightsMagic, sizeof(magic)) != 0 ||
      version != kWeightsVersion) {
    throw IoError(path.string() + " is not a weights file");
  }
  if (count != values.size()) {
    throw IoError(path.string() + " holds " + std::to_string(count) +
                  " weights, model expects " + std::to_string(values.size()));
  }
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw IoError(path.string() + " is truncated");
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractViolation("epochs must be >= 1");
  if (!(learning_rate > 0)) throw ContractViolation("learning_rate must be > 0");
  if (batch_size < 1) throw ContractViolation("batch_size must be >= 1");
  if (max_len < kPackingOverhead) {
    throw ContractViolation("max_len is below the packing overhead");
  }
}

Json to_json(const TrainConfig& c) {
  return Json{{"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"max_len", c.max_len},
              {"seed", c.seed},
              {"backbone_id", c.backbone_id},
              {"ignore_label", c.ignore_label},
              {"weight_decay", c.weight_decay},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon", c.epsilon}};
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_len = j.value("max_len", c.max_len);
  c.seed = j.value("seed", c.seed);
  c.backbone_id = j.value("backbone_id", c.backbone_id);
  c.ignore_label = j.value("ignore_label", c.ignore_label);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  return c;
}

TokenClassifier::TokenClassifier(std::unique_ptr<Encoder> encoder,
                                 std::uint64_t seed)
    : encoder_(std::move(encoder)),
      head_(head_size(encoder_->hidden_size()), 0.0) {
  std::mt19937_64 rng(seed ^ 0x5eedf00dull);
  std::normal_distribution<double> dist(0.0, 0.02);
  for (std::size_t i = 0; i < 2 * encoder_->hidden_size(); ++i) {
    head_[i] = dist(rng);
  }
}

std::vector<double> TokenClassifier::token_probabilities(
    std::span<const std::int32_t> ids) const {
  const std::size_t h = encoder_->hidden_size();
  const EncoderForward fwd = encoder_->forward(ids);
  std::vector<double> probs(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    double l0 = head_[2 * h];
    double l1 = head_[2 * h + 1];
    for (std::size_t i = 0; i < h; ++i) {
      const double x = fwd.hidden(static_cast<Eigen::Index>(t),
                                  static_cast<Eigen::Index>(i));
      l0 += x * head_[2 * i];
      l1 += x * head_[2 * i + 1];
    }
    probs[t] = 1.0 / (1.0 + std::exp(l0 - l1));
  }
  return probs;
}

double batch_loss(const TokenClassifier& model,
                  std::span<const TokenLabelSequence> batch,
                  std::int32_t ignore_label, std::vector<double>* grads) {
  const LossSum s = accumulate_loss(model, batch, ignore_label, grads);
  return s.count == 0 ? 0.0 : s.total / static_cast<double>(s.count);
}

TrainResult train(TokenClassifier& model,
                  std::span<const TokenLabelSequence> train_data,
                  const TrainConfig& config) {
  config.validate();
  if (train_data.empty()) throw ContractViolation("train: no training data");
  std::size_t supervised = 0;
  for (const TokenLabelSequence& seq : train_data) {
    if (seq.tokens.size() > config.max_len) {
      throw ContractViolation("train: sequence " + seq.id + " has " +
                              std::to_string(seq.tokens.size()) +
                              " tokens, max_len is " +
                              std::to_string(config.max_len));
    }
    for (std::int32_t l : seq.labels) supervised += l != config.ignore_label;
  }
  if (supervised == 0) {
    throw ContractViolation("train: every label is the ignore label");
  }

  std::span<double> enc = model.encoder().parameters();
  std::span<double> head = model.head();
  const std::size_t n = enc.size() + head.size();
  auto param = [&](std::size_t i) -> double& {
    return i < enc.size() ? enc[i] : head[i - enc.size()];
  };
  std::vector<double> m(n, 0.0), v(n, 0.0), grads(n, 0.0);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<TokenLabelSequence> batch;
  std::uint64_t step = 0;

  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossSum epoch_sum;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(train_data[order[k]]);
      }
      std::fill(grads.begin(), grads.end(), 0.0);
      const LossSum s =
          accumulate_loss(model, batch, config.ignore_label, &grads);
      if (s.count == 0) continue;
      epoch_sum.total += s.total;
      epoch_sum.count += s.count;

      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < n; ++i) {
        const double g = grads[i];
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
        double& p = param(i);
        p -= config.learning_rate * config.weight_decay * p;
        p -= config.learning_rate * (m[i] / c1) /
             (std::sqrt(v[i] / c2) + config.epsilon);
      }
    }
    result.epoch_loss.push_back(
        epoch_sum.count == 0
            ? 0.0
            : epoch_sum.total / static_cast<double>(epoch_sum.count));
  }
  return result;
}

std::vector<TokenPrediction> predict(const TokenClassifier& model,
                                     std::span<const TokenLabelSequence> seqs,
                                     std::size_t batch_size,
                                     std::size_t threads) {
  for (const TokenLabelSequence& seq : seqs) {
    if (seq.tokens.empty() || seq.answer_begin > seq.answer_end ||
        seq.answer_end > seq.tokens.size() ||
        seq.labels.size() != seq.tokens.size()) {
      throw ContractViolation("predict: sequence " + seq.id +
                              " has no valid answer range");
    }
  }
  std::vector<TokenPrediction> out(seqs.size());
  if (seqs.empty()) return out;
  const std::size_t chunk = std::max<std::size_t>(1, batch_size);
  const std::size_t chunks = (seqs.size() + chunk - 1) / chunk;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) {
      for (std::size_t i = c * chunk; i < std::min(seqs.size(), (c + 1) * chunk);
           ++i) {
        const TokenLabelSequence& seq = seqs[i];
        const std::vector<double> probs =
            model.token_probabilities(seq.input_ids());
        TokenPrediction& p = out[i];
        p.id = seq.id;
        p.probs.assign(probs.begin() + static_cast<std::ptrdiff_t>(seq.answer_begin),
                       probs.begin() + static_cast<std::ptrdiff_t>(seq.answer_end));
        const auto tokens = seq.answer_tokens();
        p.offsets.assign(tokens.begin(), tokens.end());
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, chunks);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  return out;
}

std::vector<PredictedSpan> detect_spans(const TokenPrediction& prediction,
                                        double threshold) {
  std::vector<std::int32_t> values(prediction.probs.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = prediction.probs[i] >= threshold ? 1 : 0;
  }
  std::vector<PredictedSpan> spans;
  for (const TokenRun& run : positive_runs(prediction.offsets, values)) {
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t i = run.first; i <= run.last; ++i) {
      if (prediction.offsets[i].is_special || values[i] != 1) continue;
      sum += prediction.probs[i];
      ++count;
    }
    spans.push_back(PredictedSpan{
        hallucinated_span(prediction.offsets[run.first].char_start,
                          prediction.offsets[run.last].char_end),
        sum / static_cast<double>(count)});
  }
  return spans;
}

Json to_json(const ModelManifest& m) {
  return Json{{"backbone_id", m.backbone_id},
              {"max_len", m.max_len},
              {"label_map", {{"0", "supported"}, {"1", "hallucinated"}}},
              {"threshold_default", m.threshold_default},
              {"ignore_label", m.ignore_label},
              {"version", m.version},
              {"tokenizer", m.tokenizer},
              {"seed", m.seed},
              {"encoder", m.encoder_config},
              {"train_config", m.train_config}};
}

ModelManifest manifest_from_json(const Json& j) {
  ModelManifest m;
  try {
    m.backbone_id = j.at("backbone_id").get<std::string>();
    m.max_len = j.at("max_len").get<std::size_t>();
    m.threshold_default = j.at("threshold_default").get<double>();
    m.ignore_label = j.at("ignore_label").get<std::int32_t>();
    m.version = j.at("version").get<std::string>();
    m.tokenizer = j.at("tokenizer").get<std::string>();
    m.seed = j.value("seed", std::uint64_t{0});
    m.encoder_config = j.at("encoder");
    m.train_config = j.value("train_config", Json::object());
  } catch (const Json::exception& e) {
    throw IoError(std::string("model manifest: ") + e.what());
  }
  return m;
}

void save_model(const TokenClassifier& model, const ModelManifest& manifest,
                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out << to_json(manifest).dump(2) << '\n';
  }
  write_weights(dir / "encoder.bin", model.encoder().parameters());
  write_weights(dir / "head.bin", model.head());
}

LoadedModel load_model(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("no manifest.json in " + dir.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw IoError(std::string("model manifest: ") + e.what());
  }
  LoadedModel loaded;
  loaded.manifest = manifest_from_json(j);
  if (loaded.manifest.version != kModelManifestVersion) {
    throw IoError("unsupported model manifest version " +
                  loaded.manifest.version);
  }
  loaded.model = std::make_unique<TokenClassifier>(
      make_encoder(loaded.manifest.encoder_config, loaded.manifest.seed));
  read_weights(dir / "encoder.bin", loaded.model->encoder().parameters());
  read_weights(dir / "head.bin", loaded.model->head());
  return loaded;
}

}  // namespace halspan
