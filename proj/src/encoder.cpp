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

#include "halspan/encoder.hpp"

#include <cmath>
#include <random>

#include "halspan/error.hpp"

namespace halspan {
namespace {

using ConstMap = Eigen::Map<const Matrix>;
using Map = Eigen::Map<Matrix>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;

struct LayerTape {
  Matrix input, q, k, v, attn, context, mid, ffn_act;
};

class ToyTape : public Tape {
 public:
  std::vector<LayerTape> layers;
};

Matrix positions(std::size_t length, std::size_t hidden) {
  Matrix p(length, hidden);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t i = 0; i < hidden; ++i) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) /
                                static_cast<double>(hidden));
      const double angle = static_cast<double>(t) * rate;
      p(t, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  }
  return p;
}

void softmax_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double peak = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - peak).exp();
    m.row(r) /= m.row(r).sum();
  }
}

}  // namespace

ToyTransformerEncoder::ToyTransformerEncoder(const ToyEncoderConfig& config,
                                             std::uint64_t seed)
    : config_(config) {
  if (config_.vocab_size == 0 || config_.hidden_size == 0 ||
      config_.ffn_size == 0 || config_.layers == 0) {
    throw ContractViolation("toy encoder sizes must be positive");
  }
  const std::size_t h = config_.hidden_size;
  const std::size_t f = config_.ffn_size;
  std::size_t cursor = 0;
  auto take = [&cursor](std::size_t n) {
    const std::size_t at = cursor;
    cursor += n;
    return at;
  };
  embedding_offset_ = take(config_.vocab_size * h);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    LayerOffsets o{};
    o.wq = take(h * h);
    o.wk = take(h * h);
    o.wv = take(h * h);
    o.wo = take(h * h);
    o.w1 = take(h * f);
    o.b1 = take(f);
    o.w2 = take(f * h);
    o.b2 = take(h);
    layers_.push_back(o);
  }
  params_.assign(cursor, 0.0);

  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t offset, std::size_t n, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (std::size_t i = 0; i < n; ++i) params_[offset + i] = dist(rng);
  };
  fill(embedding_offset_, config_.vocab_size * h, 0.5);
  const double hs = 1.0 / std::sqrt(static_cast<double>(h));
  const double fs = 1.0 / std::sqrt(static_cast<double>(f));
  for (const LayerOffsets& o : layers_) {
    fill(o.wq, h * h, hs);
    fill(o.wk, h * h, hs);
    fill(o.wv, h * h, hs);
    fill(o.wo, h * h, hs * 0.5);
    fill(o.w1, h * f, hs);
    fill(o.w2, f * h, fs * 0.5);
  }
}

Json ToyTransformerEncoder::config() const {
  return Json{{"backbone_id", kBackboneId},
              {"vocab_size", config_.vocab_size},
              {"hidden_size", config_.hidden_size},
              {"ffn_size", config_.ffn_size},
              {"layers", config_.layers}};
}

EncoderForward ToyTransformerEncoder::forward(
    std::span<const std::int32_t> ids) const {
  const auto h = static_cast<Eigen::Index>(config_.hidden_size);
  const auto f = static_cast<Eigen::Index>(config_.ffn_size);
  const auto len = static_cast<Eigen::Index>(ids.size());
  const ConstMap embedding(params_.data() + embedding_offset_,
                           static_cast<Eigen::Index>(config_.vocab_size), h);

  Matrix x = positions(ids.size(), config_.hidden_size);
  for (Eigen::Index t = 0; t < len; ++t) {
    const std::int32_t id = ids[static_cast<std::size_t>(t)];
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw ContractViolation("token id " + std::to_string(id) +
                              " outside encoder vocabulary of " +
                              std::to_string(config_.vocab_size));
    }
    x.row(t) += embedding.row(id);
  }

  auto tape = std::make_unique<ToyTape>();
  const double scale = 1.0 / std::sqrt(static_cast<double>(h));
  for (const LayerOffsets& o : layers_) {
    const ConstMap wq(params_.data() + o.wq, h, h);
    const ConstMap wk(params_.data() + o.wk, h, h);
    const ConstMap wv(params_.data() + o.wv, h, h);
    const ConstMap wo(params_.data() + o.wo, h, h);
    const ConstMap w1(params_.data() + o.w1, h, f);
    const ConstVecMap b1(params_.data() + o.b1, f);
    const ConstMap w2(params_.data() + o.w2, f, h);
    const ConstVecMap b2(params_.data() + o.b2, h);

    LayerTape lt;
    lt.input = x;
    lt.q = x * wq;
    lt.k = x * wk;
    lt.v = x * wv;
    lt.attn = (lt.q * lt.k.transpose()) * scale;
    softmax_rows(lt.attn);
    lt.context = lt.attn * lt.v;
    lt.mid = x + lt.context * wo;
    lt.ffn_act = ((lt.mid * w1).rowwise() + b1).array().tanh().matrix();
    Matrix ffn_out = (lt.ffn_act * w2).rowwise() + b2;
    x = lt.mid + ffn_out;
    tape->layers.push_back(std::move(lt));
  }
  return EncoderForward{std::move(x), std::move(tape)};
}

void ToyTransformerEncoder::backward(std::span<const std::int32_t> ids,
                                     const EncoderForward& fwd,
                                     const Matrix& d_hidden,
                                     std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    throw ContractViolation("gradient buffer size mismatch");
  }
  const auto& tape = dynamic_cast<const ToyTape&>(*fwd.tape);
  const auto h = static_cast<Eigen::Index>(config_.hidden_size);
  const auto f = static_cast<Eigen::Index>(config_.ffn_size);
  const double scale = 1.0 / std::sqrt(static_cast<double>(h));

  Matrix dx = d_hidden;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const LayerOffsets& o = layers_[l];
    const LayerTape& lt = tape.layers[l];
    const ConstMap wq(params_.data() + o.wq, h, h);
    const ConstMap wk(params_.data() + o.wk, h, h);
    const ConstMap wv(params_.data() + o.wv, h, h);
    const ConstMap wo(params_.data() + o.wo, h, h);
    const ConstMap w1(params_.data() + o.w1, h, f);
    const ConstMap w2(params_.data() + o.w2, f, h);
    Map gwq(grad.data() + o.wq, h, h);
    Map gwk(grad.data() + o.wk, h, h);
    Map gwv(grad.data() + o.wv, h, h);
    Map gwo(grad.data() + o.wo, h, h);
    Map gw1(grad.data() + o.w1, h, f);
    VecMap gb1(grad.data() + o.b1, f);
    Map gw2(grad.data() + o.w2, f, h);
    VecMap gb2(grad.data() + o.b2, h);

    // Feed-forward block: out = mid + tanh(mid W1 + b1) W2 + b2.
    gw2 += lt.ffn_act.transpose() * dx;
    gb2 += dx.colwise().sum();
    const Matrix d_pre =
        ((dx * w2.transpose()).array() * (1.0 - lt.ffn_act.array().square()))
            .matrix();
    gw1 += lt.mid.transpose() * d_pre;
    gb1 += d_pre.colwise().sum();
    Matrix d_mid = dx + d_pre * w1.transpose();

    // Attention block: mid = in + softmax(Q K^T * scale) V Wo.
    gwo += lt.context.transpose() * d_mid;
    const Matrix d_context = d_mid * wo.transpose();
    const Matrix d_attn = d_context * lt.v.transpose();
    const Matrix d_v = lt.attn.transpose() * d_context;
    const Eigen::VectorXd row_dot =
        (d_attn.array() * lt.attn.array()).rowwise().sum();
    const Matrix d_scores =
        (lt.attn.array() * (d_attn.colwise() - row_dot).array()).matrix() *
        scale;
    const Matrix d_q = d_scores * lt.k;
    const Matrix d_k = d_scores.transpose() * lt.q;
    gwq += lt.input.transpose() * d_q;
    gwk += lt.input.transpose() * d_k;
    gwv += lt.input.transpose() * d_v;
    dx = d_mid + d_q * wq.transpose() + d_k * wk.transpose() +
         d_v * wv.transpose();
  }

  Map g_embedding(grad.data() + embedding_offset_,
                  static_cast<Eigen::Index>(config_.vocab_size), h);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    g_embedding.row(ids[t]) += dx.row(static_cast<Eigen::Index>(t));
  }
}

std::unique_ptr<Encoder> make_encoder(const Json& config, std::uint64_t seed) {
  const std::string id = config.value("backbone_id", "");
  if (id != ToyTransformerEncoder::kBackboneId) {
    throw ContractViolation("unknown backbone \"" + id + "\"");
  }
  ToyEncoderConfig c;
  c.vocab_size = config.at("vocab_size").get<std::size_t>();
  c.hidden_size = config.at("hidden_size").get<std::size_t>();
  c.ffn_size = config.at("ffn_size").get<std::size_t>();
  c.layers = config.at("layers").get<std::size_t>();
  return std::make_unique<ToyTransformerEncoder>(c, seed);
}

}  // namespace halspan
