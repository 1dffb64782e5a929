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
#include <string>
#include <string_view>
#include <vector>

namespace halspan {

// One token with its half-open code point interval in the encoded text.
struct Token {
  std::int32_t id = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

// Offset-producing tokenizer. `name()` is recorded in label and model
// manifests, so two tokenizers with the same name must encode identically.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::string name() const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::vector<Token> encode(std::string_view text) const = 0;

  virtual std::int32_t pad_id() const { return 0; }
  virtual std::int32_t cls_id() const { return 1; }
  virtual std::int32_t sep_id() const { return 2; }
};

// Splits text into letter/digit runs and single punctuation marks, cuts runs
// longer than `max_piece` code points into pieces, and hashes each piece into
// a fixed vocabulary. Ids 0..2 are reserved for PAD, CLS and SEP.
class WordHashTokenizer : public Tokenizer {
 public:
  static constexpr std::size_t kDefaultMaxPiece = 6;

  explicit WordHashTokenizer(std::size_t vocab_size,
                             std::size_t max_piece = kDefaultMaxPiece);

  std::string name() const override;
  std::size_t vocab_size() const override { return vocab_size_; }
  std::vector<Token> encode(std::string_view text) const override;

 private:
  std::size_t vocab_size_;
  std::size_t max_piece_;
};

// Parses "word-hash:<vocab>" or "word-hash:<vocab>:<max_piece>".
std::unique_ptr<Tokenizer> make_tokenizer(std::string_view spec);

}  // namespace halspan
