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

#include "halspan/tokenizer.hpp"

#include <charconv>

#include "halspan/error.hpp"
#include "halspan/utf8.hpp"

namespace halspan {
namespace {

constexpr std::int32_t kFirstWordId = 3;

bool is_word_char(char32_t c) {
  if (c < 0x80) {
    return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') ||
           (c >= U'0' && c <= U'9');
  }
  // General punctuation and CJK symbol blocks split like ASCII punctuation.
  if (c >= 0x2010 && c <= 0x205E) return false;
  if (c >= 0x3000 && c <= 0x303F) return false;
  if (c == 0xA0 || c == 0xAB || c == 0xBB || c == 0xBF || c == 0xA1) {
    return false;
  }
  return !utf8::is_space(c);
}

std::uint64_t fnv1a(std::u32string_view piece, bool continuation) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint32_t v) {
    for (int k = 0; k < 4; ++k) {
      h ^= (v >> (8 * k)) & 0xFF;
      h *= 1099511628211ull;
    }
  };
  if (continuation) mix(0x23232323u);
  for (char32_t c : piece) {
    mix(c < 0x80 && c >= U'A' && c <= U'Z' ? c - U'A' + U'a' : c);
  }
  return h;
}

}  // namespace

WordHashTokenizer::WordHashTokenizer(std::size_t vocab_size,
                                     std::size_t max_piece)
    : vocab_size_(vocab_size), max_piece_(max_piece) {
  if (vocab_size_ <= kFirstWordId) {
    throw ContractViolation("word-hash tokenizer needs vocab_size > 3");
  }
  if (max_piece_ == 0) throw ContractViolation("max_piece must be >= 1");
}

std::string WordHashTokenizer::name() const {
  return "word-hash:" + std::to_string(vocab_size_) + ":" +
         std::to_string(max_piece_);
}

std::vector<Token> WordHashTokenizer::encode(std::string_view text) const {
  const std::u32string cps = utf8::decode(text);
  const std::uint64_t buckets = vocab_size_ - kFirstWordId;
  std::vector<Token> out;
  auto emit = [&](std::size_t start, std::size_t end, bool continuation) {
    const auto h = fnv1a(std::u32string_view(cps).substr(start, end - start),
                         continuation);
    out.push_back(Token{static_cast<std::int32_t>(kFirstWordId + h % buckets),
                        start, end});
  };
  std::size_t i = 0;
  while (i < cps.size()) {
    if (utf8::is_space(cps[i])) {
      ++i;
      continue;
    }
    if (!is_word_char(cps[i])) {
      emit(i, i + 1, false);
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < cps.size() && is_word_char(cps[end])) ++end;
    for (std::size_t p = i; p < end; p += max_piece_) {
      emit(p, std::min(end, p + max_piece_), p != i);
    }
    i = end;
  }
  return out;
}

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view spec) {
  constexpr std::string_view kPrefix = "word-hash:";
  if (spec.substr(0, kPrefix.size()) != kPrefix) {
    throw ContractViolation("unknown tokenizer \"" + std::string(spec) + "\"");
  }
  std::string_view rest = spec.substr(kPrefix.size());
  auto parse = [&](std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ContractViolation("bad tokenizer spec \"" + std::string(spec) + "\"");
    }
    return v;
  };
  const std::size_t colon = rest.find(':');
  if (colon == std::string_view::npos) {
    return std::make_unique<WordHashTokenizer>(parse(rest));
  }
  return std::make_unique<WordHashTokenizer>(parse(rest.substr(0, colon)),
                                             parse(rest.substr(colon + 1)));
}

}  // namespace halspan
