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
#include <span>
#include <string>
#include <vector>

#include "halspan/corpus.hpp"
#include "halspan/tokenizer.hpp"

namespace halspan {

inline constexpr std::int32_t kIgnoreLabel = -100;
inline constexpr std::int32_t kSupportedLabel = 0;
inline constexpr std::int32_t kHallucinatedTokenLabel = 1;

enum class Segment { kSpecial, kPrompt, kAnswer };

// Offsets are code points into the token's own segment text.
struct OffsetToken {
  std::size_t index = 0;
  std::int32_t id = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  bool is_special = false;
  Segment segment = Segment::kSpecial;

  friend bool operator==(const OffsetToken&, const OffsetToken&) = default;
};

// Packed as [CLS] prompt [SEP] answer [SEP]. Tokens in
// [answer_begin, answer_end) are the answer's content tokens; everything else
// is labelled kIgnoreLabel.
struct TokenLabelSequence {
  std::string id;
  std::vector<OffsetToken> tokens;
  std::vector<std::int32_t> labels;
  std::size_t answer_begin = 0;
  std::size_t answer_end = 0;
  bool truncated = false;

  std::size_t answer_size() const { return answer_end - answer_begin; }
  std::vector<std::int32_t> input_ids() const;
  std::span<const OffsetToken> answer_tokens() const {
    return std::span(tokens).subspan(answer_begin, answer_size());
  }
  std::span<const std::int32_t> answer_labels() const {
    return std::span(labels).subspan(answer_begin, answer_size());
  }

  friend bool operator==(const TokenLabelSequence&,
                         const TokenLabelSequence&) = default;
};

// 1 for every token sharing at least one character with a span, else 0.
// `spans` must be normalized; special tokens get kIgnoreLabel.
std::vector<std::int32_t> overlap_labels(std::span<const AnnotatedSpan> spans,
                                         std::span<const OffsetToken> tokens);

// Normalized spans of `record` with whitespace-only spans removed (logged).
std::vector<AnnotatedSpan> labelable_spans(const RagRecord& record);

// Special tokens added by the packing.
inline constexpr std::size_t kPackingOverhead = 3;

// An answer token is labelled 1 iff it shares at least one character with a
// gold span. When the packed input exceeds `max_len`, prompt tokens are
// dropped from the end; the answer is never cut. Whitespace-only spans are
// ignored with a warning. Throws UnencodableRecord if the answer alone does
// not fit.
TokenLabelSequence build_labels(const RagRecord& record,
                                const Tokenizer& tokenizer, std::size_t max_len);

// Inclusive answer-token index range of one run of positive values.
struct TokenRun {
  std::size_t first = 0;
  std::size_t last = 0;
};

// Maximal runs of 1s in `values`. Special tokens and kIgnoreLabel values
// inside a run neither start nor break it.
std::vector<TokenRun> positive_runs(std::span<const OffsetToken> tokens,
                                    std::span<const std::int32_t> values);

// Maximal runs of 1s over answer tokens become [start of first, end of last).
// `values` is parallel to the answer tokens.
std::vector<AnnotatedSpan> labels_to_spans(const TokenLabelSequence& seq,
                                           std::span<const std::int32_t> values);

struct LengthStats {
  double mean = 0;
  double median = 0;
  std::size_t min = 0;
  std::size_t max = 0;
};

// Packed token lengths before truncation. Throws ContractViolation on an
// empty corpus.
LengthStats length_stats(std::span<const RagRecord> corpus,
                         const Tokenizer& tokenizer);

// Label file line: {"id", "input_ids", "labels"}.
Json label_line(const TokenLabelSequence& seq);

// Rebuilds a sequence from a label file line. Offsets are not stored in the
// file, so tokens carry ids only; the answer range is the supervised region.
TokenLabelSequence sequence_from_label_line(const Json& j, std::size_t line);

std::vector<TokenLabelSequence> load_label_file(
    const std::filesystem::path& path);

}  // namespace halspan
