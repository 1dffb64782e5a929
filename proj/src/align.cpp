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

#include "halspan/align.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "halspan/error.hpp"
#include "halspan/utf8.hpp"

namespace halspan {

std::vector<AnnotatedSpan> labelable_spans(const RagRecord& record) {
  const std::u32string answer = utf8::decode(record.answer);
  for (const AnnotatedSpan& s : record.labels) {
    if (s.start >= s.end || s.end > answer.size()) {
      throw ContractViolation("record " + record.id + ": span out of bounds");
    }
  }
  std::vector<AnnotatedSpan> spans = normalize_spans(record.labels);
  std::erase_if(spans, [&](const AnnotatedSpan& s) {
    const bool blank = std::all_of(answer.begin() + s.start,
                                   answer.begin() + s.end, utf8::is_space);
    if (blank) {
      spdlog::warn("record {}: dropping whitespace-only span ({}, {})",
                   record.id, s.start, s.end);
    }
    return blank;
  });
  return spans;
}

std::vector<std::int32_t> overlap_labels(std::span<const AnnotatedSpan> spans,
                                         std::span<const OffsetToken> tokens) {
  std::vector<std::int32_t> labels;
  labels.reserve(tokens.size());
  // Spans are sorted and tokens non-decreasing, so one sweep finds overlaps.
  std::size_t first_span = 0;
  for (const OffsetToken& t : tokens) {
    if (t.is_special) {
      labels.push_back(kIgnoreLabel);
      continue;
    }
    while (first_span < spans.size() && spans[first_span].end <= t.char_start) {
      ++first_span;
    }
    const bool hit = first_span < spans.size() &&
                     spans[first_span].start < t.char_end &&
                     t.char_start < spans[first_span].end;
    labels.push_back(hit ? kHallucinatedTokenLabel : kSupportedLabel);
  }
  return labels;
}

std::vector<std::int32_t> TokenLabelSequence::input_ids() const {
  std::vector<std::int32_t> ids;
  ids.reserve(tokens.size());
  for (const OffsetToken& t : tokens) ids.push_back(t.id);
  return ids;
}

TokenLabelSequence build_labels(const RagRecord& record,
                                const Tokenizer& tokenizer,
                                std::size_t max_len) {
  const std::vector<AnnotatedSpan> spans = labelable_spans(record);
  const std::vector<Token> prompt_tokens = tokenizer.encode(record.prompt);
  const std::vector<Token> answer_tokens = tokenizer.encode(record.answer);

  if (answer_tokens.size() + kPackingOverhead > max_len) {
    throw UnencodableRecord(
        record.id, "record " + record.id + ": answer needs " +
                       std::to_string(answer_tokens.size() + kPackingOverhead) +
                       " tokens, max_len is " + std::to_string(max_len));
  }
  const std::size_t prompt_budget =
      max_len - answer_tokens.size() - kPackingOverhead;
  const std::size_t prompt_kept = std::min(prompt_budget, prompt_tokens.size());

  TokenLabelSequence seq;
  seq.id = record.id;
  seq.truncated = prompt_kept < prompt_tokens.size();
  const std::size_t total = prompt_kept + answer_tokens.size() + kPackingOverhead;
  seq.tokens.reserve(total);
  seq.labels.reserve(total);

  auto push_special = [&](std::int32_t id) {
    seq.tokens.push_back(
        OffsetToken{seq.tokens.size(), id, 0, 0, true, Segment::kSpecial});
    seq.labels.push_back(kIgnoreLabel);
  };

  push_special(tokenizer.cls_id());
  for (std::size_t i = 0; i < prompt_kept; ++i) {
    const Token& t = prompt_tokens[i];
    seq.tokens.push_back(OffsetToken{seq.tokens.size(), t.id, t.char_start,
                                     t.char_end, false, Segment::kPrompt});
    seq.labels.push_back(kIgnoreLabel);
  }
  push_special(tokenizer.sep_id());

  seq.answer_begin = seq.tokens.size();
  for (const Token& t : answer_tokens) {
    seq.tokens.push_back(OffsetToken{seq.tokens.size(), t.id, t.char_start,
                                     t.char_end, false, Segment::kAnswer});
  }
  const std::vector<std::int32_t> answer_labels =
      overlap_labels(spans, std::span(seq.tokens).subspan(seq.answer_begin));
  seq.labels.insert(seq.labels.end(), answer_labels.begin(),
                    answer_labels.end());
  seq.answer_end = seq.tokens.size();
  push_special(tokenizer.sep_id());
  return seq;
}

std::vector<TokenRun> positive_runs(std::span<const OffsetToken> tokens,
                                    std::span<const std::int32_t> values) {
  if (values.size() != tokens.size()) {
    throw ContractViolation("positive_runs: " + std::to_string(values.size()) +
                            " values for " + std::to_string(tokens.size()) +
                            " answer tokens");
  }
  std::vector<TokenRun> runs;
  bool in_run = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].is_special || values[i] == kIgnoreLabel) continue;
    if (values[i] == kHallucinatedTokenLabel) {
      if (in_run) {
        runs.back().last = i;
      } else {
        runs.push_back(TokenRun{i, i});
        in_run = true;
      }
    } else {
      in_run = false;
    }
  }
  return runs;
}

std::vector<AnnotatedSpan> labels_to_spans(
    const TokenLabelSequence& seq, std::span<const std::int32_t> values) {
  const auto tokens = seq.answer_tokens();
  std::vector<AnnotatedSpan> spans;
  for (const TokenRun& run : positive_runs(tokens, values)) {
    spans.push_back(hallucinated_span(tokens[run.first].char_start,
                                      tokens[run.last].char_end));
  }
  return spans;
}

LengthStats length_stats(std::span<const RagRecord> corpus,
                         const Tokenizer& tokenizer) {
  if (corpus.empty()) throw ContractViolation("length_stats: empty corpus");
  std::vector<std::size_t> lengths;
  lengths.reserve(corpus.size());
  for (const RagRecord& r : corpus) {
    lengths.push_back(tokenizer.encode(r.prompt).size() +
                      tokenizer.encode(r.answer).size() + kPackingOverhead);
  }
  std::sort(lengths.begin(), lengths.end());
  LengthStats stats;
  stats.min = lengths.front();
  stats.max = lengths.back();
  stats.mean = static_cast<double>(std::accumulate(
                   lengths.begin(), lengths.end(), std::size_t{0})) /
               static_cast<double>(lengths.size());
  const std::size_t mid = lengths.size() / 2;
  stats.median = lengths.size() % 2 == 1
                     ? static_cast<double>(lengths[mid])
                     : (static_cast<double>(lengths[mid - 1]) +
                        static_cast<double>(lengths[mid])) /
                           2.0;
  return stats;
}

Json label_line(const TokenLabelSequence& seq) {
  Json j = Json::object();
  j["id"] = seq.id;
  j["input_ids"] = seq.input_ids();
  j["labels"] = seq.labels;
  return j;
}

TokenLabelSequence sequence_from_label_line(const Json& j, std::size_t line) {
  if (!j.is_object() || !j.contains("id") || !j.contains("input_ids") ||
      !j.contains("labels")) {
    throw ParseError(line, "label line needs id, input_ids and labels");
  }
  TokenLabelSequence seq;
  std::vector<std::int32_t> ids;
  try {
    seq.id = j.at("id").get<std::string>();
    ids = j.at("input_ids").get<std::vector<std::int32_t>>();
    seq.labels = j.at("labels").get<std::vector<std::int32_t>>();
  } catch (const Json::exception& e) {
    throw ParseError(line, e.what());
  }
  if (ids.size() != seq.labels.size()) {
    throw ParseError(line, "input_ids and labels differ in length");
  }
  std::size_t first = ids.size();
  std::size_t last = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::int32_t label = seq.labels[i];
    if (label != kIgnoreLabel && label != kSupportedLabel &&
        label != kHallucinatedTokenLabel) {
      throw ParseError(line, "label " + std::to_string(label) +
                                 " is not one of -100, 0, 1");
    }
    const bool supervised = label != kIgnoreLabel;
    seq.tokens.push_back(OffsetToken{i, ids[i], 0, 0, !supervised,
                                     supervised ? Segment::kAnswer
                                                : Segment::kSpecial});
    if (supervised) {
      first = std::min(first, i);
      last = i + 1;
    }
  }
  seq.answer_begin = first == ids.size() ? 0 : first;
  seq.answer_end = first == ids.size() ? 0 : last;
  return seq;
}

std::vector<TokenLabelSequence> load_label_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<TokenLabelSequence> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ParseError(line, e.what());
    }
    out.push_back(sequence_from_label_line(j, line));
  }
  return out;
}

}  // namespace halspan
