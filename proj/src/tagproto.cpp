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

#include "halspan/tagproto.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <spdlog/spdlog.h>

#include "halspan/error.hpp"
#include "halspan/utf8.hpp"

namespace halspan {
namespace {

enum class MarkerKind { kNone, kOpen, kClose, kStray };

struct MarkerMatch {
  MarkerKind kind = MarkerKind::kNone;
  std::size_t length = 0;
};

char32_t lower_ascii(char32_t c) {
  return (c >= U'A' && c <= U'Z') ? c - U'A' + U'a' : c;
}

// Recognizes "<HAL>" and "</HAL>" exactly. Anything else shaped like a marker
// ("<hal>", "< /HAL >") is stray.
MarkerMatch match_marker(std::u32string_view text, std::size_t i) {
  if (text[i] != U'<') return {};
  std::size_t j = i + 1;
  auto skip_space = [&] {
    while (j < text.size() && utf8::is_space(text[j])) ++j;
  };
  skip_space();
  bool closing = false;
  if (j < text.size() && text[j] == U'/') {
    closing = true;
    ++j;
    skip_space();
  }
  static constexpr char32_t kName[] = {U'h', U'a', U'l'};
  for (char32_t expected : kName) {
    if (j >= text.size() || lower_ascii(text[j]) != expected) return {};
    ++j;
  }
  skip_space();
  if (j >= text.size() || text[j] != U'>') return {};
  ++j;
  const std::u32string_view raw = text.substr(i, j - i);
  if (!closing && raw == U"<HAL>") return {MarkerKind::kOpen, j - i};
  if (closing && raw == U"</HAL>") return {MarkerKind::kClose, j - i};
  return {MarkerKind::kStray, j - i};
}

// Walks marker structure. Returns an error description and position instead
// of throwing so validate_tags stays cheap.
struct ScanResult {
  std::u32string stripped;
  std::vector<AnnotatedSpan> spans;
  std::optional<std::pair<std::size_t, std::string>> error;
};

ScanResult scan(std::u32string_view text) {
  ScanResult result;
  bool open = false;
  std::size_t span_start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const MarkerMatch m = match_marker(text, i);
    switch (m.kind) {
      case MarkerKind::kNone:
        result.stripped.push_back(text[i]);
        ++i;
        continue;
      case MarkerKind::kStray:
        result.error = {i, "stray marker"};
        return result;
      case MarkerKind::kOpen:
        if (open) {
          result.error = {i, "nested open marker"};
          return result;
        }
        open = true;
        span_start = result.stripped.size();
        break;
      case MarkerKind::kClose:
        if (!open) {
          result.error = {i, "close marker without open marker"};
          return result;
        }
        if (result.stripped.size() == span_start) {
          result.error = {i, "empty marker pair"};
          return result;
        }
        open = false;
        result.spans.push_back(hallucinated_span(span_start, result.stripped.size()));
        break;
    }
    i += m.length;
  }
  if (open) result.error = {text.size(), "unclosed open marker"};
  return result;
}

}  // namespace

TaggedText inject_tags(std::string_view answer,
                       std::span<const AnnotatedSpan> spans) {
  const std::u32string cps = utf8::decode(answer);
  if (!is_normalized(spans)) {
    throw ContractViolation("inject_tags: spans must be sorted and disjoint");
  }
  if (!spans.empty() && spans.back().end > cps.size()) {
    throw ContractViolation("inject_tags: span end " +
                            std::to_string(spans.back().end) +
                            " beyond answer length " +
                            std::to_string(cps.size()));
  }
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (match_marker(cps, i).kind != MarkerKind::kNone) {
      throw ContractViolation("inject_tags: answer already contains a marker at " +
                              std::to_string(i));
    }
  }

  const std::u32string open = utf8::decode(kOpenMarker);
  const std::u32string close = utf8::decode(kCloseMarker);
  std::u32string out;
  out.reserve(cps.size() + spans.size() * (open.size() + close.size()));
  std::size_t cursor = 0;
  for (const AnnotatedSpan& span : spans) {
    out.append(cps, cursor, span.start - cursor);
    out += open;
    out.append(cps, span.start, span.end - span.start);
    out += close;
    cursor = span.end;
  }
  out.append(cps, cursor);
  return TaggedText{utf8::encode(out), spans.size()};
}

bool validate_tags(std::string_view candidate, std::size_t expected_pairs) {
  std::u32string cps;
  try {
    cps = utf8::decode(candidate);
  } catch (const ValidationError&) {
    return false;
  }
  const ScanResult r = scan(cps);
  return !r.error && r.spans.size() == expected_pairs;
}

ExtractedAnswer extract_spans(std::string_view tagged_text) {
  const ScanResult r = scan(utf8::decode(tagged_text));
  if (r.error) throw ProtocolError(r.error->first, r.error->second);
  return ExtractedAnswer{utf8::encode(r.stripped), r.spans};
}

ExtractedAnswer extract_spans(const TaggedText& tagged) {
  return extract_spans(std::string_view(tagged.text));
}

TranslationOutcome translate_tagged(TranslationBackend& backend,
                                    const TranslationRequest& request,
                                    const RetryPolicy& policy) {
  TranslationOutcome outcome;
  const std::size_t max_attempts = policy.max_retries + 1;
  while (outcome.attempts < max_attempts) {
    ++outcome.attempts;
    outcome.translated = backend.translate(request);
    if (validate_tags(outcome.translated, request.pair_count)) {
      outcome.valid = true;
      outcome.failure_reason.reset();
      return outcome;
    }
    outcome.failure_reason =
        "tag invariant violated: expected " +
        std::to_string(request.pair_count) +
        " well-formed <HAL> pairs after " + std::to_string(outcome.attempts) +
        " attempt(s)";
  }
  return outcome;
}

RagRecord translate_record(const RagRecord& record, TranslationBackend& backend,
                           std::string_view target_lang,
                           const RetryPolicy& policy) {
  if (record.language == target_lang) {
    throw ContractViolation("record " + record.id +
                            ": source and target language are both " +
                            record.language);
  }
  const std::vector<AnnotatedSpan> spans = normalize_spans(record.labels);

  TranslationRequest answer_request;
  answer_request.source_lang = record.language;
  answer_request.target_lang = std::string(target_lang);
  answer_request.kind = TextKind::kAnswer;
  try {
    TaggedText tagged = inject_tags(record.answer, spans);
    answer_request.source_text = std::move(tagged.text);
    answer_request.pair_count = tagged.pair_count;
  } catch (const ContractViolation& e) {
    throw TranslationFailed(record.id, e.what());
  }
  const TranslationOutcome answer =
      translate_tagged(backend, answer_request, policy);
  if (!answer.valid) {
    throw TranslationFailed(record.id, "answer: " + *answer.failure_reason);
  }

  // The prompt carries no markers, so the reply must not either.
  TranslationRequest prompt_request;
  prompt_request.source_text = record.prompt;
  prompt_request.source_lang = record.language;
  prompt_request.target_lang = std::string(target_lang);
  prompt_request.kind = TextKind::kPrompt;
  std::string prompt;
  if (validate_tags(record.prompt, 0)) {
    const TranslationOutcome out =
        translate_tagged(backend, prompt_request, policy);
    if (!out.valid) {
      throw TranslationFailed(record.id, "prompt: " + *out.failure_reason);
    }
    prompt = out.translated;
  } else {
    prompt = backend.translate(prompt_request);
  }

  ExtractedAnswer extracted = extract_spans(answer.translated);
  const std::u32string answer_cps = utf8::decode(extracted.answer);
  for (std::size_t i = 0; i < extracted.spans.size(); ++i) {
    AnnotatedSpan& out = extracted.spans[i];
    const AnnotatedSpan& src = spans[i];
    out.label = src.label;
    out.extra = src.extra;
    if (src.text) {
      out.text = utf8::encode(std::u32string_view(answer_cps)
                                  .substr(out.start, out.end - out.start));
    }
  }

  RagRecord translated = record;
  translated.prompt = std::move(prompt);
  translated.answer = std::move(extracted.answer);
  translated.labels = std::move(extracted.spans);
  translated.language = std::string(target_lang);
  return translated;
}

CorpusTranslation translate_corpus(std::span<const RagRecord> records,
                                   TranslationBackend& backend,
                                   std::string_view target_lang,
                                   std::size_t parallelism,
                                   const RetryPolicy& policy) {
  if (parallelism == 0) {
    throw ContractViolation("translate_corpus: parallelism must be >= 1");
  }
  struct Slot {
    std::optional<RagRecord> record;
    std::optional<RecordFailure> failure;
  };
  std::vector<Slot> slots(records.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      const RagRecord& r = records[i];
      try {
        slots[i].record = translate_record(r, backend, target_lang, policy);
      } catch (const TranslationFailed& e) {
        slots[i].failure = RecordFailure{r.id, FailureKind::kProtocol, e.what()};
      } catch (const ProtocolError& e) {
        slots[i].failure = RecordFailure{r.id, FailureKind::kProtocol, e.what()};
      } catch (const ContractViolation& e) {
        slots[i].failure = RecordFailure{r.id, FailureKind::kProtocol, e.what()};
      } catch (const TransportError& e) {
        slots[i].failure = RecordFailure{r.id, FailureKind::kTransport, e.what()};
      } catch (const std::exception& e) {
        slots[i].failure = RecordFailure{r.id, FailureKind::kTransport,
                                         std::string("backend: ") + e.what()};
      }
      if (slots[i].failure) {
        spdlog::warn("record {} excluded: {}", r.id, slots[i].failure->reason);
      }
    }
  };

  const std::size_t workers = std::min(parallelism, records.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }

  CorpusTranslation out;
  for (Slot& slot : slots) {
    if (slot.record) out.translated.push_back(std::move(*slot.record));
    if (slot.failure) out.failures.push_back(std::move(*slot.failure));
  }
  return out;
}

}  // namespace halspan
