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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "halspan/backend.hpp"
#include "halspan/corpus.hpp"

namespace halspan {

inline constexpr std::string_view kOpenMarker = "<HAL>";
inline constexpr std::string_view kCloseMarker = "</HAL>";

// Text carrying paired, non-nested <HAL>...</HAL> markers.
struct TaggedText {
  std::string text;
  std::size_t pair_count = 0;

  friend bool operator==(const TaggedText&, const TaggedText&) = default;
};

// Wraps every span of `answer` in a marker pair. Spans must be normalized and
// in bounds, and the answer must not already contain marker-like text.
TaggedText inject_tags(std::string_view answer,
                       std::span<const AnnotatedSpan> spans);

// True iff `candidate` holds exactly `expected_pairs` alternating, non-empty
// marker pairs and nothing that looks like a stray marker (for example
// "<hal>" or an unmatched "</HAL>").
bool validate_tags(std::string_view candidate, std::size_t expected_pairs);

struct ExtractedAnswer {
  std::string answer;
  std::vector<AnnotatedSpan> spans;

  friend bool operator==(const ExtractedAnswer&, const ExtractedAnswer&) = default;
};

// Strips markers and returns the spans they delimited, in code points of the
// stripped text, labelled "hallucinated". Throws ProtocolError on malformed
// markers.
ExtractedAnswer extract_spans(const TaggedText& tagged);
ExtractedAnswer extract_spans(std::string_view tagged_text);

struct TranslationOutcome {
  std::string translated;
  std::size_t attempts = 0;
  bool valid = false;
  std::optional<std::string> failure_reason;
};

struct RetryPolicy {
  // Re-issues after the first attempt when the tag invariant fails.
  std::size_t max_retries = 3;
};

// Sends one request, re-issuing it while the reply fails validate_tags.
// TransportError from the backend propagates.
TranslationOutcome translate_tagged(TranslationBackend& backend,
                                    const TranslationRequest& request,
                                    const RetryPolicy& policy);

// Raised when a record cannot be translated without breaking the tag
// invariant.
class TranslationFailed : public Error {
 public:
  TranslationFailed(std::string id, const std::string& reason)
      : Error(reason), id_(std::move(id)) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

// Translates prompt and answer of one record into `target_lang`. Spans are
// normalized, injected as markers, and recovered from the translated answer.
// Recovered spans take the labels of the source spans pairwise.
RagRecord translate_record(const RagRecord& record, TranslationBackend& backend,
                           std::string_view target_lang,
                           const RetryPolicy& policy = {});

enum class FailureKind { kProtocol, kTransport };

struct RecordFailure {
  std::string id;
  FailureKind kind = FailureKind::kProtocol;
  std::string reason;

  friend bool operator==(const RecordFailure&, const RecordFailure&) = default;
};

struct CorpusTranslation {
  std::vector<RagRecord> translated;
  std::vector<RecordFailure> failures;
};

inline constexpr std::size_t kDefaultParallelism = 30;

// Runs up to `parallelism` records at once. Both output lists follow input
// order; one bad record never aborts the batch.
CorpusTranslation translate_corpus(std::span<const RagRecord> records,
                                   TranslationBackend& backend,
                                   std::string_view target_lang,
                                   std::size_t parallelism = kDefaultParallelism,
                                   const RetryPolicy& policy = {});

}  // namespace halspan
