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
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace halspan {

using Json = nlohmann::ordered_json;

enum class TaskType { kQA, kData2txt, kSummary };
enum class Split { kTrain, kTest };

std::string_view to_string(TaskType t);
std::string_view to_string(Split s);
std::optional<TaskType> parse_task_type(std::string_view s);
std::optional<Split> parse_split(std::string_view s);

inline constexpr std::string_view kHallucinatedLabel = "hallucinated";

// True for the four annotation categories and the binary marker.
bool is_known_label(std::string_view label);

// Half-open code point interval [start, end) on a record's answer.
struct AnnotatedSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;
  std::optional<std::string> text;
  // Unrecognized keys, kept for round-tripping.
  Json extra = Json::object();

  friend bool operator==(const AnnotatedSpan&, const AnnotatedSpan&) = default;
};

inline AnnotatedSpan hallucinated_span(std::size_t start, std::size_t end) {
  AnnotatedSpan s;
  s.start = start;
  s.end = end;
  s.label = std::string(kHallucinatedLabel);
  return s;
}

struct RagRecord {
  std::string id;
  TaskType task_type = TaskType::kQA;
  Split split = Split::kTrain;
  std::string language;
  std::string prompt;
  std::string answer;
  std::vector<AnnotatedSpan> labels;
  std::optional<std::string> source_model;
  Json extra = Json::object();

  friend bool operator==(const RagRecord&, const RagRecord&) = default;
};

struct LoadOptions {
  // Reject unknown span labels instead of warning.
  bool strict = false;
};

// Throws ValidationError naming the record id and the offending span.
void validate_record(const RagRecord& record, const LoadOptions& options = {});

// `line` is only used for error messages.
RagRecord record_from_json(const Json& j, std::size_t line);
Json record_to_json(const RagRecord& record);

// One JSONL line, no trailing newline.
std::string serialize_record(const RagRecord& record);

// Streams validated records one line at a time. Blank lines are skipped.
class CorpusReader {
 public:
  explicit CorpusReader(const std::filesystem::path& path,
                        LoadOptions options = {});

  std::optional<RagRecord> next();
  std::size_t line() const { return line_; }

 private:
  std::ifstream in_;
  LoadOptions options_;
  std::size_t line_ = 0;
};

std::vector<RagRecord> load_corpus(const std::filesystem::path& path,
                                   const LoadOptions& options = {});

void save_corpus(std::span<const RagRecord> records,
                 const std::filesystem::path& path);

// Sorts by start and merges spans that share at least one character. A merged
// span keeps the label of its earliest-starting member and drops `text`.
std::vector<AnnotatedSpan> normalize_spans(std::span<const AnnotatedSpan> spans);

bool is_normalized(std::span<const AnnotatedSpan> spans);

RagRecord to_binary(const RagRecord& record);

}  // namespace halspan
