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

#include "halspan/corpus.hpp"

#include <algorithm>
#include <array>

#include <spdlog/spdlog.h>

#include "halspan/error.hpp"
#include "halspan/utf8.hpp"

namespace halspan {
namespace {

constexpr std::array<std::string_view, 5> kKnownLabels = {
    "Evident Conflict", "Subtle Conflict", "Evident Baseless Info",
    "Subtle Baseless Info", kHallucinatedLabel};

const Json& require(const Json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError(line, std::string("missing field \"") + key + "\"");
  }
  return *it;
}

std::string require_string(const Json& j, const char* key, std::size_t line) {
  const Json& v = require(j, key, line);
  if (!v.is_string()) {
    throw ParseError(line, std::string("field \"") + key + "\" must be a string");
  }
  return v.get<std::string>();
}

std::size_t require_offset(const Json& j, const char* key, std::size_t line) {
  const Json& v = require(j, key, line);
  if (!v.is_number_integer()) {
    throw ParseError(line, std::string("field \"") + key + "\" must be an integer");
  }
  if (v.get<long long>() < 0) {
    throw ParseError(line, std::string("field \"") + key + "\" is negative");
  }
  return v.get<std::size_t>();
}

AnnotatedSpan span_from_json(const Json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError(line, "label entry must be an object");
  AnnotatedSpan span;
  span.start = require_offset(j, "start", line);
  span.end = require_offset(j, "end", line);
  span.label = require_string(j, "label", line);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "start" || key == "end" || key == "label") continue;
    if (key == "text") {
      if (!it->is_string()) throw ParseError(line, "span text must be a string");
      span.text = it->get<std::string>();
    } else {
      span.extra[key] = *it;
    }
  }
  return span;
}

Json span_to_json(const AnnotatedSpan& span) {
  Json j = Json::object();
  j["start"] = span.start;
  j["end"] = span.end;
  j["label"] = span.label;
  if (span.text) j["text"] = *span.text;
  for (auto it = span.extra.begin(); it != span.extra.end(); ++it) {
    j[it.key()] = it.value();
  }
  return j;
}

std::string describe(const AnnotatedSpan& span) {
  return "(" + std::to_string(span.start) + ", " + std::to_string(span.end) +
         ", \"" + span.label + "\")";
}

}  // namespace

std::string_view to_string(TaskType t) {
  switch (t) {
    case TaskType::kQA:
      return "QA";
    case TaskType::kData2txt:
      return "Data2txt";
    case TaskType::kSummary:
      return "Summary";
  }
  return "?";
}

std::string_view to_string(Split s) {
  return s == Split::kTrain ? "train" : "test";
}

std::optional<TaskType> parse_task_type(std::string_view s) {
  if (s == "QA") return TaskType::kQA;
  if (s == "Data2txt") return TaskType::kData2txt;
  if (s == "Summary") return TaskType::kSummary;
  return std::nullopt;
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

bool is_known_label(std::string_view label) {
  return std::find(kKnownLabels.begin(), kKnownLabels.end(), label) !=
         kKnownLabels.end();
}

void validate_record(const RagRecord& record, const LoadOptions& options) {
  if (record.id.empty()) throw ValidationError("record has an empty id");
  const std::u32string answer = utf8::decode(record.answer);
  for (const AnnotatedSpan& span : record.labels) {
    if (span.start >= span.end || span.end > answer.size()) {
      throw ValidationError("record " + record.id + ": span " + describe(span) +
                            " out of bounds for answer of length " +
                            std::to_string(answer.size()));
    }
    if (span.text) {
      const std::string actual = utf8::encode(
          std::u32string_view(answer).substr(span.start, span.end - span.start));
      if (actual != *span.text) {
        throw ValidationError("record " + record.id + ": span " +
                              describe(span) +
                              " text does not match the answer substring");
      }
    }
    if (!is_known_label(span.label)) {
      if (options.strict) {
        throw ValidationError("record " + record.id + ": span " +
                              describe(span) + " has unknown label");
      }
      spdlog::warn("record {}: unknown span label \"{}\"", record.id,
                   span.label);
    }
  }
}

RagRecord record_from_json(const Json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError(line, "record must be a JSON object");
  RagRecord r;
  r.id = require_string(j, "id", line);
  const std::string task = require_string(j, "task_type", line);
  auto task_type = parse_task_type(task);
  if (!task_type) {
    throw ValidationError("record " + r.id + ": unknown task_type \"" + task +
                          "\"");
  }
  r.task_type = *task_type;
  const std::string split_name = require_string(j, "split", line);
  auto split = parse_split(split_name);
  if (!split) {
    throw ValidationError("record " + r.id + ": unknown split \"" +
                          split_name + "\"");
  }
  r.split = *split;
  r.language = require_string(j, "language", line);
  r.prompt = require_string(j, "prompt", line);
  r.answer = require_string(j, "answer", line);
  const Json& labels = require(j, "labels", line);
  if (!labels.is_array()) throw ParseError(line, "\"labels\" must be an array");
  for (const Json& s : labels) r.labels.push_back(span_from_json(s, line));

  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "id" || key == "task_type" || key == "split" ||
        key == "language" || key == "prompt" || key == "answer" ||
        key == "labels") {
      continue;
    }
    if (key == "source_model" && it->is_string()) {
      r.source_model = it->get<std::string>();
    } else {
      r.extra[key] = *it;
    }
  }
  return r;
}

Json record_to_json(const RagRecord& record) {
  Json j = Json::object();
  j["id"] = record.id;
  j["task_type"] = std::string(to_string(record.task_type));
  j["split"] = std::string(to_string(record.split));
  j["language"] = record.language;
  j["prompt"] = record.prompt;
  j["answer"] = record.answer;
  Json labels = Json::array();
  for (const AnnotatedSpan& span : record.labels) {
    labels.push_back(span_to_json(span));
  }
  j["labels"] = std::move(labels);
  if (record.source_model) j["source_model"] = *record.source_model;
  for (auto it = record.extra.begin(); it != record.extra.end(); ++it) {
    j[it.key()] = it.value();
  }
  return j;
}

std::string serialize_record(const RagRecord& record) {
  return record_to_json(record).dump();
}

CorpusReader::CorpusReader(const std::filesystem::path& path,
                           LoadOptions options)
    : in_(path), options_(options) {
  if (!in_) throw IoError("cannot open " + path.string());
}

std::optional<RagRecord> CorpusReader::next() {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (std::all_of(text.begin(), text.end(),
                    [](char c) { return c == ' ' || c == '\t' || c == '\r'; })) {
      continue;
    }
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ParseError(line_, e.what());
    }
    RagRecord record = record_from_json(j, line_);
    validate_record(record, options_);
    return record;
  }
  return std::nullopt;
}

std::vector<RagRecord> load_corpus(const std::filesystem::path& path,
                                   const LoadOptions& options) {
  CorpusReader reader(path, options);
  std::vector<RagRecord> records;
  while (auto r = reader.next()) records.push_back(std::move(*r));
  return records;
}

void save_corpus(std::span<const RagRecord> records,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const RagRecord& r : records) out << serialize_record(r) << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<AnnotatedSpan> normalize_spans(
    std::span<const AnnotatedSpan> spans) {
  std::vector<AnnotatedSpan> sorted(spans.begin(), spans.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const AnnotatedSpan& a, const AnnotatedSpan& b) {
                     return a.start < b.start;
                   });
  std::vector<AnnotatedSpan> out;
  for (AnnotatedSpan& span : sorted) {
    if (span.start >= span.end) continue;
    if (!out.empty() && span.start < out.back().end) {
      AnnotatedSpan& last = out.back();
      // A contained span leaves coverage and text unchanged.
      if (span.end > last.end) {
        last.end = span.end;
        last.text.reset();
      }
      continue;
    }
    out.push_back(std::move(span));
  }
  return out;
}

bool is_normalized(std::span<const AnnotatedSpan> spans) {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i].start >= spans[i].end) return false;
    if (i > 0 && spans[i].start < spans[i - 1].end) return false;
  }
  return true;
}

RagRecord to_binary(const RagRecord& record) {
  RagRecord out = record;
  for (AnnotatedSpan& span : out.labels) {
    span.label = std::string(kHallucinatedLabel);
  }
  return out;
}

}  // namespace halspan
