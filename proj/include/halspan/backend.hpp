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

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "halspan/error.hpp"

namespace halspan {

enum class TextKind { kAnswer, kPrompt };

struct TranslationRequest {
  std::string source_text;
  std::string source_lang;
  std::string target_lang;
  TextKind kind = TextKind::kAnswer;
  // Marker pairs in source_text; 0 for plain text.
  std::size_t pair_count = 0;
};

// The instruction sent ahead of every text. Placeholders are {source_lang}
// and {target_lang}.
inline constexpr std::string_view kTranslationTemplateName =
    "core-translation";
inline constexpr std::string_view kTranslationTemplateVersion = "1";
inline constexpr std::string_view kTranslationTemplate =
    "Translate the following text from {source_lang} to {target_lang}. "
    "If the original text contains <HAL> tags, translate the content inside "
    "<HAL> tags and ensure the number of the <HAL> tags remain exactly the "
    "same in the output. If the original text does not contain <HAL> tags, "
    "just translate the text. Do NOT add any <HAL> tags if they were not in "
    "the original text. Do NOT remove any <HAL> tags that were in the "
    "original text. Do not include any additional sentences summarizing or "
    "explaining the translation. Your output should be just the translated "
    "text, nothing else.";

// English name for common ISO 639-1 codes; unknown codes pass through.
std::string language_name(std::string_view code);

std::string render_instruction(std::string_view source_lang,
                               std::string_view target_lang);

// Instruction, a blank line, then the text to translate.
std::string render_message(const TranslationRequest& request);

// Maps one request to translated text. Implementations must tolerate
// concurrent calls. Failures to reach the service throw TransportError.
class TranslationBackend {
 public:
  virtual ~TranslationBackend() = default;
  virtual std::string translate(const TranslationRequest& request) = 0;
};

class IdentityBackend : public TranslationBackend {
 public:
  std::string translate(const TranslationRequest& request) override {
    return request.source_text;
  }
};

class FunctionBackend : public TranslationBackend {
 public:
  using Fn = std::function<std::string(const TranslationRequest&)>;
  explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}
  std::string translate(const TranslationRequest& request) override {
    return fn_(request);
  }

 private:
  Fn fn_;
};

// Fault injection for dry runs: removes the last closing marker from every
// answer that has one and passes everything else through.
class DropCloseTagBackend : public TranslationBackend {
 public:
  std::string translate(const TranslationRequest& request) override;
};

struct HttpBackendConfig {
  // Base URL of an OpenAI-compatible server, e.g. "http://localhost:8000".
  std::string endpoint;
  std::string model;
  std::chrono::seconds timeout{120};
  std::string api_key;
};

// HALSPAN_BACKEND_URL, HALSPAN_BACKEND_MODEL, HALSPAN_BACKEND_TIMEOUT and
// HALSPAN_API_KEY. A JSON file with keys endpoint/model/timeout_seconds fills
// anything the environment leaves unset.
HttpBackendConfig http_config_from_env(
    const std::filesystem::path& config_file = {});

// POSTs {base}/v1/chat/completions with temperature 0.
class HttpBackend : public TranslationBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;
  std::string translate(const TranslationRequest& request) override;

 private:
  HttpBackendConfig config_;
};

// "identity", "drop-close-tag" or "http".
std::unique_ptr<TranslationBackend> make_backend(
    std::string_view name, const std::filesystem::path& config_file = {});

}  // namespace halspan
