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

#include "halspan/backend.hpp"

#include <cstdlib>
#include <fstream>
#include <map>

#include "json.hpp"

namespace halspan {
namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

}  // namespace

std::string language_name(std::string_view code) {
  static const std::map<std::string, std::string, std::less<>> kNames = {
      {"de", "German"},  {"en", "English"}, {"es", "Spanish"},
      {"fr", "French"},  {"it", "Italian"}, {"pl", "Polish"},
      {"tr", "Turkish"}, {"zh", "Chinese"},
  };
  auto it = kNames.find(code);
  return it == kNames.end() ? std::string(code) : it->second;
}

std::string render_instruction(std::string_view source_lang,
                               std::string_view target_lang) {
  std::string out(kTranslationTemplate);
  replace_all(out, "{source_lang}", language_name(source_lang));
  replace_all(out, "{target_lang}", language_name(target_lang));
  return out;
}

std::string render_message(const TranslationRequest& request) {
  return render_instruction(request.source_lang, request.target_lang) +
         "\n\n" + request.source_text;
}

std::string DropCloseTagBackend::translate(const TranslationRequest& request) {
  std::string out = request.source_text;
  if (request.kind != TextKind::kAnswer) return out;
  const std::size_t pos = out.rfind("</HAL>");
  if (pos != std::string::npos) out.erase(pos, 6);
  return out;
}

HttpBackendConfig http_config_from_env(
    const std::filesystem::path& config_file) {
  HttpBackendConfig config;
  config.endpoint = env_or_empty("HALSPAN_BACKEND_URL");
  config.model = env_or_empty("HALSPAN_BACKEND_MODEL");
  config.api_key = env_or_empty("HALSPAN_API_KEY");
  const std::string timeout = env_or_empty("HALSPAN_BACKEND_TIMEOUT");
  bool timeout_set = false;
  if (!timeout.empty()) {
    config.timeout = std::chrono::seconds(std::stol(timeout));
    timeout_set = true;
  }
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw IoError("cannot open backend config " + config_file.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError("backend config " + config_file.string() + ": " + e.what());
    }
    if (config.endpoint.empty()) config.endpoint = j.value("endpoint", "");
    if (config.model.empty()) config.model = j.value("model", "");
    if (!timeout_set && j.contains("timeout_seconds")) {
      config.timeout = std::chrono::seconds(j["timeout_seconds"].get<long>());
    }
  }
  return config;
}

std::unique_ptr<TranslationBackend> make_backend(
    std::string_view name, const std::filesystem::path& config_file) {
  if (name == "identity") return std::make_unique<IdentityBackend>();
  if (name == "drop-close-tag") return std::make_unique<DropCloseTagBackend>();
  if (name == "http") {
    return std::make_unique<HttpBackend>(http_config_from_env(config_file));
  }
  throw ContractViolation("unknown backend \"" + std::string(name) + "\"");
}

}  // namespace halspan
