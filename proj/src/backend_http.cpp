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

#include <string>

#include "halspan/backend.hpp"
#include "httplib.h"
#include "json.hpp"

namespace halspan {

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw TransportError("http backend: no endpoint configured "
                         "(set HALSPAN_BACKEND_URL or endpoint in config)");
  }
  if (config_.model.empty()) {
    throw TransportError("http backend: no model configured "
                         "(set HALSPAN_BACKEND_MODEL or model in config)");
  }
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::translate(const TranslationRequest& request) {
  // One client per call: httplib clients are not safe to share across threads.
  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  if (!config_.api_key.empty()) client.set_bearer_token_auth(config_.api_key);

  nlohmann::json body = {
      {"model", config_.model},
      {"temperature", 0},
      {"messages",
       nlohmann::json::array(
           {{{"role", "user"}, {"content", render_message(request)}}})},
  };
  auto res = client.Post("/v1/chat/completions", body.dump(),
                         "application/json");
  if (!res) {
    throw TransportError("http backend: " + config_.endpoint + ": " +
                         httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError("http backend: status " + std::to_string(res->status) +
                         " from " + config_.endpoint);
  }
  try {
    const auto reply = nlohmann::json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("http backend: malformed reply: ") +
                         e.what());
  }
}

}  // namespace halspan
