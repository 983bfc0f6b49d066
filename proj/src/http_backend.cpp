#include "aloha/http_backend.hpp"

#include <cstdlib>
#include <regex>

#include "aloha/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace aloha {

std::optional<HttpEndpoint> endpoint_from_env() {
  const char* url = std::getenv("ALOHA_VLM_ENDPOINT");
  if (!url || !*url) return std::nullopt;
  HttpEndpoint ep;
  ep.url = url;
  if (const char* key = std::getenv("ALOHA_VLM_API_KEY")) ep.api_key = key;
  return ep;
}

std::string http_request_body(const std::string& prompt, std::span<const std::shared_ptr<const Raster>> images) {
  nlohmann::ordered_json body;
  body["prompt"] = prompt;
  body["images"] = nlohmann::ordered_json::array();
  for (const auto& img : images) body["images"].push_back(base64_encode(encode_png(*img)));
  return body.dump();
}

std::string http_complete(const HttpEndpoint& ep, const std::string& prompt,
                          std::span<const std::shared_ptr<const Raster>> images) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(ep.url, m, url_re)) fail(ErrorCode::BackendUnavailable, "bad endpoint url: " + ep.url);
  const std::string base = m[1].str();
  const std::string path = m[2].matched ? m[2].str() : "/";

  httplib::Client client(base);
  client.set_connection_timeout(ep.timeout_s, 0);
  client.set_read_timeout(ep.timeout_s, 0);
  client.set_write_timeout(ep.timeout_s, 0);
  if (!ep.api_key.empty()) client.set_bearer_token_auth(ep.api_key);

  auto res = client.Post(path, http_request_body(prompt, images), "application/json");
  if (!res) fail(ErrorCode::BackendUnavailable, "POST " + ep.url + ": " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    fail(ErrorCode::BackendUnavailable, "POST " + ep.url + ": HTTP " + std::to_string(res->status));
  }
  return res->body;
}

std::string HttpVlmBackend::complete(const PromptBundle& prompt) {
  return http_complete(ep_, prompt.text(), prompt.images);
}

}  // namespace aloha
