#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>

#include "aloha/raster.hpp"
#include "aloha/trace.hpp"

namespace aloha {

struct HttpEndpoint {
  std::string url;      // scheme://host[:port]/path
  std::string api_key;  // sent as a bearer token when non-empty
  int timeout_s = 120;
};

// ALOHA_VLM_ENDPOINT / ALOHA_VLM_API_KEY; nullopt when the endpoint is unset.
std::optional<HttpEndpoint> endpoint_from_env();

// POST {"prompt": ..., "images": [base64 PNG, ...]} and return the body.
// Throws BackendUnavailable on transport failure or a non-2xx status.
std::string http_complete(const HttpEndpoint& ep, const std::string& prompt,
                          std::span<const std::shared_ptr<const Raster>> images);

std::string http_request_body(const std::string& prompt, std::span<const std::shared_ptr<const Raster>> images);

class HttpVlmBackend final : public VlmBackend {
 public:
  explicit HttpVlmBackend(HttpEndpoint ep) : ep_(std::move(ep)) {}
  std::string complete(const PromptBundle& prompt) override;

 private:
  HttpEndpoint ep_;
};

}  // namespace aloha
