#pragma once
// Global JSON configuration shared by the CLI subcommands. Every key is
// optional; unknown keys are a SchemaError.
//
//   {"trace_backend": "mock", "planner": "follower", "budget": 50,
//    "memory_window": 5, "jobs": 1,
//    "endpoint": {"url": "...", "api_key": "...", "timeout_s": 120},
//    "consolidation": {"click_max_ms": 500, ...},
//    "mark": {"crop_size": 512, "arm_px": 48, "stroke_px": 6, "alpha": 0.5}}

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "aloha/consolidate.hpp"
#include "aloha/frames.hpp"
#include "aloha/http_backend.hpp"

namespace aloha {

struct AppConfig {
  std::string trace_backend = "mock";  // mock | http
  std::string planner = "follower";    // follower | vlm
  int budget = 50;
  int memory_window = 5;
  int jobs = 1;
  std::optional<HttpEndpoint> endpoint;
  ConsolidationConfig consolidation;
  MarkConfig mark;
};

AppConfig parse_config(std::string_view json_text);
AppConfig load_config(const std::filesystem::path& path);
// ALOHA_VLM_ENDPOINT / ALOHA_VLM_API_KEY take precedence over the file.
void apply_env(AppConfig& cfg);
void validate(const AppConfig& cfg);

}  // namespace aloha
