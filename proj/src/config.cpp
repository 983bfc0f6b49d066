#include "aloha/config.hpp"

#include <fstream>
#include <sstream>

#include "json_io.hpp"

namespace aloha {

using detail::get_as;
using detail::ojson;
using detail::reject_unknown_keys;

namespace {

template <typename T>
void maybe(const ojson& j, std::string_view key, T& dst, std::string_view where) {
  if (j.contains(std::string(key))) dst = get_as<T>(j, key, where);
}

}  // namespace

AppConfig parse_config(std::string_view json_text) {
  ojson j;
  try {
    j = ojson::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::SchemaError, std::string("config: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::SchemaError, "config must be an object");
  reject_unknown_keys(j, {"trace_backend", "planner", "budget", "memory_window", "jobs", "endpoint", "consolidation", "mark"},
                      "config");
  AppConfig c;
  maybe(j, "trace_backend", c.trace_backend, "config");
  maybe(j, "planner", c.planner, "config");
  maybe(j, "budget", c.budget, "config");
  maybe(j, "memory_window", c.memory_window, "config");
  maybe(j, "jobs", c.jobs, "config");
  if (j.contains("endpoint")) {
    const auto& e = j["endpoint"];
    if (!e.is_object()) fail(ErrorCode::SchemaError, "config.endpoint must be an object");
    reject_unknown_keys(e, {"url", "api_key", "timeout_s"}, "config.endpoint");
    HttpEndpoint ep;
    ep.url = get_as<std::string>(e, "url", "config.endpoint");
    maybe(e, "api_key", ep.api_key, "config.endpoint");
    maybe(e, "timeout_s", ep.timeout_s, "config.endpoint");
    c.endpoint = ep;
  }
  if (j.contains("consolidation")) {
    const auto& k = j["consolidation"];
    if (!k.is_object()) fail(ErrorCode::SchemaError, "config.consolidation must be an object");
    reject_unknown_keys(k, {"click_max_ms", "click_max_px", "dblclick_gap_ms", "dblclick_px", "type_gap_ms",
                            "scroll_gap_ms", "scroll_notch_units"},
                        "config.consolidation");
    auto& cc = c.consolidation;
    maybe(k, "click_max_ms", cc.click_max_ms, "config.consolidation");
    maybe(k, "click_max_px", cc.click_max_px, "config.consolidation");
    maybe(k, "dblclick_gap_ms", cc.dblclick_gap_ms, "config.consolidation");
    maybe(k, "dblclick_px", cc.dblclick_px, "config.consolidation");
    maybe(k, "type_gap_ms", cc.type_gap_ms, "config.consolidation");
    maybe(k, "scroll_gap_ms", cc.scroll_gap_ms, "config.consolidation");
    maybe(k, "scroll_notch_units", cc.scroll_notch_units, "config.consolidation");
  }
  if (j.contains("mark")) {
    const auto& m = j["mark"];
    if (!m.is_object()) fail(ErrorCode::SchemaError, "config.mark must be an object");
    reject_unknown_keys(m, {"crop_size", "arm_px", "stroke_px", "alpha"}, "config.mark");
    maybe(m, "crop_size", c.mark.crop_size, "config.mark");
    maybe(m, "arm_px", c.mark.arm_px, "config.mark");
    maybe(m, "stroke_px", c.mark.stroke_px, "config.mark");
    maybe(m, "alpha", c.mark.alpha, "config.mark");
  }
  validate(c);
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_env(AppConfig& cfg) {
  if (auto ep = endpoint_from_env()) {
    if (cfg.endpoint) ep->timeout_s = cfg.endpoint->timeout_s;
    cfg.endpoint = *ep;
  }
}

void validate(const AppConfig& c) {
  if (c.trace_backend != "mock" && c.trace_backend != "http") {
    fail(ErrorCode::SchemaError, "config: trace_backend must be mock or http");
  }
  if (c.planner != "follower" && c.planner != "vlm") fail(ErrorCode::SchemaError, "config: planner must be follower or vlm");
  if (c.budget < 1) fail(ErrorCode::SchemaError, "config: budget must be positive");
  if (c.memory_window < 0) fail(ErrorCode::SchemaError, "config: memory_window must be >= 0");
  if (c.jobs < 1) fail(ErrorCode::SchemaError, "config: jobs must be positive");
  if (c.endpoint && c.endpoint->timeout_s < 1) fail(ErrorCode::SchemaError, "config: timeout_s must be positive");
  try {
    validate(c.consolidation);
    validate(c.mark);
  } catch (const Error& e) {
    fail(ErrorCode::SchemaError, std::string("config: ") + e.what());
  }
}

}  // namespace aloha
