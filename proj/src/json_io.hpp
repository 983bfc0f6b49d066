#pragma once

// Internal JSON helpers shared by the file-format readers and writers.

#include <initializer_list>
#include <string>
#include <string_view>

#include "aloha/consolidate.hpp"
#include "aloha/error.hpp"
#include "json.hpp"

namespace aloha::detail {

using ojson = nlohmann::ordered_json;

template <typename Json>
void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (auto a : allowed) known = known || it.key() == a;
    if (!known) fail(ErrorCode::SchemaError, std::string(where) + ": unknown field '" + it.key() + "'");
  }
}

template <typename Json>
const Json& need(const Json& j, std::string_view key, std::string_view where) {
  auto it = j.find(std::string(key));
  if (it == j.end()) fail(ErrorCode::SchemaError, std::string(where) + ": missing field '" + std::string(key) + "'");
  return *it;
}

template <typename T, typename Json>
T get_as(const Json& j, std::string_view key, std::string_view where) {
  const Json& v = need(j, key, where);
  try {
    return v.template get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::SchemaError, std::string(where) + ": field '" + std::string(key) + "' has the wrong type");
  }
}

template <typename Json>
Point point_from(const Json& j, std::string_view where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    fail(ErrorCode::SchemaError, std::string(where) + ": point must be [x, y]");
  }
  return {j[0].template get<int>(), j[1].template get<int>()};
}

inline ojson to_json(Point p) { return ojson::array({p.x, p.y}); }

inline ojson to_json(const SemanticAction& a) {
  ojson j;
  j["kind"] = std::string(to_string(a.kind));
  j["t_start"] = a.t_start;
  j["t_end"] = a.t_end;
  if (a.button) j["button"] = std::string(to_string(*a.button));
  if (a.point) j["point"] = to_json(*a.point);
  if (!a.path.empty()) {
    ojson path = ojson::array();
    for (Point p : a.path) path.push_back(to_json(p));
    j["path"] = std::move(path);
  }
  if (a.text) j["text"] = *a.text;
  if (a.key) j["key"] = *a.key;
  if (a.combo) j["combo"] = to_string(*a.combo);
  if (a.notches) j["notches"] = *a.notches;
  return j;
}

template <typename Json>
SemanticAction action_from_json(const Json& j) {
  constexpr std::string_view where = "action";
  if (!j.is_object()) fail(ErrorCode::SchemaError, "action must be an object");
  reject_unknown_keys(j, {"kind", "t_start", "t_end", "button", "point", "path", "text", "key", "combo", "notches"},
                      where);
  SemanticAction a;
  auto kind = parse_action_kind(get_as<std::string>(j, "kind", where));
  if (!kind) fail(ErrorCode::SchemaError, "unknown action kind");
  a.kind = *kind;
  a.t_start = get_as<std::int64_t>(j, "t_start", where);
  a.t_end = get_as<std::int64_t>(j, "t_end", where);
  if (j.contains("button")) {
    auto b = parse_button(get_as<std::string>(j, "button", where));
    if (!b) fail(ErrorCode::SchemaError, "bad button");
    a.button = *b;
  }
  if (j.contains("point")) a.point = point_from(j["point"], where);
  if (j.contains("path")) {
    const auto& path = j["path"];
    if (!path.is_array()) fail(ErrorCode::SchemaError, "path must be an array");
    for (const auto& p : path) a.path.push_back(point_from(p, where));
  }
  if (j.contains("text")) a.text = get_as<std::string>(j, "text", where);
  if (j.contains("key")) a.key = get_as<std::string>(j, "key", where);
  if (j.contains("combo")) {
    auto combo = parse_combo(get_as<std::string>(j, "combo", where));
    if (!combo) fail(ErrorCode::SchemaError, "bad combo");
    a.combo = *combo;
  }
  if (j.contains("notches")) a.notches = get_as<int>(j, "notches", where);
  validate(a);
  return a;
}

}  // namespace aloha::detail
