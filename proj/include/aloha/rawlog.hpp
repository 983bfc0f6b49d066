#pragma once

// Recorder event log: one timestamped low-level input event per line.
//
//   #ALOHA-RAW v1 <screen_w> <screen_h> <fps>
//   <t>\t<kind>\t<payload>
//
// Payloads (space separated):
//   MOUSE_DOWN / MOUSE_UP   <button> <x> <y>
//   MOUSE_MOVE              <x> <y>
//   SCROLL                  <x> <y> <dx> <dy>
//   KEY_DOWN / KEY_UP       <key>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aloha/input.hpp"

namespace aloha {

enum class EventKind { MouseDown, MouseUp, MouseMove, Scroll, KeyDown, KeyUp };

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);

struct RawEvent {
  std::int64_t t = 0;
  EventKind kind = EventKind::MouseMove;
  std::optional<MouseButton> button;
  std::optional<Point> pos;
  std::optional<Point> delta;  // scroll dx, dy
  std::optional<std::string> key;

  static RawEvent mouse_down(std::int64_t t, MouseButton b, Point p);
  static RawEvent mouse_up(std::int64_t t, MouseButton b, Point p);
  static RawEvent mouse_move(std::int64_t t, Point p);
  static RawEvent scroll(std::int64_t t, Point p, int dx, int dy);
  static RawEvent key_down(std::int64_t t, std::string key);
  static RawEvent key_up(std::int64_t t, std::string key);

  friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

struct RawMeta {
  int screen_w = 1920;
  int screen_h = 1080;
  int fps = 30;
  friend bool operator==(const RawMeta&, const RawMeta&) = default;
};

struct RawLog {
  RawMeta meta;
  std::vector<RawEvent> events;
  friend bool operator==(const RawLog&, const RawLog&) = default;
};

inline constexpr std::string_view kRawLogMagic = "#ALOHA-RAW v1";

// Throws Error with MissingHeader, MalformedLine, NonMonotonicTimestamp,
// UnmatchedMouseUp or OutOfBoundsCoordinate; line numbers are 1-based and
// count the header.
RawLog parse_raw_log(std::string_view text);

// Throws InvariantViolation when the log would not re-parse.
std::string write_raw_log(const RawLog& log);

// Same checks the parser applies, on an in-memory log. Throws
// InvariantViolation naming the offending event index.
void validate(const RawLog& log);

}  // namespace aloha
