#include "aloha/rawlog.hpp"

#include <array>
#include <charconv>
#include <limits>

#include "aloha/error.hpp"
#include "text_util.hpp"

namespace aloha {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 6> kKindNames = {{
    {EventKind::MouseDown, "MOUSE_DOWN"},
    {EventKind::MouseUp, "MOUSE_UP"},
    {EventKind::MouseMove, "MOUSE_MOVE"},
    {EventKind::Scroll, "SCROLL"},
    {EventKind::KeyDown, "KEY_DOWN"},
    {EventKind::KeyUp, "KEY_UP"},
}};

bool has_button(EventKind k) { return k == EventKind::MouseDown || k == EventKind::MouseUp; }
bool has_pos(EventKind k) {
  return k == EventKind::MouseDown || k == EventKind::MouseUp || k == EventKind::MouseMove ||
         k == EventKind::Scroll;
}
bool has_key(EventKind k) { return k == EventKind::KeyDown || k == EventKind::KeyUp; }

template <typename Int>
std::optional<Int> parse_int(std::string_view s, bool allow_negative) {
  if (s.empty()) return std::nullopt;
  if (s[0] == '-' && !allow_negative) return std::nullopt;
  if (s[0] == '+') return std::nullopt;
  Int value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Semantic checks shared by the parser and validate(). Returns the error
// code for the first violated rule, if any.
class SequenceChecker {
 public:
  explicit SequenceChecker(const RawMeta& meta) : meta_(meta) {}

  std::optional<ErrorCode> accept(const RawEvent& e) {
    if (e.t < last_t_) return ErrorCode::NonMonotonicTimestamp;
    if (e.pos && (e.pos->x < 0 || e.pos->y < 0 || e.pos->x >= meta_.screen_w ||
                  e.pos->y >= meta_.screen_h)) {
      return ErrorCode::OutOfBoundsCoordinate;
    }
    if (e.kind == EventKind::MouseDown) {
      ++held_[static_cast<int>(*e.button)];
    } else if (e.kind == EventKind::MouseUp) {
      auto& held = held_[static_cast<int>(*e.button)];
      if (held == 0) return ErrorCode::UnmatchedMouseUp;
      --held;
    }
    last_t_ = e.t;
    return std::nullopt;
  }

 private:
  RawMeta meta_;
  std::int64_t last_t_ = std::numeric_limits<std::int64_t>::min();
  std::array<int, 3> held_{};
};

bool shape_ok(const RawEvent& e) {
  if (e.t < 0) return false;
  if (e.button.has_value() != has_button(e.kind)) return false;
  if (e.pos.has_value() != has_pos(e.kind)) return false;
  if (e.delta.has_value() != (e.kind == EventKind::Scroll)) return false;
  if (e.key.has_value() != has_key(e.kind)) return false;
  if (e.key && !is_valid_key_token(*e.key)) return false;
  return true;
}

std::optional<RawEvent> parse_event(std::string_view line) {
  auto fields = detail::split(line, '\t');
  if (fields.size() != 3) return std::nullopt;
  RawEvent e;
  auto t = parse_int<std::int64_t>(fields[0], false);
  auto kind = parse_event_kind(fields[1]);
  if (!t || !kind) return std::nullopt;
  e.t = *t;
  e.kind = *kind;
  auto p = detail::split(fields[2], ' ');
  auto coord = [&](std::size_t i) { return parse_int<int>(p[i], false); };
  switch (e.kind) {
    case EventKind::MouseDown:
    case EventKind::MouseUp: {
      if (p.size() != 3) return std::nullopt;
      auto b = parse_button(p[0]);
      auto x = coord(1), y = coord(2);
      if (!b || !x || !y) return std::nullopt;
      e.button = *b;
      e.pos = Point{*x, *y};
      break;
    }
    case EventKind::MouseMove: {
      if (p.size() != 2) return std::nullopt;
      auto x = coord(0), y = coord(1);
      if (!x || !y) return std::nullopt;
      e.pos = Point{*x, *y};
      break;
    }
    case EventKind::Scroll: {
      if (p.size() != 4) return std::nullopt;
      auto x = coord(0), y = coord(1);
      auto dx = parse_int<int>(p[2], true), dy = parse_int<int>(p[3], true);
      if (!x || !y || !dx || !dy) return std::nullopt;
      e.pos = Point{*x, *y};
      e.delta = Point{*dx, *dy};
      break;
    }
    case EventKind::KeyDown:
    case EventKind::KeyUp: {
      if (p.size() != 1 || !is_valid_key_token(p[0])) return std::nullopt;
      e.key = std::string(p[0]);
      break;
    }
  }
  return e;
}

std::optional<RawMeta> parse_header(std::string_view line) {
  auto parts = detail::split(line, ' ');
  if (parts.size() != 5 || std::string(parts[0]) + ' ' + std::string(parts[1]) != kRawLogMagic) return std::nullopt;
  RawMeta meta;
  auto w = parse_int<int>(parts[2], false);
  auto h = parse_int<int>(parts[3], false);
  auto fps = parse_int<int>(parts[4], false);
  if (!w || !h || !fps || *w <= 0 || *h <= 0 || *fps <= 0) return std::nullopt;
  meta.screen_w = *w;
  meta.screen_h = *h;
  meta.fps = *fps;
  return meta;
}

}  // namespace

std::string_view to_string(EventKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "MOUSE_MOVE";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

RawEvent RawEvent::mouse_down(std::int64_t t, MouseButton b, Point p) {
  RawEvent e;
  e.t = t;
  e.kind = EventKind::MouseDown;
  e.button = b;
  e.pos = p;
  return e;
}

RawEvent RawEvent::mouse_up(std::int64_t t, MouseButton b, Point p) {
  RawEvent e = mouse_down(t, b, p);
  e.kind = EventKind::MouseUp;
  return e;
}

RawEvent RawEvent::mouse_move(std::int64_t t, Point p) {
  RawEvent e;
  e.t = t;
  e.kind = EventKind::MouseMove;
  e.pos = p;
  return e;
}

RawEvent RawEvent::scroll(std::int64_t t, Point p, int dx, int dy) {
  RawEvent e;
  e.t = t;
  e.kind = EventKind::Scroll;
  e.pos = p;
  e.delta = Point{dx, dy};
  return e;
}

RawEvent RawEvent::key_down(std::int64_t t, std::string key) {
  RawEvent e;
  e.t = t;
  e.kind = EventKind::KeyDown;
  e.key = std::move(key);
  return e;
}

RawEvent RawEvent::key_up(std::int64_t t, std::string key) {
  RawEvent e = key_down(t, std::move(key));
  e.kind = EventKind::KeyUp;
  return e;
}

RawLog parse_raw_log(std::string_view text) {
  auto lines = detail::split(text, '\n');
  if (lines.empty() || !lines[0].starts_with(std::string(kRawLogMagic) + ' ')) {
    fail(ErrorCode::MissingHeader, "first line must start with '" + std::string(kRawLogMagic) + "'");
  }
  auto meta = parse_header(lines[0]);
  if (!meta) fail(ErrorCode::MalformedLine, "bad header", 1);

  RawLog log;
  log.meta = *meta;
  SequenceChecker checker(log.meta);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    auto e = parse_event(lines[i]);
    if (!e) fail(ErrorCode::MalformedLine, std::string(lines[i]), line_no);
    if (auto err = checker.accept(*e)) fail(*err, std::string(lines[i]), line_no);
    log.events.push_back(std::move(*e));
  }
  return log;
}

void validate(const RawLog& log) {
  if (log.meta.screen_w <= 0 || log.meta.screen_h <= 0 || log.meta.fps <= 0) {
    fail(ErrorCode::InvariantViolation, "meta dimensions and fps must be positive");
  }
  SequenceChecker checker(log.meta);
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const auto& e = log.events[i];
    if (!shape_ok(e)) {
      fail(ErrorCode::InvariantViolation, "event " + std::to_string(i) + " has fields not matching its kind");
    }
    if (auto err = checker.accept(e)) {
      fail(ErrorCode::InvariantViolation,
           "event " + std::to_string(i) + ": " + std::string(to_string(*err)));
    }
  }
}

std::string write_raw_log(const RawLog& log) {
  validate(log);
  std::string out;
  out += kRawLogMagic;
  out += ' ' + std::to_string(log.meta.screen_w) + ' ' + std::to_string(log.meta.screen_h) + ' ' +
         std::to_string(log.meta.fps) + '\n';
  for (const auto& e : log.events) {
    out += std::to_string(e.t);
    out += '\t';
    out += to_string(e.kind);
    out += '\t';
    switch (e.kind) {
      case EventKind::MouseDown:
      case EventKind::MouseUp:
        out += to_string(*e.button);
        out += ' ' + std::to_string(e.pos->x) + ' ' + std::to_string(e.pos->y);
        break;
      case EventKind::MouseMove:
        out += std::to_string(e.pos->x) + ' ' + std::to_string(e.pos->y);
        break;
      case EventKind::Scroll:
        out += std::to_string(e.pos->x) + ' ' + std::to_string(e.pos->y) + ' ' +
               std::to_string(e.delta->x) + ' ' + std::to_string(e.delta->y);
        break;
      case EventKind::KeyDown:
      case EventKind::KeyUp:
        out += *e.key;
        break;
    }
    out += '\n';
  }
  return out;
}

}  // namespace aloha
