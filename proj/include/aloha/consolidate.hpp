#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aloha/input.hpp"
#include "aloha/rawlog.hpp"

namespace aloha {

enum class ActionKind { Click, DoubleClick, Drag, Type, Key, Hotkey, Scroll };

// Wire names: click, double_click, drag, type, key, hotkey, scroll.
std::string_view to_string(ActionKind k);
std::optional<ActionKind> parse_action_kind(std::string_view s);
bool has_geometry(ActionKind k);

struct SemanticAction {
  ActionKind kind = ActionKind::Click;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  std::optional<MouseButton> button;  // Click, DoubleClick, Drag
  std::optional<Point> point;         // Click, DoubleClick, Scroll
  std::vector<Point> path;            // Drag, at least 2 points
  std::optional<std::string> text;    // Type
  std::optional<std::string> key;     // Key
  std::optional<KeyCombo> combo;      // Hotkey
  std::optional<int> notches;         // Scroll, nonzero, positive = up

  static SemanticAction click(std::int64_t t0, std::int64_t t1, MouseButton b, Point p);
  static SemanticAction double_click(std::int64_t t0, std::int64_t t1, MouseButton b, Point p);
  static SemanticAction drag(std::int64_t t0, std::int64_t t1, MouseButton b, std::vector<Point> path);
  static SemanticAction type(std::int64_t t0, std::int64_t t1, std::string text);
  static SemanticAction key_press(std::int64_t t, std::string key);
  static SemanticAction hotkey(std::int64_t t, KeyCombo combo);
  static SemanticAction scroll(std::int64_t t0, std::int64_t t1, Point p, int notches);

  friend bool operator==(const SemanticAction&, const SemanticAction&) = default;
};

struct ConsolidationConfig {
  int click_max_ms = 500;
  int click_max_px = 5;
  int dblclick_gap_ms = 400;
  int dblclick_px = 5;
  int type_gap_ms = 1000;
  int scroll_gap_ms = 300;
  int scroll_notch_units = 120;
};

void validate(const ConsolidationConfig& cfg);

// Folds a raw event stream into semantic actions sorted by t_start.
// Throws InvariantViolation when the log or the config is invalid; odd but
// valid input (stray moves, lone modifiers, unmatched presses) is absorbed.
std::vector<SemanticAction> consolidate(const RawLog& log, const ConsolidationConfig& cfg = {});

// Editor-buffer fold over printable tokens, Space and Backspace. Backspace on
// an empty buffer is a no-op here. Throws UnsupportedKey for other tokens.
std::string reconstruct_text(const std::vector<std::string>& keys);

// Throws InvariantViolation with the action index.
void validate(const SemanticAction& a);
void validate(const std::vector<SemanticAction>& actions);

// JSON Lines, one action per line, keys in canonical order.
std::string write_cleaned_log(const std::vector<SemanticAction>& actions);
std::vector<SemanticAction> read_cleaned_log(std::string_view text);

}  // namespace aloha
