#pragma once

// Shared vocabulary for pointer geometry, mouse buttons and key tokens.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aloha {

struct Point {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Point&, const Point&) = default;
};

// Half-open pixel rectangle [x, x+w) x [y, y+h).
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(Point p) const { return p.x >= x && p.x < x + w && p.y >= y && p.y < y + h; }
  bool contains(const Rect& r) const {
    return r.x >= x && r.y >= y && r.x + r.w <= x + w && r.y + r.h <= y + h;
  }
  Point center() const { return {x + w / 2, y + h / 2}; }
  friend auto operator<=>(const Rect&, const Rect&) = default;
};

enum class MouseButton { L, R, M };

std::string_view to_string(MouseButton b);
std::optional<MouseButton> parse_button(std::string_view s);

enum class Modifier { Ctrl, Alt, Shift, Meta };

std::string_view to_string(Modifier m);
std::optional<Modifier> parse_modifier(std::string_view s);

// A key token is either a single printable ASCII character (0x21..0x7E) or
// one of the closed set of named keys.
bool is_printable_token(std::string_view token);
bool is_named_key(std::string_view token);
bool is_valid_key_token(std::string_view token);
bool is_modifier_token(std::string_view token);
const std::vector<std::string>& named_keys();

struct KeyCombo {
  std::vector<Modifier> mods;  // canonical order Ctrl, Alt, Shift, Meta; no duplicates
  std::string key;

  friend bool operator==(const KeyCombo&, const KeyCombo&) = default;
};

// "Ctrl+Shift+s". The base key may itself be "+", written "Ctrl++".
std::string to_string(const KeyCombo& combo);
std::optional<KeyCombo> parse_combo(std::string_view s);
void canonicalize(KeyCombo& combo);

}  // namespace aloha
