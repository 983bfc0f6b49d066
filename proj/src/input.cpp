#include "aloha/input.hpp"

#include <algorithm>

namespace aloha {

std::string_view to_string(MouseButton b) {
  switch (b) {
    case MouseButton::L: return "L";
    case MouseButton::R: return "R";
    case MouseButton::M: return "M";
  }
  return "L";
}

std::optional<MouseButton> parse_button(std::string_view s) {
  if (s == "L") return MouseButton::L;
  if (s == "R") return MouseButton::R;
  if (s == "M") return MouseButton::M;
  return std::nullopt;
}

std::string_view to_string(Modifier m) {
  switch (m) {
    case Modifier::Ctrl: return "Ctrl";
    case Modifier::Alt: return "Alt";
    case Modifier::Shift: return "Shift";
    case Modifier::Meta: return "Meta";
  }
  return "Ctrl";
}

std::optional<Modifier> parse_modifier(std::string_view s) {
  if (s == "Ctrl") return Modifier::Ctrl;
  if (s == "Alt") return Modifier::Alt;
  if (s == "Shift") return Modifier::Shift;
  if (s == "Meta") return Modifier::Meta;
  return std::nullopt;
}

const std::vector<std::string>& named_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k = {"Backspace", "Enter", "Tab",  "Escape", "Space", "Delete", "Ctrl",
                                  "Alt",       "Shift", "Meta", "Up",     "Down",  "Left",   "Right"};
    for (int i = 1; i <= 12; ++i) k.push_back("F" + std::to_string(i));
    return k;
  }();
  return keys;
}

bool is_printable_token(std::string_view token) {
  return token.size() == 1 && token[0] >= 0x21 && token[0] <= 0x7E;
}

bool is_named_key(std::string_view token) {
  const auto& keys = named_keys();
  return std::find(keys.begin(), keys.end(), token) != keys.end();
}

bool is_valid_key_token(std::string_view token) {
  return is_printable_token(token) || is_named_key(token);
}

bool is_modifier_token(std::string_view token) { return parse_modifier(token).has_value(); }

void canonicalize(KeyCombo& combo) {
  std::sort(combo.mods.begin(), combo.mods.end());
  combo.mods.erase(std::unique(combo.mods.begin(), combo.mods.end()), combo.mods.end());
}

std::string to_string(const KeyCombo& combo) {
  std::string out;
  for (Modifier m : combo.mods) {
    out += to_string(m);
    out += '+';
  }
  out += combo.key;
  return out;
}

std::optional<KeyCombo> parse_combo(std::string_view s) {
  if (s.empty()) return std::nullopt;
  KeyCombo combo;
  std::string_view rest = s;
  if (rest.size() >= 2 && rest.substr(rest.size() - 2) == "++") {
    combo.key = "+";
    rest.remove_suffix(2);
  } else if (rest == "+") {
    combo.key = "+";
    rest = {};
  } else {
    auto pos = rest.rfind('+');
    if (pos == std::string_view::npos) {
      combo.key = std::string(rest);
      rest = {};
    } else {
      combo.key = std::string(rest.substr(pos + 1));
      rest = rest.substr(0, pos);
    }
  }
  while (!rest.empty()) {
    auto pos = rest.find('+');
    auto part = rest.substr(0, pos);
    auto mod = parse_modifier(part);
    if (!mod) return std::nullopt;
    combo.mods.push_back(*mod);
    rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
  }
  if (!is_valid_key_token(combo.key) || is_modifier_token(combo.key)) return std::nullopt;
  canonicalize(combo);
  return combo;
}

}  // namespace aloha
