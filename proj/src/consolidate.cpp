#include "aloha/consolidate.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "aloha/error.hpp"
#include "json_io.hpp"
#include "text_util.hpp"

namespace aloha {

namespace {

constexpr std::array<std::pair<ActionKind, std::string_view>, 7> kActionNames = {{
    {ActionKind::Click, "click"},
    {ActionKind::DoubleClick, "double_click"},
    {ActionKind::Drag, "drag"},
    {ActionKind::Type, "type"},
    {ActionKind::Key, "key"},
    {ActionKind::Hotkey, "hotkey"},
    {ActionKind::Scroll, "scroll"},
}};

std::int64_t dist2(Point a, Point b) {
  const std::int64_t dx = a.x - b.x;
  const std::int64_t dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct Press {
  std::int64_t t = 0;
  Point origin;
  std::vector<Point> path;
  std::int64_t max_d2 = 0;

  void extend(Point p) {
    if (path.back() != p) path.push_back(p);
    max_d2 = std::max(max_d2, dist2(origin, p));
  }
};

struct TypingSegment {
  std::int64_t t_start = 0;
  std::int64_t t_last = 0;
  std::string buffer;
};

struct ScrollRun {
  std::int64_t t_start = 0;
  std::int64_t t_last = 0;
  Point point;
  int sign = 0;
  std::int64_t sum = 0;
};

struct Emitted {
  SemanticAction action;
  bool long_press = false;
};

class Consolidator {
 public:
  explicit Consolidator(const ConsolidationConfig& cfg) : cfg_(cfg) {}

  void feed(const RawEvent& e) {
    switch (e.kind) {
      case EventKind::MouseDown: on_mouse_down(e); break;
      case EventKind::MouseUp: on_mouse_up(e); break;
      case EventKind::MouseMove: on_mouse_move(e); break;
      case EventKind::Scroll: on_scroll(e); break;
      case EventKind::KeyDown: on_key_down(e); break;
      case EventKind::KeyUp: on_key_up(e); break;
    }
  }

  std::vector<SemanticAction> finish() {
    close_typing();
    close_scroll();
    std::stable_sort(out_.begin(), out_.end(), [](const Emitted& a, const Emitted& b) {
      return a.action.t_start < b.action.t_start;
    });
    return fold_double_clicks();
  }

 private:
  static int index(MouseButton b) { return static_cast<int>(b); }

  bool modifier_held(Modifier m) const { return held_mods_[static_cast<int>(m)]; }
  bool command_modifier_held() const {
    return modifier_held(Modifier::Ctrl) || modifier_held(Modifier::Alt) || modifier_held(Modifier::Meta);
  }

  KeyCombo held_combo(const std::string& key) const {
    KeyCombo combo;
    for (Modifier m : {Modifier::Ctrl, Modifier::Alt, Modifier::Shift, Modifier::Meta}) {
      if (modifier_held(m)) combo.mods.push_back(m);
    }
    combo.key = key;
    return combo;
  }

  void emit(SemanticAction a, bool long_press = false) { out_.push_back({std::move(a), long_press}); }

  void on_mouse_down(const RawEvent& e) {
    close_typing();
    close_scroll();
    Press p;
    p.t = e.t;
    p.origin = *e.pos;
    p.path.push_back(*e.pos);
    pressed_[index(*e.button)] = std::move(p);
  }

  void on_mouse_move(const RawEvent& e) {
    // Hover outside a pressed interval carries no semantic action.
    for (auto& p : pressed_) {
      if (p) p->extend(*e.pos);
    }
  }

  void on_mouse_up(const RawEvent& e) {
    close_typing();
    close_scroll();
    auto& slot = pressed_[index(*e.button)];
    if (!slot) return;
    Press p = std::move(*slot);
    slot.reset();
    p.extend(*e.pos);
    const std::int64_t limit = static_cast<std::int64_t>(cfg_.click_max_px) * cfg_.click_max_px;
    if (p.max_d2 > limit) {
      emit(SemanticAction::drag(p.t, e.t, *e.button, std::move(p.path)));
    } else {
      emit(SemanticAction::click(p.t, e.t, *e.button, p.origin), e.t - p.t > cfg_.click_max_ms);
    }
  }

  void on_scroll(const RawEvent& e) {
    close_typing();
    const int dy = e.delta->y;
    if (dy == 0) return;
    const int sign = dy > 0 ? 1 : -1;
    if (scroll_ && scroll_->sign == sign && e.t - scroll_->t_last <= cfg_.scroll_gap_ms) {
      scroll_->sum += dy;
      scroll_->t_last = e.t;
      return;
    }
    close_scroll();
    scroll_ = ScrollRun{e.t, e.t, *e.pos, sign, dy};
  }

  void on_key_down(const RawEvent& e) {
    close_scroll();
    const std::string& key = *e.key;
    if (auto mod = parse_modifier(key)) {
      held_mods_[static_cast<int>(*mod)] = true;
      return;
    }
    if (command_modifier_held()) {
      close_typing();
      emit(SemanticAction::hotkey(e.t, held_combo(key)));
      return;
    }
    const bool printable = is_printable_token(key) || key == "Space";
    if (printable) {
      expire_typing(e.t);
      if (!typing_) typing_ = TypingSegment{e.t, e.t, {}};
      char c = key == "Space" ? ' ' : key[0];
      if (modifier_held(Modifier::Shift)) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      typing_->buffer.push_back(c);
      typing_->t_last = e.t;
      return;
    }
    if (key == "Backspace") {
      expire_typing(e.t);
      if (typing_ && !typing_->buffer.empty()) {
        typing_->buffer.pop_back();
        typing_->t_last = e.t;
        return;
      }
      close_typing();
      emit(SemanticAction::key_press(e.t, key));
      return;
    }
    close_typing();
    if (modifier_held(Modifier::Shift)) {
      emit(SemanticAction::hotkey(e.t, held_combo(key)));
    } else {
      emit(SemanticAction::key_press(e.t, key));
    }
  }

  void on_key_up(const RawEvent& e) {
    if (auto mod = parse_modifier(*e.key)) held_mods_[static_cast<int>(*mod)] = false;
  }

  void expire_typing(std::int64_t t) {
    if (typing_ && t - typing_->t_last > cfg_.type_gap_ms) close_typing();
  }

  void close_typing() {
    if (typing_ && !typing_->buffer.empty()) {
      emit(SemanticAction::type(typing_->t_start, typing_->t_last, std::move(typing_->buffer)));
    }
    typing_.reset();
  }

  void close_scroll() {
    if (!scroll_) return;
    const double units = static_cast<double>(scroll_->sum) / cfg_.scroll_notch_units;
    int notches = static_cast<int>(std::llround(units));
    if (notches == 0) notches = scroll_->sign;
    emit(SemanticAction::scroll(scroll_->t_start, scroll_->t_last, scroll_->point, notches));
    scroll_.reset();
  }

  // Adjacent same-button clicks close in space and time become one
  // DoubleClick at the first click's point; runs fold pairwise left to right.
  std::vector<SemanticAction> fold_double_clicks() {
    const std::int64_t px2 = static_cast<std::int64_t>(cfg_.dblclick_px) * cfg_.dblclick_px;
    std::vector<SemanticAction> result;
    result.reserve(out_.size());
    for (std::size_t i = 0; i < out_.size(); ++i) {
      const auto& a = out_[i];
      if (i + 1 < out_.size()) {
        const auto& b = out_[i + 1];
        const bool both_clicks = a.action.kind == ActionKind::Click && b.action.kind == ActionKind::Click;
        if (both_clicks && !a.long_press && !b.long_press && a.action.button == b.action.button &&
            dist2(*a.action.point, *b.action.point) <= px2 &&
            b.action.t_start - a.action.t_end <= cfg_.dblclick_gap_ms) {
          result.push_back(SemanticAction::double_click(a.action.t_start, b.action.t_end,
                                                        *a.action.button, *a.action.point));
          ++i;
          continue;
        }
      }
      result.push_back(a.action);
    }
    return result;
  }

  ConsolidationConfig cfg_;
  std::array<std::optional<Press>, 3> pressed_;
  std::array<bool, 4> held_mods_{};
  std::optional<TypingSegment> typing_;
  std::optional<ScrollRun> scroll_;
  std::vector<Emitted> out_;
};

void require(bool cond, std::size_t index, const std::string& what) {
  if (!cond) fail(ErrorCode::InvariantViolation, "action " + std::to_string(index) + ": " + what);
}

void check_action(const SemanticAction& a, std::size_t i) {
  require(a.t_start >= 0 && a.t_start <= a.t_end, i, "t_start must satisfy 0 <= t_start <= t_end");
  const bool pointer = a.kind == ActionKind::Click || a.kind == ActionKind::DoubleClick || a.kind == ActionKind::Drag;
  const bool has_point = a.kind == ActionKind::Click || a.kind == ActionKind::DoubleClick || a.kind == ActionKind::Scroll;
  require(a.button.has_value() == pointer, i, "button presence does not match kind");
  require(a.point.has_value() == has_point, i, "point presence does not match kind");
  require((a.kind == ActionKind::Drag) ? a.path.size() >= 2 : a.path.empty(), i, "path presence does not match kind");
  require(a.text.has_value() == (a.kind == ActionKind::Type), i, "text presence does not match kind");
  require(a.key.has_value() == (a.kind == ActionKind::Key), i, "key presence does not match kind");
  require(a.combo.has_value() == (a.kind == ActionKind::Hotkey), i, "combo presence does not match kind");
  require(a.notches.has_value() == (a.kind == ActionKind::Scroll), i, "notches presence does not match kind");
  if (a.text) {
    require(!a.text->empty(), i, "type text must be non-empty");
    for (unsigned char c : *a.text) require(c >= 0x20 && c < 0x7F, i, "type text contains a control character");
  }
  if (a.key) require(is_named_key(*a.key) && !is_modifier_token(*a.key), i, "key must be a named non-modifier key");
  if (a.combo) {
    require(!a.combo->mods.empty(), i, "hotkey needs at least one modifier");
    require(is_valid_key_token(a.combo->key) && !is_modifier_token(a.combo->key), i, "hotkey base key invalid");
  }
  if (a.notches) require(*a.notches != 0, i, "scroll notches must be nonzero");
  if (a.kind == ActionKind::Drag) require(a.path.front() != a.path.back() || a.path.size() > 2, i, "degenerate drag path");
}

}  // namespace

std::string_view to_string(ActionKind k) {
  for (const auto& [kind, name] : kActionNames) {
    if (kind == k) return name;
  }
  return "click";
}

std::optional<ActionKind> parse_action_kind(std::string_view s) {
  for (const auto& [kind, name] : kActionNames) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

bool has_geometry(ActionKind k) {
  return k == ActionKind::Click || k == ActionKind::DoubleClick || k == ActionKind::Drag || k == ActionKind::Scroll;
}

SemanticAction SemanticAction::click(std::int64_t t0, std::int64_t t1, MouseButton b, Point p) {
  SemanticAction a;
  a.kind = ActionKind::Click;
  a.t_start = t0;
  a.t_end = t1;
  a.button = b;
  a.point = p;
  return a;
}

SemanticAction SemanticAction::double_click(std::int64_t t0, std::int64_t t1, MouseButton b, Point p) {
  SemanticAction a = click(t0, t1, b, p);
  a.kind = ActionKind::DoubleClick;
  return a;
}

SemanticAction SemanticAction::drag(std::int64_t t0, std::int64_t t1, MouseButton b, std::vector<Point> path) {
  SemanticAction a;
  a.kind = ActionKind::Drag;
  a.t_start = t0;
  a.t_end = t1;
  a.button = b;
  a.path = std::move(path);
  return a;
}

SemanticAction SemanticAction::type(std::int64_t t0, std::int64_t t1, std::string text) {
  SemanticAction a;
  a.kind = ActionKind::Type;
  a.t_start = t0;
  a.t_end = t1;
  a.text = std::move(text);
  return a;
}

SemanticAction SemanticAction::key_press(std::int64_t t, std::string key) {
  SemanticAction a;
  a.kind = ActionKind::Key;
  a.t_start = t;
  a.t_end = t;
  a.key = std::move(key);
  return a;
}

SemanticAction SemanticAction::hotkey(std::int64_t t, KeyCombo combo) {
  SemanticAction a;
  a.kind = ActionKind::Hotkey;
  a.t_start = t;
  a.t_end = t;
  canonicalize(combo);
  a.combo = std::move(combo);
  return a;
}

SemanticAction SemanticAction::scroll(std::int64_t t0, std::int64_t t1, Point p, int notches) {
  SemanticAction a;
  a.kind = ActionKind::Scroll;
  a.t_start = t0;
  a.t_end = t1;
  a.point = p;
  a.notches = notches;
  return a;
}

void validate(const ConsolidationConfig& cfg) {
  const bool ok = cfg.click_max_ms > 0 && cfg.click_max_px > 0 && cfg.dblclick_gap_ms > 0 &&
                  cfg.dblclick_px > 0 && cfg.type_gap_ms > 0 && cfg.scroll_gap_ms > 0 &&
                  cfg.scroll_notch_units > 0;
  if (!ok) fail(ErrorCode::InvariantViolation, "consolidation thresholds must be positive");
}

std::vector<SemanticAction> consolidate(const RawLog& log, const ConsolidationConfig& cfg) {
  validate(cfg);
  validate(log);
  Consolidator c(cfg);
  for (const auto& e : log.events) c.feed(e);
  return c.finish();
}

std::string reconstruct_text(const std::vector<std::string>& keys) {
  std::string buffer;
  for (const auto& k : keys) {
    if (is_printable_token(k)) {
      buffer.push_back(k[0]);
    } else if (k == "Space") {
      buffer.push_back(' ');
    } else if (k == "Backspace") {
      if (!buffer.empty()) buffer.pop_back();
    } else {
      fail(ErrorCode::UnsupportedKey, k);
    }
  }
  return buffer;
}

void validate(const SemanticAction& a) { check_action(a, 0); }

void validate(const std::vector<SemanticAction>& actions) {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    check_action(actions[i], i);
    if (i > 0) require(actions[i - 1].t_start <= actions[i].t_start, i, "actions not sorted by t_start");
  }
}

std::string write_cleaned_log(const std::vector<SemanticAction>& actions) {
  validate(actions);
  std::string out;
  for (const auto& a : actions) {
    out += detail::to_json(a).dump();
    out += '\n';
  }
  return out;
}

std::vector<SemanticAction> read_cleaned_log(std::string_view text) {
  std::vector<SemanticAction> actions;
  auto lines = detail::split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::MalformedLine, e.what(), i + 1);
    }
    try {
      actions.push_back(detail::action_from_json(j));
    } catch (const Error& e) {
      fail(ErrorCode::SchemaError, e.what(), i + 1);
    }
  }
  validate(actions);
  return actions;
}

}  // namespace aloha
