#include "aloha/simenv.hpp"

#include <algorithm>
#include <set>

#include "text_util.hpp"

namespace aloha {

namespace {

constexpr std::string_view kNoEffect = "no effect";

std::string json_quoted(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

std::string rect_str(const Rect& r) {
  return std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," + std::to_string(r.h);
}

std::string point_str(Point p) { return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")"; }

std::string parent_of(std::string_view path) {
  const auto pos = path.rfind('/');
  if (pos == std::string_view::npos || pos == 0) return "/";
  return std::string(path.substr(0, pos));
}

std::string basename_of(std::string_view path) {
  const auto pos = path.rfind('/');
  return std::string(pos == std::string_view::npos ? path : path.substr(pos + 1));
}

std::string extension_of(std::string_view path) {
  const std::string base = basename_of(path);
  const auto pos = base.rfind('.');
  return pos == std::string::npos ? std::string{} : base.substr(pos + 1);
}

Widget close_button(const Window& w) {
  Widget b;
  b.id = w.id + "/close";
  b.kind = WidgetKind::Button;
  b.label = "Close " + w.title;
  b.rect = {w.rect.w - 22, 2, 20, 20};
  b.chrome = true;
  b.effects = {Effect{Effect::Op::CloseWindow, w.id, {}}};
  return b;
}

Rect global_rect(const Window& win, const Widget& wd) {
  const int dy = wd.chrome ? 0 : -win.scroll;
  return {win.rect.x + wd.rect.x, win.rect.y + wd.rect.y + dy, wd.rect.w, wd.rect.h};
}

struct Located {
  Window* window = nullptr;
  Widget* widget = nullptr;
};

Located find_widget(SimState& s, std::string_view id) {
  for (auto& w : s.windows) {
    for (auto& wd : w.widgets) {
      if (wd.id == id) return {&w, &wd};
    }
  }
  return {};
}

const Window* top_window(const SimState& s) {
  return s.z.empty() ? nullptr : s.window(s.z.back());
}

const Window* window_at(const SimState& s, Point p) {
  for (auto it = s.z.rbegin(); it != s.z.rend(); ++it) {
    const Window* w = s.window(*it);
    if (w && w->rect.contains(p)) return w;
  }
  return nullptr;
}

// Topmost visible widget under p, honouring open menus and window stacking.
std::optional<PlacedWidget> widget_at(const SimState& s, Point p) {
  const auto placed = placed_widgets(s);
  for (auto it = placed.rbegin(); it != placed.rend(); ++it) {
    if (it->widget.kind == WidgetKind::MenuItem && it->rect.contains(p)) return *it;
  }
  const Window* w = window_at(s, p);
  if (!w) return std::nullopt;
  for (auto it = placed.rbegin(); it != placed.rend(); ++it) {
    if (it->window_id == w->id && it->visible && it->rect.contains(p) && it->widget.kind != WidgetKind::MenuItem) {
      return *it;
    }
  }
  return std::nullopt;
}

class Transition {
 public:
  explicit Transition(SimState& s) : s_(s) {}

  std::string result() const {
    if (notes_.empty()) return std::string(kNoEffect);
    std::string out;
    for (const auto& n : notes_) {
      if (!out.empty()) out += "; ";
      out += n;
    }
    return out;
  }
  bool changed() const { return !notes_.empty(); }

  void note(std::string n) { notes_.push_back(std::move(n)); }

  void raise(const std::string& id) {
    if (id == "desktop" || s_.z.empty() || s_.z.back() == id) return;
    auto it = std::find(s_.z.begin(), s_.z.end(), id);
    if (it == s_.z.end()) return;
    s_.z.erase(it);
    s_.z.push_back(id);
    note("raised " + id);
  }

  void open_window(const std::string& id) {
    Window* w = s_.window(id);
    if (!w) return;
    if (!w->open) {
      w->open = true;
      s_.z.push_back(id);
      note("opened " + id);
    } else {
      raise(id);
    }
  }

  void close_window(const std::string& id) {
    Window* w = s_.window(id);
    if (!w || !w->open || id == "desktop") return;
    w->open = false;
    s_.z.erase(std::remove(s_.z.begin(), s_.z.end(), id), s_.z.end());
    if (s_.focus) {
      auto loc = find_widget(s_, *s_.focus);
      if (loc.window == w) s_.focus.reset();
    }
    if (s_.open_menu) {
      for (const auto& m : w->menus) {
        if (m.id == *s_.open_menu) s_.open_menu.reset();
      }
    }
    note("closed " + id);
  }

  void fire(const std::vector<Effect>& effects, const std::string& owner) {
    for (const auto& e : effects) {
      const std::string target = e.target.empty() ? owner : e.target;
      switch (e.op) {
        case Effect::Op::OpenWindow: open_window(target); break;
        case Effect::Op::CloseWindow: close_window(target); break;
        case Effect::Op::OpenMenu:
          if (s_.open_menu != target) {
            s_.open_menu = target;
            note("menu " + target);
          }
          break;
        case Effect::Op::Focus: focus(target); break;
        case Effect::Op::Enable:
        case Effect::Op::Disable: {
          auto loc = find_widget(s_, target);
          const bool on = e.op == Effect::Op::Enable;
          if (loc.widget && loc.widget->enabled != on) {
            loc.widget->enabled = on;
            note(std::string(on ? "enabled " : "disabled ") + target);
          }
          break;
        }
        case Effect::Op::SetField: {
          auto loc = find_widget(s_, target);
          if (loc.widget && loc.widget->content != e.value) {
            loc.widget->content = e.value;
            loc.widget->select_all = false;
            if (loc.widget->kind == WidgetKind::Field) loc.widget->dirty = true;
            note("set " + target);
          }
          break;
        }
        case Effect::Op::Save: {
          if (auto loc = find_widget(s_, target); loc.widget) {
            save(*loc.widget);
          } else if (Window* w = s_.window(target)) {
            for (auto& wd : w->widgets) {
              if (wd.kind == WidgetKind::Field) save(wd);
            }
          }
          break;
        }
      }
    }
  }

  void focus(const std::string& id) {
    auto loc = find_widget(s_, id);
    if (!loc.widget || loc.widget->kind != WidgetKind::Field || s_.focus == id) return;
    s_.focus = id;
    note("focused " + id);
  }

  void save(Widget& wd) {
    if (wd.kind != WidgetKind::Field || (wd.saved && !wd.dirty)) return;
    wd.dirty = false;
    wd.saved = true;
    note("saved " + wd.id);
  }

  // Focused, enabled field in an open window.
  Widget* focused_field() {
    if (!s_.focus) return nullptr;
    auto loc = find_widget(s_, *s_.focus);
    if (!loc.widget || !loc.window->open || !loc.widget->enabled) return nullptr;
    return loc.widget;
  }

  void edit(Widget& f, std::string content) {
    if (content == f.content && f.dirty && !f.select_all) return;
    f.content = std::move(content);
    f.dirty = true;
    f.select_all = false;
    note("edited " + f.id);
  }

  void close_menu() {
    if (!s_.open_menu) return;
    note("closed menu " + *s_.open_menu);
    s_.open_menu.reset();
  }

  void click(Point p, MouseButton b) {
    s_.cursor = p;
    auto hit = widget_at(s_, p);
    if (s_.open_menu) {
      const bool on_item = hit && hit->widget.kind == WidgetKind::MenuItem;
      close_menu();
      if (on_item && b == MouseButton::L) {
        note("chose " + hit->widget.id);
        fire(hit->widget.effects, hit->window_id);
      }
      return;
    }
    if (b != MouseButton::L) return;
    const Window* w = window_at(s_, p);
    if (!w) return;
    const std::string wid = w->id;
    raise(wid);
    if (!hit) return;
    const Widget& wd = hit->widget;
    switch (wd.kind) {
      case WidgetKind::Button:
        if (wd.enabled) {
          note("pressed " + wd.id);
          fire(wd.effects, wid);
        }
        break;
      case WidgetKind::Field:
        if (wd.enabled) focus(wd.id);
        break;
      case WidgetKind::Icon:
        if (s_.selected != wd.id) {
          s_.selected = wd.id;
          note("selected " + wd.id);
        }
        break;
      default: break;
    }
  }

  void double_click(Point p, MouseButton b) {
    auto hit = widget_at(s_, p);
    if (!hit || hit->widget.kind != WidgetKind::Icon || b != MouseButton::L) {
      click(p, b);
      return;
    }
    s_.cursor = p;
    close_menu();
    const Widget& icon = hit->widget;
    if (!icon.opens.empty()) {
      open_window(icon.opens);
      return;
    }
    auto entry = s_.vfs.find(icon.fs_path);
    if (entry == s_.vfs.end()) return;
    if (entry->second.dir) {
      for (const auto& w : s_.windows) {
        if (w.folder == icon.fs_path) {
          open_window(w.id);
          return;
        }
      }
      Window w;
      w.id = "folder:" + icon.fs_path;
      w.title = basename_of(icon.fs_path);
      const int k = static_cast<int>(s_.windows.size());
      const Rect mon = s_.monitors.monitors.front().rect();
      w.rect = {mon.x + 120 + 24 * (k % 8), mon.y + 60 + 24 * (k % 8), std::min(560, mon.w - 140),
                std::min(400, mon.h - 80)};
      w.folder = icon.fs_path;
      s_.windows.push_back(w);
      open_window(w.id);
      return;
    }
    auto assoc = s_.associations.find(extension_of(icon.fs_path));
    if (assoc != s_.associations.end()) open_window(assoc->second);
  }

  void drag(std::span<const Point> path) {
    s_.cursor = path.back();
    close_menu();
    auto src = widget_at(s_, path.front());
    if (!src || src->widget.kind != WidgetKind::Icon || src->widget.fs_path.empty()) return;
    const std::string from = src->widget.fs_path;
    if (!s_.vfs.count(from)) return;

    std::string dest_dir;
    const Point drop = path.back();
    auto dst = widget_at(s_, drop);
    if (dst && dst->widget.kind == WidgetKind::Icon && dst->widget.fs_path != from) {
      auto e = s_.vfs.find(dst->widget.fs_path);
      if (e != s_.vfs.end() && e->second.dir) dest_dir = e->first;
    }
    if (dest_dir.empty()) {
      const Window* w = window_at(s_, drop);
      if (!w || !w->folder || !w->client().contains(drop)) return;
      dest_dir = *w->folder;
    }
    if (dest_dir == parent_of(from) || dest_dir == from || dest_dir.starts_with(from + "/")) return;
    const std::string to = (dest_dir == "/" ? std::string{} : dest_dir) + "/" + basename_of(from);
    if (s_.vfs.count(to)) return;

    std::vector<std::pair<std::string, VfsEntry>> moved;
    for (auto it = s_.vfs.begin(); it != s_.vfs.end();) {
      if (it->first == from || it->first.starts_with(from + "/")) {
        moved.emplace_back(to + it->first.substr(from.size()), it->second);
        it = s_.vfs.erase(it);
      } else {
        ++it;
      }
    }
    for (auto& [p, e] : moved) s_.vfs.emplace(std::move(p), std::move(e));
    for (auto& w : s_.windows) {
      if (w.folder && (*w.folder == from || w.folder->starts_with(from + "/"))) {
        w.folder = to + w.folder->substr(from.size());
      }
    }
    if (s_.selected == "icon:" + from) s_.selected = "icon:" + to;
    note("moved " + from + " to " + to);
  }

  void scroll(Point p, int notches) {
    s_.cursor = p;
    const Window* hit = window_at(s_, p);
    if (!hit) return;
    Window* w = s_.window(hit->id);
    const int next = std::clamp(w->scroll - notches * kScrollStepPx, 0, w->scroll_max);
    if (next == w->scroll) return;
    w->scroll = next;
    note("scrolled " + w->id + " to " + std::to_string(next));
  }

  void input(const std::string& text) {
    Widget* f = focused_field();
    if (!f || text.empty()) return;
    edit(*f, f->select_all ? text : f->content + text);
  }

  void key(const std::string& k) {
    if (k == "Backspace" || k == "Delete") {
      Widget* f = focused_field();
      if (!f) return;
      if (f->select_all) {
        edit(*f, "");
      } else if (k == "Backspace" && !f->content.empty()) {
        edit(*f, f->content.substr(0, f->content.size() - 1));
      }
    } else if (k == "Enter") {
      const Window* top = top_window(s_);
      if (!top || top->default_button.empty()) return;
      auto loc = find_widget(s_, top->default_button);
      if (!loc.widget || !loc.widget->enabled) return;
      note("pressed " + loc.widget->id);
      const std::vector<Effect> effects = loc.widget->effects;
      fire(effects, top->id);
    } else if (k == "Escape") {
      if (s_.open_menu) {
        close_menu();
        return;
      }
      const Window* top = top_window(s_);
      if (top && top->dialog) close_window(top->id);
    } else if (k == "Tab") {
      const Window* top = top_window(s_);
      if (!top) return;
      std::vector<std::string> fields;
      for (const auto& wd : top->widgets) {
        if (wd.kind == WidgetKind::Field && wd.enabled) fields.push_back(wd.id);
      }
      if (fields.empty()) return;
      auto it = s_.focus ? std::find(fields.begin(), fields.end(), *s_.focus) : fields.end();
      focus(it == fields.end() || std::next(it) == fields.end() ? fields.front() : *std::next(it));
    }
  }

  void hotkey(const KeyCombo& combo) {
    if (const Window* top = top_window(s_)) {
      for (const auto& wd : top->widgets) {
        if (wd.kind == WidgetKind::Button && wd.enabled && wd.hotkey == combo) {
          note("pressed " + wd.id);
          const std::vector<Effect> effects = wd.effects;
          fire(effects, top->id);
          return;
        }
      }
    }
    if (combo.mods != std::vector<Modifier>{Modifier::Ctrl}) return;
    const std::string& k = combo.key;
    if (k == "w") {
      const Window* top = top_window(s_);
      if (top) close_window(top->id);
      return;
    }
    Widget* f = focused_field();
    if (!f) return;
    if (k == "s") {
      save(*f);
    } else if (k == "a") {
      if (!f->select_all) {
        f->select_all = true;
        note("selected all in " + f->id);
      }
    } else if (k == "c" || k == "x") {
      if (s_.clipboard != f->content) {
        s_.clipboard = f->content;
        note("copied " + f->id);
      }
      if (k == "x" && !f->content.empty()) edit(*f, "");
    } else if (k == "v") {
      if (!s_.clipboard.empty()) edit(*f, f->select_all ? s_.clipboard : f->content + s_.clipboard);
    }
  }

 private:
  SimState& s_;
  std::vector<std::string> notes_;
};

}  // namespace

std::string_view to_string(WidgetKind k) {
  switch (k) {
    case WidgetKind::Button: return "button";
    case WidgetKind::Field: return "field";
    case WidgetKind::Text: return "text";
    case WidgetKind::Icon: return "icon";
    case WidgetKind::MenuItem: return "menu_item";
  }
  return "button";
}

std::optional<WidgetKind> parse_widget_kind(std::string_view s) {
  for (auto k : {WidgetKind::Button, WidgetKind::Field, WidgetKind::Text, WidgetKind::Icon, WidgetKind::MenuItem}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(Effect::Op op) {
  switch (op) {
    case Effect::Op::OpenWindow: return "open_window";
    case Effect::Op::CloseWindow: return "close_window";
    case Effect::Op::OpenMenu: return "open_menu";
    case Effect::Op::Focus: return "focus";
    case Effect::Op::Enable: return "enable";
    case Effect::Op::Disable: return "disable";
    case Effect::Op::SetField: return "set_field";
    case Effect::Op::Save: return "save";
  }
  return "open_window";
}

std::optional<Effect::Op> parse_effect_op(std::string_view s) {
  using Op = Effect::Op;
  for (auto op : {Op::OpenWindow, Op::CloseWindow, Op::OpenMenu, Op::Focus, Op::Enable, Op::Disable, Op::SetField,
                  Op::Save}) {
    if (to_string(op) == s) return op;
  }
  return std::nullopt;
}

Rect Window::client() const {
  if (!chrome) return rect;
  return {rect.x, rect.y + kTitleBarPx, rect.w, std::max(0, rect.h - kTitleBarPx)};
}

Window* SimState::window(std::string_view id) {
  for (auto& w : windows) {
    if (w.id == id) return &w;
  }
  return nullptr;
}

const Window* SimState::window(std::string_view id) const {
  for (const auto& w : windows) {
    if (w.id == id) return &w;
  }
  return nullptr;
}

std::vector<Widget> folder_icons(const SimState& s, const Window& w) {
  std::vector<Widget> icons;
  if (!w.folder) return icons;
  const std::string prefix = *w.folder == "/" ? "/" : *w.folder + "/";
  const int top = w.chrome ? kTitleBarPx : 0;
  const int cols = std::max(1, (w.rect.w - 16) / 96);
  int i = 0;
  for (const auto& [path, entry] : s.vfs) {
    if (!path.starts_with(prefix) || path.size() == prefix.size()) continue;
    if (path.find('/', prefix.size()) != std::string::npos) continue;
    Widget icon;
    icon.id = "icon:" + path;
    icon.kind = WidgetKind::Icon;
    icon.label = basename_of(path);
    icon.rect = {16 + (i % cols) * 96, top + 16 + (i / cols) * 80, 64, 56};
    icon.fs_path = path;
    icons.push_back(std::move(icon));
    ++i;
  }
  return icons;
}

std::vector<PlacedWidget> placed_widgets(const SimState& s) {
  std::vector<PlacedWidget> out;
  std::vector<PlacedWidget> menu_items;
  for (std::size_t zi = 0; zi < s.z.size(); ++zi) {
    const Window* w = s.window(s.z[zi]);
    if (!w) continue;
    const Rect client = w->client();
    auto place = [&](const Widget& wd) {
      PlacedWidget p;
      p.widget = wd;
      p.window_id = w->id;
      p.z = static_cast<int>(zi);
      p.rect = global_rect(*w, wd);
      p.visible = wd.chrome || client.contains(p.rect);
      out.push_back(std::move(p));
    };
    if (w->chrome) place(close_button(*w));
    for (const auto& wd : w->widgets) place(wd);
    for (const auto& icon : folder_icons(s, *w)) place(icon);
    for (const auto& m : w->menus) {
      if (s.open_menu != m.id) continue;
      for (std::size_t i = 0; i < m.items.size(); ++i) {
        PlacedWidget p;
        p.widget.id = m.id + "/" + std::to_string(i);
        p.widget.kind = WidgetKind::MenuItem;
        p.widget.label = m.items[i].label;
        p.widget.effects = m.items[i].effects;
        p.widget.chrome = true;
        p.window_id = w->id;
        p.z = static_cast<int>(s.z.size());
        p.rect = {w->rect.x + m.origin.x, w->rect.y + m.origin.y + static_cast<int>(i) * kMenuItemPx, m.width,
                  kMenuItemPx};
        p.widget.rect = p.rect;
        menu_items.push_back(std::move(p));
      }
    }
  }
  for (auto& m : menu_items) out.push_back(std::move(m));
  return out;
}

void validate(const SimState& s) {
  validate(s.monitors);
  auto on_screen = [&](const Rect& r) {
    return s.monitors.contains({r.x, r.y}) && s.monitors.contains({r.x + r.w - 1, r.y + r.h - 1});
  };
  std::set<std::string> window_ids, widget_ids;
  for (const auto& w : s.windows) {
    if (!window_ids.insert(w.id).second) fail(ErrorCode::InvariantViolation, "duplicate window id " + w.id);
    if (w.rect.w <= 0 || w.rect.h <= 0 || !on_screen(w.rect)) {
      fail(ErrorCode::InvariantViolation, "window " + w.id + " is not inside the monitors");
    }
    const Rect local{0, 0, w.rect.w, w.rect.h + w.scroll_max};
    for (const auto& wd : w.widgets) {
      if (!widget_ids.insert(wd.id).second) fail(ErrorCode::InvariantViolation, "duplicate widget id " + wd.id);
      if (wd.rect.w <= 0 || wd.rect.h <= 0 || !local.contains(wd.rect)) {
        fail(ErrorCode::InvariantViolation, "widget " + wd.id + " lies outside window " + w.id);
      }
    }
    if (w.scroll < 0 || w.scroll > w.scroll_max) fail(ErrorCode::InvariantViolation, "bad scroll in " + w.id);
    if (w.folder && (!s.vfs.count(*w.folder) || !s.vfs.at(*w.folder).dir)) {
      fail(ErrorCode::InvariantViolation, "window " + w.id + " shows missing folder " + *w.folder);
    }
  }
  std::set<std::string> seen;
  for (const auto& id : s.z) {
    if (!seen.insert(id).second) fail(ErrorCode::InvariantViolation, "window " + id + " appears twice in z-order");
    const Window* w = s.window(id);
    if (!w || !w->open) fail(ErrorCode::InvariantViolation, "z-order names closed or unknown window " + id);
  }
  for (const auto& w : s.windows) {
    if (w.open && !seen.count(w.id)) fail(ErrorCode::InvariantViolation, "open window " + w.id + " missing from z");
  }
  for (const auto& [path, e] : s.vfs) {
    if (!path.starts_with("/")) fail(ErrorCode::InvariantViolation, "vfs path must be absolute: " + path);
    const std::string parent = parent_of(path);
    if (parent != "/" && (!s.vfs.count(parent) || !s.vfs.at(parent).dir)) {
      fail(ErrorCode::InvariantViolation, "vfs parent missing for " + path);
    }
  }
  if (s.focus && !widget_ids.count(*s.focus)) fail(ErrorCode::InvariantViolation, "focus names unknown widget");
}

void apply_in_place(SimState& s, const ExecCommand& cmd) {
  if (!cmd.grounded()) fail(ErrorCode::BadValue, "simulator needs grounded commands");
  Transition tr(s);
  EffectEntry entry;
  entry.primitive = std::string(to_string(cmd.type));
  auto at = [&] { return std::get<Point>(*cmd.target); };
  std::string effect;
  switch (cmd.type) {
    case CommandType::Click:
      entry.at = at();
      tr.click(at(), cmd.button);
      break;
    case CommandType::DoubleClick:
      entry.at = at();
      tr.double_click(at(), cmd.button);
      break;
    case CommandType::Move:
      entry.at = at();
      if (s.cursor != at()) effect = "cursor " + point_str(at());
      s.cursor = at();
      break;
    case CommandType::Drag: {
      std::vector<Point> pts;
      for (const auto& t : cmd.path) pts.push_back(std::get<Point>(t));
      entry.at = pts.back();
      tr.drag(pts);
      break;
    }
    case CommandType::Scroll:
      entry.at = at();
      tr.scroll(at(), cmd.notches.value_or(0));
      break;
    case CommandType::Input: tr.input(cmd.text.value_or("")); break;
    case CommandType::Key: tr.key(cmd.key.value_or("")); break;
    case CommandType::Hotkey: tr.hotkey(cmd.combo.value_or(KeyCombo{})); break;
    case CommandType::Wait:
      s.clock_ms += cmd.ms.value_or(0);
      effect = "waited " + std::to_string(cmd.ms.value_or(0)) + " ms";
      break;
    case CommandType::Screenshot: effect = "screenshot"; break;
    case CommandType::CursorPosition: effect = "cursor at " + point_str(s.cursor); break;
  }
  entry.t = s.clock_ms;
  entry.changed = tr.changed();
  entry.effect = effect.empty() ? tr.result() : effect;
  s.effect_log.push_back(std::move(entry));
}

SimState apply_primitive(SimState s, const ExecCommand& cmd) {
  apply_in_place(s, cmd);
  return s;
}

bool ObservationDigest::same_state(const ObservationDigest& other) const {
  auto strip = [](std::string_view t) {
    const auto pos = t.rfind("\ncursor ");
    return pos == std::string_view::npos ? t : t.substr(0, pos);
  };
  return strip(text) == strip(other.text);
}

const DigestWindow* ObservationDigest::window_titled(std::string_view title) const {
  const std::string want = detail::lower(title);
  for (auto it = windows.rbegin(); it != windows.rend(); ++it) {
    if (detail::lower(it->title) == want) return &*it;
  }
  return nullptr;
}

ObservationDigest observe(const SimState& s) {
  ObservationDigest d;
  std::string& t = d.text;
  for (const auto& m : s.monitors.monitors) {
    d.monitors.push_back(m);
    t += "monitor id=" + std::to_string(m.id) + " rect=" + rect_str(m.rect()) + "\n";
  }
  for (std::size_t zi = 0; zi < s.z.size(); ++zi) {
    const Window* w = s.window(s.z[zi]);
    DigestWindow dw{static_cast<int>(zi), w->id, w->title, w->rect, w->client(), w->dialog};
    t += "window z=" + std::to_string(zi) + " id=" + w->id + " title=" + json_quoted(w->title) + " rect=" + rect_str(w->rect);
    if (w->dialog) t += " dialog=1";
    if (w->scroll_max > 0) t += " scroll=" + std::to_string(w->scroll) + "/" + std::to_string(w->scroll_max);
    t += "\n";
    d.windows.push_back(std::move(dw));
  }
  for (const auto& p : placed_widgets(s)) {
    const Widget& wd = p.widget;
    DigestWidget dw;
    dw.id = wd.id;
    dw.window_id = p.window_id;
    dw.z = p.z;
    dw.kind = wd.kind;
    dw.label = wd.label;
    dw.rect = p.rect;
    dw.visible = p.visible;
    dw.enabled = wd.enabled;
    dw.selected = s.selected == wd.id;
    dw.dirty = wd.dirty;
    dw.saved = wd.saved;
    dw.content = wd.content;
    dw.hotkey = wd.hotkey ? to_string(*wd.hotkey) : "";
    dw.path = wd.fs_path;
    t += "widget win=" + p.window_id + " id=" + wd.id + " kind=" + std::string(to_string(wd.kind)) +
         " label=" + json_quoted(wd.label) + " rect=" + rect_str(p.rect);
    if (!p.visible) t += " hidden=1";
    if (!wd.enabled) t += " enabled=0";
    if (dw.selected) t += " selected=1";
    if (wd.kind == WidgetKind::Field || wd.kind == WidgetKind::Text) t += " content=" + json_quoted(wd.content);
    if (wd.kind == WidgetKind::Field) {
      t += " dirty=" + std::string(wd.dirty ? "1" : "0") + " saved=" + std::string(wd.saved ? "1" : "0");
      if (wd.select_all) t += " select_all=1";
    }
    if (!dw.hotkey.empty()) t += " hotkey=" + dw.hotkey;
    if (!dw.path.empty()) t += " path=" + json_quoted(dw.path);
    t += "\n";
    d.widgets.push_back(std::move(dw));
  }
  if (s.open_menu) t += "menu " + *s.open_menu + "\n";
  if (!s.z.empty()) t += "focus " + (s.focus ? *s.focus : std::string("-")) + "\n";
  if (!s.clipboard.empty()) t += "clipboard " + json_quoted(s.clipboard) + "\n";
  d.focus = s.focus;
  d.clipboard = s.clipboard;
  d.cursor = s.cursor;
  t += "cursor " + std::to_string(s.cursor.x) + "," + std::to_string(s.cursor.y) + "\n";
  return d;
}

Rgb widget_color(std::string_view id) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)};
}

Raster render(const SimState& s, const RenderOptions& opts) {
  const Monitor& mon = s.monitors.monitors.front();
  Raster r(mon.w, mon.h, {46, 84, 122});
  auto fill = [&](const Rect& g, Rgb c) { r.fill_rect(g.x - mon.x, g.y - mon.y, g.w, g.h, c); };
  const auto placed = placed_widgets(s);
  for (std::size_t zi = 0; zi < s.z.size(); ++zi) {
    const Window* w = s.window(s.z[zi]);
    if (w->id != "desktop") fill(w->rect, {224, 224, 224});
    if (w->chrome) fill({w->rect.x, w->rect.y, w->rect.w, kTitleBarPx}, {64, 64, 72});
    for (const auto& p : placed) {
      if (p.z == static_cast<int>(zi) && p.visible && p.widget.kind != WidgetKind::MenuItem) {
        fill(p.rect, widget_color(p.widget.id));
      }
    }
  }
  for (const auto& p : placed) {
    if (p.widget.kind == WidgetKind::MenuItem) fill(p.rect, widget_color(p.widget.id));
  }
  if (opts.mark_last_effect && !s.effect_log.empty() && s.effect_log.back().at) {
    const Point c = *s.effect_log.back().at;
    for (int d = -6; d <= 6; ++d) {
      fill({c.x + d, c.y + d, 1, 1}, {255, 0, 0});
      fill({c.x + d, c.y - d, 1, 1}, {255, 0, 0});
    }
  }
  return r;
}

std::string SimActuator::run(const ExecCommand& cmd) {
  apply_in_place(s_, cmd);
  return s_.effect_log.back().effect;
}

std::string SimActuator::click(Point p, MouseButton b) { return run(ExecCommand::click(p, b)); }
std::string SimActuator::double_click(Point p, MouseButton b) { return run(ExecCommand::double_click(p, b)); }
std::string SimActuator::move(Point p) { return run(ExecCommand::move(p)); }
std::string SimActuator::drag(std::span<const Point> path, MouseButton b) {
  return run(ExecCommand::drag(std::vector<Target>(path.begin(), path.end()), b));
}
std::string SimActuator::scroll(Point p, int notches) { return run(ExecCommand::scroll(p, notches)); }
std::string SimActuator::type_text(const std::string& text) { return run(ExecCommand::input(text)); }
std::string SimActuator::key(const std::string& key) { return run(ExecCommand::key_press(key)); }
std::string SimActuator::hotkey(const KeyCombo& combo) { return run(ExecCommand::hotkey(combo)); }
std::string SimActuator::wait(std::int64_t ms) { return run(ExecCommand::wait(ms)); }

Raster SimActuator::screenshot() {
  run(ExecCommand::screenshot());
  return aloha::render(s_);
}

Point SimActuator::cursor_position() {
  run(ExecCommand::cursor_position());
  return s_.cursor;
}

}  // namespace aloha
