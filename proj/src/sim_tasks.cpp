#include <algorithm>
#include <fstream>
#include <sstream>

#include "aloha/simenv.hpp"
#include "trace_json.hpp"

namespace aloha {

namespace {

using detail::ojson;

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  fail(ErrorCode::SchemaError, where + ": " + what);
}

template <typename T>
T opt(const ojson& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return detail::get_as<T>(j, key, where);
}

Rect rect_from(const ojson& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) schema(where, "rect must be [x, y, w, h]");
  for (const auto& v : j) {
    if (!v.is_number_integer()) schema(where, "rect entries must be integers");
  }
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

std::vector<Effect> effects_from(const ojson& j, const std::string& where) {
  std::vector<Effect> out;
  if (!j.is_array()) schema(where, "effects must be an array");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    const auto& e = j[i];
    if (!e.is_object()) schema(at, "effect must be an object");
    detail::reject_unknown_keys(e, {"op", "target", "value"}, at);
    auto op = parse_effect_op(detail::get_as<std::string>(e, "op", at));
    if (!op) schema(at, "unknown effect op");
    out.push_back({*op, opt<std::string>(e, "target", "", at), opt<std::string>(e, "value", "", at)});
  }
  return out;
}

Widget widget_from(const ojson& j, const std::string& where) {
  if (!j.is_object()) schema(where, "widget must be an object");
  detail::reject_unknown_keys(j,
                              {"id", "kind", "label", "rect", "chrome", "enabled", "effects", "hotkey", "content",
                               "dirty", "saved", "fs_path", "opens"},
                              where);
  Widget w;
  w.id = detail::get_as<std::string>(j, "id", where);
  auto kind = parse_widget_kind(detail::get_as<std::string>(j, "kind", where));
  if (!kind || *kind == WidgetKind::MenuItem) schema(where + ".kind", "expected button, field, text or icon");
  w.kind = *kind;
  w.label = opt<std::string>(j, "label", "", where);
  w.rect = rect_from(detail::need(j, "rect", where), where + ".rect");
  w.chrome = opt<bool>(j, "chrome", false, where);
  w.enabled = opt<bool>(j, "enabled", true, where);
  if (j.contains("effects")) w.effects = effects_from(j["effects"], where + ".effects");
  if (j.contains("hotkey")) {
    auto combo = parse_combo(detail::get_as<std::string>(j, "hotkey", where));
    if (!combo) schema(where + ".hotkey", "bad combo");
    w.hotkey = *combo;
  }
  w.content = opt<std::string>(j, "content", "", where);
  w.dirty = opt<bool>(j, "dirty", false, where);
  w.saved = opt<bool>(j, "saved", false, where);
  w.fs_path = opt<std::string>(j, "fs_path", "", where);
  w.opens = opt<std::string>(j, "opens", "", where);
  return w;
}

Window window_from(const ojson& j, const std::string& where) {
  if (!j.is_object()) schema(where, "window must be an object");
  detail::reject_unknown_keys(j,
                              {"id", "title", "rect", "chrome", "dialog", "open", "folder", "widgets", "menus",
                               "default_button", "scroll", "scroll_max"},
                              where);
  Window w;
  w.id = detail::get_as<std::string>(j, "id", where);
  w.title = detail::get_as<std::string>(j, "title", where);
  w.rect = rect_from(detail::need(j, "rect", where), where + ".rect");
  w.chrome = opt<bool>(j, "chrome", true, where);
  w.dialog = opt<bool>(j, "dialog", false, where);
  w.open = opt<bool>(j, "open", false, where);
  if (j.contains("folder")) w.folder = detail::get_as<std::string>(j, "folder", where);
  w.default_button = opt<std::string>(j, "default_button", "", where);
  w.scroll = opt<int>(j, "scroll", 0, where);
  w.scroll_max = opt<int>(j, "scroll_max", 0, where);
  if (j.contains("widgets")) {
    const auto& ws = j["widgets"];
    if (!ws.is_array()) schema(where + ".widgets", "must be an array");
    for (std::size_t i = 0; i < ws.size(); ++i) {
      w.widgets.push_back(widget_from(ws[i], where + ".widgets[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("menus")) {
    const auto& ms = j["menus"];
    if (!ms.is_array()) schema(where + ".menus", "must be an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string at = where + ".menus[" + std::to_string(i) + "]";
      const auto& mj = ms[i];
      if (!mj.is_object()) schema(at, "menu must be an object");
      detail::reject_unknown_keys(mj, {"id", "origin", "width", "items"}, at);
      Menu m;
      m.id = detail::get_as<std::string>(mj, "id", at);
      m.origin = detail::point_from(detail::need(mj, "origin", at), at + ".origin");
      m.width = opt<int>(mj, "width", 160, at);
      const auto& items = detail::need(mj, "items", at);
      if (!items.is_array()) schema(at + ".items", "must be an array");
      for (std::size_t k = 0; k < items.size(); ++k) {
        const std::string it = at + ".items[" + std::to_string(k) + "]";
        if (!items[k].is_object()) schema(it, "menu item must be an object");
        detail::reject_unknown_keys(items[k], {"label", "effects"}, it);
        MenuItem mi;
        mi.label = detail::get_as<std::string>(items[k], "label", it);
        if (items[k].contains("effects")) mi.effects = effects_from(items[k]["effects"], it + ".effects");
        m.items.push_back(std::move(mi));
      }
      w.menus.push_back(std::move(m));
    }
  }
  return w;
}

Check check_from(const ojson& j, const std::string& where) {
  if (!j.is_object()) schema(where, "check must be an object");
  const std::string kind = detail::get_as<std::string>(j, "check", where);
  Check c;
  if (kind == "file_exists" || kind == "file_absent") {
    detail::reject_unknown_keys(j, {"check", "path"}, where);
    c.kind = kind == "file_exists" ? Check::Kind::FileExists : Check::Kind::FileAbsent;
    c.arg = detail::get_as<std::string>(j, "path", where);
  } else if (kind == "field_equals") {
    detail::reject_unknown_keys(j, {"check", "widget", "text"}, where);
    c.kind = Check::Kind::FieldEquals;
    c.arg = detail::get_as<std::string>(j, "widget", where);
    c.text = detail::get_as<std::string>(j, "text", where);
  } else if (kind == "window_open") {
    detail::reject_unknown_keys(j, {"check", "title"}, where);
    c.kind = Check::Kind::WindowOpen;
    c.arg = detail::get_as<std::string>(j, "title", where);
  } else if (kind == "saved") {
    detail::reject_unknown_keys(j, {"check", "widget"}, where);
    c.kind = Check::Kind::Saved;
    c.arg = detail::get_as<std::string>(j, "widget", where);
  } else {
    schema(where + ".check", "unknown check '" + kind + "'");
  }
  return c;
}

const Widget* authored_widget(const SimState& s, std::string_view id) {
  for (const auto& w : s.windows) {
    for (const auto& wd : w.widgets) {
      if (wd.id == id) return &wd;
    }
  }
  return nullptr;
}

}  // namespace

const std::vector<TaskCategory>& task_categories() {
  static const std::vector<TaskCategory> cats = {
      {"chrome", "Chrome"},
      {"gimp", "GIMP"},
      {"calc", "LibreOffice Calc"},
      {"impress", "LibreOffice Impress"},
      {"writer", "LibreOffice Writer"},
      {"multi_apps", "Multi-Apps"},
      {"os", "OS"},
      {"thunderbird", "Thunderbird"},
      {"vlc", "VLC"},
      {"vscode", "VS Code"},
  };
  return cats;
}

std::string_view category_display(std::string_view token) {
  for (const auto& c : task_categories()) {
    if (c.token == token) return c.display;
  }
  return token;
}

bool holds(const Check& c, const SimState& s) {
  switch (c.kind) {
    case Check::Kind::FileExists: return s.vfs.count(c.arg) > 0;
    case Check::Kind::FileAbsent: return s.vfs.count(c.arg) == 0;
    case Check::Kind::FieldEquals: {
      const Widget* w = authored_widget(s, c.arg);
      return w && w->content == c.text;
    }
    case Check::Kind::WindowOpen:
      return std::any_of(s.windows.begin(), s.windows.end(), [&](const Window& w) { return w.open && w.title == c.arg; });
    case Check::Kind::Saved: {
      const Widget* w = authored_widget(s, c.arg);
      return w && w->saved && !w->dirty;
    }
  }
  return false;
}

int score(const SimState& s, const TaskSpec& spec) {
  for (const auto& c : spec.success_predicate) {
    if (!holds(c, s)) return 0;
  }
  return 1;
}

SimState build_state(const ojson& init) {
  const std::string where = "initial_state";
  if (!init.is_object()) schema(where, "must be an object");
  detail::reject_unknown_keys(
      init, {"monitors", "vfs", "associations", "windows", "focus", "selected", "cursor", "clipboard"}, where);
  SimState s;
  if (init.contains("monitors")) {
    s.monitors.monitors.clear();
    const auto& ms = init["monitors"];
    if (!ms.is_array()) schema(where + ".monitors", "must be an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string at = where + ".monitors[" + std::to_string(i) + "]";
      if (!ms[i].is_object()) schema(at, "monitor must be an object");
      detail::reject_unknown_keys(ms[i], {"id", "x", "y", "w", "h"}, at);
      s.monitors.monitors.push_back({detail::get_as<int>(ms[i], "id", at), detail::get_as<int>(ms[i], "x", at),
                                     detail::get_as<int>(ms[i], "y", at), detail::get_as<int>(ms[i], "w", at),
                                     detail::get_as<int>(ms[i], "h", at)});
    }
  }
  validate(s.monitors);

  s.vfs["/desktop"] = {true, {}};
  if (init.contains("vfs")) {
    const auto& vs = init["vfs"];
    if (!vs.is_array()) schema(where + ".vfs", "must be an array");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const std::string at = where + ".vfs[" + std::to_string(i) + "]";
      if (!vs[i].is_object()) schema(at, "entry must be an object");
      detail::reject_unknown_keys(vs[i], {"path", "dir", "content"}, at);
      const std::string path = detail::get_as<std::string>(vs[i], "path", at);
      VfsEntry e{opt<bool>(vs[i], "dir", false, at), opt<std::string>(vs[i], "content", "", at)};
      if (path != "/desktop" && !s.vfs.emplace(path, e).second) schema(at, "duplicate path " + path);
    }
  }
  if (init.contains("associations")) {
    const auto& as = init["associations"];
    if (!as.is_object()) schema(where + ".associations", "must be an object");
    for (auto it = as.begin(); it != as.end(); ++it) {
      if (!it->is_string()) schema(where + ".associations." + it.key(), "must be a window id");
      s.associations[it.key()] = it->get<std::string>();
    }
  }

  const Monitor& primary = s.monitors.monitors.front();
  Window desktop;
  desktop.id = "desktop";
  desktop.title = "Desktop";
  desktop.rect = primary.rect();
  desktop.chrome = false;
  desktop.open = true;
  desktop.folder = "/desktop";
  s.windows.push_back(desktop);
  s.z.push_back("desktop");

  if (init.contains("windows")) {
    const auto& ws = init["windows"];
    if (!ws.is_array()) schema(where + ".windows", "must be an array");
    for (std::size_t i = 0; i < ws.size(); ++i) {
      Window w = window_from(ws[i], where + ".windows[" + std::to_string(i) + "]");
      if (w.id == "desktop") schema(where + ".windows[" + std::to_string(i) + "]", "id 'desktop' is reserved");
      if (w.open) s.z.push_back(w.id);
      s.windows.push_back(std::move(w));
    }
  }
  if (init.contains("focus")) s.focus = detail::get_as<std::string>(init, "focus", where);
  if (init.contains("selected")) s.selected = detail::get_as<std::string>(init, "selected", where);
  if (init.contains("cursor")) s.cursor = detail::point_from(init["cursor"], where + ".cursor");
  s.clipboard = opt<std::string>(init, "clipboard", "", where);
  validate(s);
  return s;
}

TaskSpec parse_task(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    schema("task", e.what());
  }
  const std::string where = "task";
  if (!j.is_object()) schema(where, "must be an object");
  detail::reject_unknown_keys(j,
                              {"task_id", "category", "goal_text", "initial_state", "guidance_trace",
                               "success_predicate", "reference_script"},
                              where);
  TaskSpec t;
  t.task_id = detail::get_as<std::string>(j, "task_id", where);
  t.category = detail::get_as<std::string>(j, "category", where);
  const auto& cats = task_categories();
  if (std::none_of(cats.begin(), cats.end(), [&](const TaskCategory& c) { return c.token == t.category; })) {
    schema("task.category", "unknown category '" + t.category + "'");
  }
  t.goal_text = detail::get_as<std::string>(j, "goal_text", where);
  t.initial_state = detail::need(j, "initial_state", where);
  const auto& guidance = detail::need(j, "guidance_trace", where);
  if (!guidance.is_array()) schema("task.guidance_trace", "must be an array");
  for (std::size_t i = 0; i < guidance.size(); ++i) {
    try {
      t.guidance_trace.push_back(detail::trace_step_from_json(guidance[i]));
    } catch (const Error& e) {
      schema("task.guidance_trace[" + std::to_string(i) + "]", e.detail());
    }
  }
  const auto& pred = detail::need(j, "success_predicate", where);
  if (!pred.is_array()) schema("task.success_predicate", "must be an array of checks");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    t.success_predicate.push_back(check_from(pred[i], "task.success_predicate[" + std::to_string(i) + "]"));
  }
  if (j.contains("reference_script")) {
    const auto& script = j["reference_script"];
    if (!script.is_array()) schema("task.reference_script", "must be an array");
    for (std::size_t i = 0; i < script.size(); ++i) {
      try {
        t.reference_script.push_back(parse_command(script[i]));
      } catch (const Error& e) {
        schema("task.reference_script[" + std::to_string(i) + "]", e.what());
      }
    }
  }
  return t;
}

std::pair<SimState, TaskSpec> load_task(std::string_view text) {
  TaskSpec spec = parse_task(text);
  SimState state = build_state(spec.initial_state);
  return {std::move(state), std::move(spec)};
}

std::pair<SimState, TaskSpec> load_task_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return load_task(ss.str());
  } catch (const Error& e) {
    fail(e.code(), path.filename().string() + ": " + e.detail(), e.line());
  }
}

std::vector<TaskSpec> load_task_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TaskSpec> out;
  for (const auto& f : files) out.push_back(load_task_file(f).second);
  return out;
}

}  // namespace aloha
