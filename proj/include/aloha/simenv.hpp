#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aloha/executor.hpp"
#include "aloha/input.hpp"
#include "aloha/raster.hpp"
#include "aloha/trace.hpp"
#include "json.hpp"

namespace aloha {

inline constexpr int kTitleBarPx = 24;
inline constexpr int kMenuItemPx = 24;
inline constexpr int kScrollStepPx = 40;

enum class WidgetKind { Button, Field, Text, Icon, MenuItem };

std::string_view to_string(WidgetKind k);
std::optional<WidgetKind> parse_widget_kind(std::string_view s);

// Button/menu-item side effects. `target` names a window, menu or widget id;
// an empty target means the owning window.
struct Effect {
  enum class Op { OpenWindow, CloseWindow, OpenMenu, Focus, Enable, Disable, SetField, Save };
  Op op = Op::OpenWindow;
  std::string target;
  std::string value;  // SetField only
  friend bool operator==(const Effect&, const Effect&) = default;
};

std::string_view to_string(Effect::Op op);
std::optional<Effect::Op> parse_effect_op(std::string_view s);

struct Widget {
  std::string id;
  WidgetKind kind = WidgetKind::Button;
  std::string label;
  Rect rect;           // window-local; content widgets shift with the scroll offset
  bool chrome = false; // title-bar widgets ignore scrolling
  bool enabled = true;
  std::vector<Effect> effects;
  std::optional<KeyCombo> hotkey;
  // Field / Text
  std::string content;
  bool dirty = false;
  bool saved = false;
  bool select_all = false;
  // Icon
  std::string fs_path;
  std::string opens;  // window id opened on double-click

  friend bool operator==(const Widget&, const Widget&) = default;
};

struct MenuItem {
  std::string label;
  std::vector<Effect> effects;
  friend bool operator==(const MenuItem&, const MenuItem&) = default;
};

struct Menu {
  std::string id;
  Point origin;  // window-local top-left of the first item
  int width = 160;
  std::vector<MenuItem> items;
  friend bool operator==(const Menu&, const Menu&) = default;
};

struct Window {
  std::string id;
  std::string title;
  Rect rect;  // global pixels, title bar included
  bool chrome = true;
  bool dialog = false;
  bool open = false;
  std::optional<std::string> folder;  // folder windows list this vfs directory as icons
  std::vector<Widget> widgets;        // authored widgets (folder icons are generated)
  std::vector<Menu> menus;
  std::string default_button;         // fired by Enter
  int scroll = 0;
  int scroll_max = 0;

  Rect client() const;
  friend bool operator==(const Window&, const Window&) = default;
};

struct VfsEntry {
  bool dir = false;
  std::string content;
  friend bool operator==(const VfsEntry&, const VfsEntry&) = default;
};

struct EffectEntry {
  std::int64_t t = 0;
  std::string primitive;
  std::optional<Point> at;
  std::string effect;  // "no effect" when nothing changed
  bool changed = false;
  friend bool operator==(const EffectEntry&, const EffectEntry&) = default;
};

struct SimState {
  MonitorLayout monitors{{Monitor{0, 0, 0, 1280, 720}}};
  std::vector<Window> windows;  // catalog, open or not
  std::vector<std::string> z;   // open window ids, bottom to top
  std::map<std::string, VfsEntry> vfs;
  std::map<std::string, std::string> associations;  // file extension -> window id
  std::optional<std::string> focus;
  std::optional<std::string> selected;  // icon id
  std::optional<std::string> open_menu;
  Point cursor{640, 360};
  std::string clipboard;
  std::int64_t clock_ms = 0;
  std::vector<EffectEntry> effect_log;

  Window* window(std::string_view id);
  const Window* window(std::string_view id) const;
  friend bool operator==(const SimState&, const SimState&) = default;
};

// A widget as placed on screen, with folder icons and open menu items
// materialised. `rect` is global.
struct PlacedWidget {
  Widget widget;
  std::string window_id;
  int z = 0;
  Rect rect;
  bool visible = true;
};

std::vector<Widget> folder_icons(const SimState& s, const Window& w);
// Bottom to top, so later entries win hit tests.
std::vector<PlacedWidget> placed_widgets(const SimState& s);

void validate(const SimState& s);

// Deterministic transition. Every call appends exactly one effect_log entry.
void apply_in_place(SimState& s, const ExecCommand& grounded_cmd);
SimState apply_primitive(SimState s, const ExecCommand& grounded_cmd);

struct DigestWindow {
  int z = 0;
  std::string id;
  std::string title;
  Rect rect;
  Rect client;
  bool dialog = false;
};

struct DigestWidget {
  std::string id;
  std::string window_id;
  int z = 0;
  WidgetKind kind = WidgetKind::Button;
  std::string label;
  Rect rect;
  bool visible = true;
  bool enabled = true;
  bool selected = false;
  bool dirty = false;
  bool saved = false;
  std::string content;
  std::string hotkey;
  std::string path;
};

struct ObservationDigest {
  std::string text;        // canonical form, cursor line last
  std::vector<Monitor> monitors;
  std::vector<DigestWindow> windows;  // open windows, bottom to top
  std::vector<DigestWidget> widgets;
  std::optional<std::string> focus;
  std::string clipboard;
  Point cursor;

  // Equality of everything but the cursor position.
  bool same_state(const ObservationDigest& other) const;
  const DigestWindow* window_titled(std::string_view title) const;
  friend bool operator==(const ObservationDigest& a, const ObservationDigest& b) { return a.text == b.text; }
};

ObservationDigest observe(const SimState& s);

struct RenderOptions {
  bool mark_last_effect = false;
};

Raster render(const SimState& s, const RenderOptions& opts = {});
Rgb widget_color(std::string_view id);

struct Check {
  enum class Kind { FileExists, FileAbsent, FieldEquals, WindowOpen, Saved };
  Kind kind = Kind::FileExists;
  std::string arg;  // path, widget id or window title
  std::string text; // FieldEquals only
  friend bool operator==(const Check&, const Check&) = default;
};

bool holds(const Check& c, const SimState& s);

struct TaskCategory {
  std::string_view token;
  std::string_view display;
};
const std::vector<TaskCategory>& task_categories();
std::string_view category_display(std::string_view token);

struct TaskSpec {
  std::string task_id;
  std::string category;
  std::string goal_text;
  nlohmann::ordered_json initial_state;
  std::vector<TraceStep> guidance_trace;
  std::vector<Check> success_predicate;  // conjunction
  std::vector<ExecCommand> reference_script;
};

// 1 iff every conjunct holds.
int score(const SimState& s, const TaskSpec& spec);

SimState build_state(const nlohmann::ordered_json& initial_state);
TaskSpec parse_task(std::string_view json_text);
std::pair<SimState, TaskSpec> load_task(std::string_view json_text);
std::pair<SimState, TaskSpec> load_task_file(const std::filesystem::path& path);
// Every *.json in `dir`, ordered by file name.
std::vector<TaskSpec> load_task_dir(const std::filesystem::path& dir);

// The reference actuator: one SimState behind the motor primitives.
class SimActuator final : public Actuator {
 public:
  explicit SimActuator(SimState& state) : s_(state) {}

  std::string click(Point p, MouseButton b) override;
  std::string double_click(Point p, MouseButton b) override;
  std::string move(Point p) override;
  std::string drag(std::span<const Point> path, MouseButton b) override;
  std::string scroll(Point p, int notches) override;
  std::string type_text(const std::string& text) override;
  std::string key(const std::string& key) override;
  std::string hotkey(const KeyCombo& combo) override;
  std::string wait(std::int64_t ms) override;
  Raster screenshot() override;
  Point cursor_position() override;
  std::int64_t clock_ms() const override { return s_.clock_ms; }

 private:
  std::string run(const ExecCommand& cmd);
  SimState& s_;
};

// A task instance: state, its scorer and the actuator feeding it.
class SimEnv {
 public:
  SimEnv(SimState state, TaskSpec spec) : state_(std::move(state)), spec_(std::move(spec)), actuator_(state_) {}
  SimEnv(const SimEnv&) = delete;
  SimEnv& operator=(const SimEnv&) = delete;

  ObservationDigest observe() const { return aloha::observe(state_); }
  Raster render() const { return aloha::render(state_); }
  int score() const { return aloha::score(state_, spec_); }
  const SimState& state() const { return state_; }
  const TaskSpec& spec() const { return spec_; }
  const MonitorLayout& layout() const { return state_.monitors; }
  Actuator& actuator() { return actuator_; }

 private:
  SimState state_;
  TaskSpec spec_;
  SimActuator actuator_;
};

}  // namespace aloha
