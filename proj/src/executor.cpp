#include "aloha/executor.hpp"

#include <cmath>
#include <set>

#include "text_util.hpp"

namespace aloha {

using ojson = nlohmann::ordered_json;

namespace {

struct TypeName {
  CommandType type;
  std::string_view name;
};

constexpr TypeName kTypeNames[] = {
    {CommandType::Click, "click"},         {CommandType::DoubleClick, "double_click"},
    {CommandType::Move, "move"},           {CommandType::Input, "input"},
    {CommandType::Drag, "drag"},           {CommandType::Scroll, "scroll"},
    {CommandType::Key, "key"},             {CommandType::Hotkey, "hotkey"},
    {CommandType::Wait, "wait"},           {CommandType::Screenshot, "screenshot"},
    {CommandType::CursorPosition, "cursor_position"},
};

constexpr TypeName kTypeAliases[] = {
    {CommandType::DoubleClick, "double-click"}, {CommandType::DoubleClick, "doubleclick"},
    {CommandType::DoubleClick, "dblclick"},     {CommandType::Move, "mouse_move"},
    {CommandType::Move, "hover"},               {CommandType::Input, "type"},
    {CommandType::Input, "text"},               {CommandType::Input, "type_text"},
    {CommandType::Key, "press"},                {CommandType::Key, "keypress"},
    {CommandType::Hotkey, "shortcut"},          {CommandType::Wait, "sleep"},
    {CommandType::CursorPosition, "cursor"},    {CommandType::CursorPosition, "cursor-position"},
};

bool is_pointer(CommandType t) {
  return t == CommandType::Click || t == CommandType::DoubleClick || t == CommandType::Move ||
         t == CommandType::Scroll;
}

bool has_button(CommandType t) {
  return t == CommandType::Click || t == CommandType::DoubleClick || t == CommandType::Drag;
}

[[noreturn]] void missing(CommandType t, std::string_view field) {
  fail(ErrorCode::MissingField, std::string(to_string(t)) + "." + std::string(field));
}

[[noreturn]] void bad(std::string_view field, std::string_view why) {
  fail(ErrorCode::BadValue, std::string(field) + ": " + std::string(why));
}

Target target_from(const ojson& j, std::string_view field) {
  if (!j.is_object()) bad(field, "target must be an object");
  if (j.contains("monitor")) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "monitor" && it.key() != "u" && it.key() != "v") bad(field, "unexpected key " + it.key());
    }
    if (!j["monitor"].is_number_integer()) bad(field, "monitor must be an integer");
    if (!j.contains("u") || !j.contains("v")) bad(field, "relative target needs u and v");
    if (!j["u"].is_number() || !j["v"].is_number()) bad(field, "u and v must be numbers");
    RelativeTarget r{j["monitor"].get<int>(), j["u"].get<double>(), j["v"].get<double>()};
    if (!(r.u >= 0.0 && r.u <= 1.0)) bad(std::string(field) + ".u", "outside [0,1]");
    if (!(r.v >= 0.0 && r.v <= 1.0)) bad(std::string(field) + ".v", "outside [0,1]");
    return r;
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "x" && it.key() != "y") bad(field, "unexpected key " + it.key());
  }
  if (!j.contains("x") || !j.contains("y")) bad(field, "absolute target needs x and y");
  if (!j["x"].is_number_integer() || !j["y"].is_number_integer()) bad(field, "x and y must be integers");
  return Point{j["x"].get<int>(), j["y"].get<int>()};
}

ojson target_json(const Target& t) {
  ojson j;
  if (const Point* p = std::get_if<Point>(&t)) {
    j["x"] = p->x;
    j["y"] = p->y;
  } else {
    const auto& r = std::get<RelativeTarget>(t);
    j["monitor"] = r.monitor;
    j["u"] = r.u;
    j["v"] = r.v;
  }
  return j;
}

// Exact .5 ties round toward the origin so the centre of an even-width
// axis lands on the left/top of the two middle pixels.
int scale_axis(double f, int extent) {
  return static_cast<int>(std::ceil(f * (extent - 1) - 0.5));
}

}  // namespace

std::string_view to_string(CommandType t) {
  for (const auto& n : kTypeNames) {
    if (n.type == t) return n.name;
  }
  return "wait";
}

std::optional<CommandType> parse_command_type(std::string_view s) {
  const std::string l = detail::lower(s);
  for (const auto& n : kTypeNames) {
    if (n.name == l) return n.type;
  }
  for (const auto& n : kTypeAliases) {
    if (n.name == l) return n.type;
  }
  return std::nullopt;
}

bool ExecCommand::grounded() const {
  if (target && !std::holds_alternative<Point>(*target)) return false;
  for (const auto& t : path) {
    if (!std::holds_alternative<Point>(t)) return false;
  }
  return true;
}

ExecCommand ExecCommand::click(Target t, MouseButton b) {
  ExecCommand c;
  c.type = CommandType::Click;
  c.target = t;
  c.button = b;
  return c;
}
ExecCommand ExecCommand::double_click(Target t, MouseButton b) {
  ExecCommand c = click(t, b);
  c.type = CommandType::DoubleClick;
  return c;
}
ExecCommand ExecCommand::move(Target t) {
  ExecCommand c;
  c.type = CommandType::Move;
  c.target = t;
  return c;
}
ExecCommand ExecCommand::drag(std::vector<Target> path, MouseButton b) {
  ExecCommand c;
  c.type = CommandType::Drag;
  c.path = std::move(path);
  c.button = b;
  return c;
}
ExecCommand ExecCommand::scroll(Target t, int notches) {
  ExecCommand c;
  c.type = CommandType::Scroll;
  c.target = t;
  c.notches = notches;
  return c;
}
ExecCommand ExecCommand::input(std::string text) {
  ExecCommand c;
  c.type = CommandType::Input;
  c.text = std::move(text);
  return c;
}
ExecCommand ExecCommand::key_press(std::string key) {
  ExecCommand c;
  c.type = CommandType::Key;
  c.key = std::move(key);
  return c;
}
ExecCommand ExecCommand::hotkey(KeyCombo combo) {
  canonicalize(combo);
  ExecCommand c;
  c.type = CommandType::Hotkey;
  c.combo = std::move(combo);
  return c;
}
ExecCommand ExecCommand::wait(std::int64_t ms) {
  ExecCommand c;
  c.type = CommandType::Wait;
  c.ms = ms;
  return c;
}
ExecCommand ExecCommand::screenshot() {
  ExecCommand c;
  c.type = CommandType::Screenshot;
  return c;
}
ExecCommand ExecCommand::cursor_position() {
  ExecCommand c;
  c.type = CommandType::CursorPosition;
  return c;
}

ExecCommand parse_command(const ojson& doc) {
  if (!doc.is_object()) bad("command", "must be a JSON object");
  if (!doc.contains("type")) fail(ErrorCode::MissingField, "command.type");
  if (!doc["type"].is_string()) bad("type", "must be a string");
  const std::string type_name = doc["type"].get<std::string>();
  auto type = parse_command_type(type_name);
  if (!type) fail(ErrorCode::UnknownType, type_name);

  ExecCommand c;
  c.type = *type;
  std::set<std::string> allowed = {"type"};
  if (is_pointer(c.type)) allowed.insert("target");
  if (has_button(c.type)) allowed.insert("button");
  switch (c.type) {
    case CommandType::Drag: allowed.insert("path"); break;
    case CommandType::Scroll: allowed.insert("notches"); break;
    case CommandType::Input: allowed.insert("text"); break;
    case CommandType::Key: allowed.insert("key"); break;
    case CommandType::Hotkey: allowed.insert("combo"); break;
    case CommandType::Wait: allowed.insert("ms"); break;
    default: break;
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!allowed.count(it.key())) bad(it.key(), "unexpected field for " + std::string(to_string(c.type)));
  }

  if (is_pointer(c.type)) {
    if (!doc.contains("target")) missing(c.type, "target");
    c.target = target_from(doc["target"], "target");
  }
  if (has_button(c.type) && doc.contains("button")) {
    const auto& b = doc["button"];
    std::optional<MouseButton> parsed;
    if (b.is_string()) {
      const std::string l = detail::lower(b.get<std::string>());
      if (l == "l" || l == "left") parsed = MouseButton::L;
      if (l == "r" || l == "right") parsed = MouseButton::R;
      if (l == "m" || l == "middle") parsed = MouseButton::M;
    }
    if (!parsed) bad("button", "expected L, R or M");
    c.button = *parsed;
  }
  switch (c.type) {
    case CommandType::Drag: {
      if (!doc.contains("path")) missing(c.type, "path");
      const auto& path = doc["path"];
      if (!path.is_array()) bad("path", "must be an array");
      for (const auto& p : path) c.path.push_back(target_from(p, "path"));
      if (c.path.size() < 2) bad("path", "needs at least 2 points");
      break;
    }
    case CommandType::Scroll: {
      if (!doc.contains("notches")) missing(c.type, "notches");
      if (!doc["notches"].is_number_integer()) bad("notches", "must be an integer");
      c.notches = doc["notches"].get<int>();
      if (*c.notches == 0) bad("notches", "must be nonzero");
      break;
    }
    case CommandType::Input: {
      if (!doc.contains("text")) missing(c.type, "text");
      if (!doc["text"].is_string()) bad("text", "must be a string");
      c.text = doc["text"].get<std::string>();
      break;
    }
    case CommandType::Key: {
      if (!doc.contains("key")) missing(c.type, "key");
      if (!doc["key"].is_string()) bad("key", "must be a string");
      c.key = doc["key"].get<std::string>();
      if (!is_valid_key_token(*c.key) || is_modifier_token(*c.key)) bad("key", "unknown key token " + *c.key);
      break;
    }
    case CommandType::Hotkey: {
      if (!doc.contains("combo")) missing(c.type, "combo");
      if (!doc["combo"].is_string()) bad("combo", "must be a string like Ctrl+s");
      auto combo = parse_combo(doc["combo"].get<std::string>());
      if (!combo) bad("combo", "cannot parse " + doc["combo"].get<std::string>());
      c.combo = *combo;
      break;
    }
    case CommandType::Wait: {
      if (!doc.contains("ms")) missing(c.type, "ms");
      if (!doc["ms"].is_number_integer()) bad("ms", "must be an integer");
      c.ms = doc["ms"].get<std::int64_t>();
      if (*c.ms < 0) bad("ms", "must be >= 0");
      break;
    }
    default: break;
  }
  return c;
}

ExecCommand parse_command(std::string_view json_text) {
  ojson doc;
  try {
    doc = ojson::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    bad("command", e.what());
  }
  return parse_command(doc);
}

ojson to_json(const ExecCommand& c) {
  ojson j;
  j["type"] = std::string(to_string(c.type));
  if (c.target) j["target"] = target_json(*c.target);
  if (!c.path.empty()) {
    j["path"] = ojson::array();
    for (const auto& t : c.path) j["path"].push_back(target_json(t));
  }
  if (has_button(c.type)) j["button"] = std::string(to_string(c.button));
  if (c.text) j["text"] = *c.text;
  if (c.key) j["key"] = *c.key;
  if (c.combo) j["combo"] = to_string(*c.combo);
  if (c.notches) j["notches"] = *c.notches;
  if (c.ms) j["ms"] = *c.ms;
  return j;
}

void validate(const ExecCommand& c) {
  // The JSON parser is the single source of schema rules.
  (void)parse_command(to_json(c));
}

const Monitor* MonitorLayout::find(int id) const {
  for (const auto& m : monitors) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

const Monitor* MonitorLayout::containing(Point p) const {
  for (const auto& m : monitors) {
    if (m.rect().contains(p)) return &m;
  }
  return nullptr;
}

void validate(const MonitorLayout& layout) {
  if (layout.monitors.empty()) fail(ErrorCode::InvariantViolation, "layout has no monitors");
  std::set<int> ids;
  for (const auto& m : layout.monitors) {
    if (m.w <= 0 || m.h <= 0) fail(ErrorCode::InvariantViolation, "monitor " + std::to_string(m.id) + " is empty");
    if (!ids.insert(m.id).second) fail(ErrorCode::InvariantViolation, "duplicate monitor id " + std::to_string(m.id));
  }
}

Point ground(const Target& t, const MonitorLayout& layout) {
  Point p;
  if (const Point* abs = std::get_if<Point>(&t)) {
    p = *abs;
  } else {
    const auto& r = std::get<RelativeTarget>(t);
    const Monitor* m = layout.find(r.monitor);
    if (!m) fail(ErrorCode::UnknownMonitor, std::to_string(r.monitor));
    p = {m->x + scale_axis(r.u, m->w), m->y + scale_axis(r.v, m->h)};
    if (!m->rect().contains(p)) {
      fail(ErrorCode::OutOfBounds, "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ") is outside monitor " +
                                       std::to_string(r.monitor));
    }
  }
  if (!layout.contains(p)) {
    fail(ErrorCode::OutOfBounds, "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ") is on no monitor");
  }
  return p;
}

ExecCommand ground(const ExecCommand& cmd, const MonitorLayout& layout) {
  ExecCommand out = cmd;
  if (out.target) out.target = ground(*out.target, layout);
  for (auto& t : out.path) t = ground(t, layout);
  return out;
}

RelativeTarget to_relative(Point p, const MonitorLayout& layout) {
  const Monitor* m = layout.containing(p);
  if (!m) fail(ErrorCode::OutOfBounds, "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ") is on no monitor");
  RelativeTarget r;
  r.monitor = m->id;
  r.u = m->w > 1 ? static_cast<double>(p.x - m->x) / (m->w - 1) : 0.0;
  r.v = m->h > 1 ? static_cast<double>(p.y - m->y) / (m->h - 1) : 0.0;
  return r;
}

ExecResult dispatch(const ExecCommand& cmd, Actuator& act) {
  ExecResult r;
  if (!cmd.grounded()) {
    r.message = "command is not grounded";
    r.error = ErrorCode::BadValue;
    return r;
  }
  const std::int64_t t0 = act.clock_ms();
  auto at = [&] { return std::get<Point>(*cmd.target); };
  try {
    switch (cmd.type) {
      case CommandType::Click: r.message = act.click(at(), cmd.button); break;
      case CommandType::DoubleClick: r.message = act.double_click(at(), cmd.button); break;
      case CommandType::Move: r.message = act.move(at()); break;
      case CommandType::Drag: {
        std::vector<Point> pts;
        for (const auto& t : cmd.path) pts.push_back(std::get<Point>(t));
        r.message = act.drag(pts, cmd.button);
        break;
      }
      case CommandType::Scroll: r.message = act.scroll(at(), cmd.notches.value_or(0)); break;
      case CommandType::Input: r.message = act.type_text(cmd.text.value_or("")); break;
      case CommandType::Key: r.message = act.key(cmd.key.value_or("")); break;
      case CommandType::Hotkey: r.message = act.hotkey(cmd.combo.value_or(KeyCombo{})); break;
      case CommandType::Wait: r.message = act.wait(cmd.ms.value_or(0)); break;
      case CommandType::Screenshot:
        r.screenshot = act.screenshot();
        r.message = "screenshot " + std::to_string(r.screenshot->w) + "x" + std::to_string(r.screenshot->h);
        break;
      case CommandType::CursorPosition:
        r.cursor = act.cursor_position();
        r.message = "cursor at (" + std::to_string(r.cursor->x) + "," + std::to_string(r.cursor->y) + ")";
        break;
    }
    r.ok = true;
  } catch (const Error& e) {
    r.message = e.what();
    r.error = e.code();
  } catch (const std::exception& e) {
    r.message = e.what();
  }
  r.duration_ms = act.clock_ms() - t0;
  return r;
}

ExecResult execute(const ExecCommand& cmd, const MonitorLayout& layout, Actuator& actuator) {
  ExecCommand grounded;
  try {
    grounded = ground(cmd, layout);
  } catch (const Error& e) {
    ExecResult r;
    r.message = e.what();
    r.error = e.code();
    return r;
  }
  return dispatch(grounded, actuator);
}

ojson to_json(const ExecResult& r) {
  ojson j;
  j["ok"] = r.ok;
  j["message"] = r.message;
  j["duration_ms"] = r.duration_ms;
  if (r.screenshot) j["screenshot"] = {{"w", r.screenshot->w}, {"h", r.screenshot->h}};
  if (r.cursor) j["cursor"] = ojson::array({r.cursor->x, r.cursor->y});
  if (r.error) j["error"] = std::string(to_string(*r.error));
  return j;
}

ActuatorLane::ActuatorLane(Actuator& actuator, MonitorLayout layout)
    : actuator_(actuator), layout_(std::move(layout)), worker_([this] { run(); }) {}

ActuatorLane::~ActuatorLane() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

std::future<ExecResult> ActuatorLane::submit(ExecCommand cmd) {
  std::future<ExecResult> fut;
  {
    std::lock_guard lock(mu_);
    queue_.push_back(Job{std::move(cmd), {}});
    fut = queue_.back().done.get_future();
  }
  cv_.notify_one();
  return fut;
}

void ActuatorLane::run() {
  while (true) {
    Job job;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.pop_front();
    }
    job.done.set_value(execute(job.cmd, layout_, actuator_));
  }
}

}  // namespace aloha
