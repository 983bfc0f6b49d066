#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "aloha/error.hpp"
#include "aloha/input.hpp"
#include "aloha/raster.hpp"
#include "json.hpp"

namespace aloha {

struct RelativeTarget {
  int monitor = 0;
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const RelativeTarget&, const RelativeTarget&) = default;
};

// Absolute global pixels, or a monitor-scoped fraction in [0,1].
using Target = std::variant<Point, RelativeTarget>;

enum class CommandType { Click, DoubleClick, Move, Input, Drag, Scroll, Key, Hotkey, Wait, Screenshot, CursorPosition };

std::string_view to_string(CommandType t);
// Accepts the wire names plus common aliases (double-click, text, press, sleep, ...).
std::optional<CommandType> parse_command_type(std::string_view s);

struct ExecCommand {
  CommandType type = CommandType::Wait;
  std::optional<Target> target;      // click, double_click, move, scroll
  std::vector<Target> path;          // drag, >= 2
  std::optional<std::string> text;   // input
  std::optional<std::string> key;    // key
  std::optional<KeyCombo> combo;     // hotkey
  std::optional<int> notches;        // scroll, nonzero, positive = up
  std::optional<std::int64_t> ms;    // wait, >= 0
  MouseButton button = MouseButton::L;

  bool grounded() const;

  static ExecCommand click(Target t, MouseButton b = MouseButton::L);
  static ExecCommand double_click(Target t, MouseButton b = MouseButton::L);
  static ExecCommand move(Target t);
  static ExecCommand drag(std::vector<Target> path, MouseButton b = MouseButton::L);
  static ExecCommand scroll(Target t, int notches);
  static ExecCommand input(std::string text);
  static ExecCommand key_press(std::string key);
  static ExecCommand hotkey(KeyCombo combo);
  static ExecCommand wait(std::int64_t ms);
  static ExecCommand screenshot();
  static ExecCommand cursor_position();

  friend bool operator==(const ExecCommand&, const ExecCommand&) = default;
};

// Throws UnknownType(name), MissingField("<type>.<field>") or BadValue(field).
ExecCommand parse_command(const nlohmann::ordered_json& doc);
ExecCommand parse_command(std::string_view json_text);
nlohmann::ordered_json to_json(const ExecCommand& cmd);
void validate(const ExecCommand& cmd);

struct Monitor {
  int id = 0;
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  Rect rect() const { return {x, y, w, h}; }
  friend bool operator==(const Monitor&, const Monitor&) = default;
};

struct MonitorLayout {
  std::vector<Monitor> monitors;

  const Monitor* find(int id) const;
  const Monitor* containing(Point p) const;
  bool contains(Point p) const { return containing(p) != nullptr; }
  friend bool operator==(const MonitorLayout&, const MonitorLayout&) = default;
};

void validate(const MonitorLayout& layout);

// u=0 is the first pixel column and u=1 the last; exact .5 ties go toward
// the origin.
Point ground(const Target& t, const MonitorLayout& layout);
// Throws UnknownMonitor or OutOfBounds; never clamps.
ExecCommand ground(const ExecCommand& cmd, const MonitorLayout& layout);
// Throws OutOfBounds when p lies on no monitor.
RelativeTarget to_relative(Point p, const MonitorLayout& layout);

// The motor primitives. Each returns a short human-readable message and may
// throw to signal an actuator failure.
class Actuator {
 public:
  virtual ~Actuator() = default;
  virtual std::string click(Point p, MouseButton b) = 0;
  virtual std::string double_click(Point p, MouseButton b) = 0;
  virtual std::string move(Point p) = 0;
  virtual std::string drag(std::span<const Point> path, MouseButton b) = 0;
  virtual std::string scroll(Point p, int notches) = 0;
  virtual std::string type_text(const std::string& text) = 0;
  virtual std::string key(const std::string& key) = 0;
  virtual std::string hotkey(const KeyCombo& combo) = 0;
  virtual std::string wait(std::int64_t ms) = 0;
  virtual Raster screenshot() = 0;
  virtual Point cursor_position() = 0;
  virtual std::int64_t clock_ms() const = 0;
};

struct ExecResult {
  bool ok = false;
  std::string message;
  std::optional<Raster> screenshot;  // screenshot commands only
  std::optional<Point> cursor;       // cursor_position commands only
  std::int64_t duration_ms = 0;
  std::optional<ErrorCode> error;
};

// Exactly one primitive call. Failures come back as ok = false.
ExecResult dispatch(const ExecCommand& cmd, Actuator& actuator);
// ground + dispatch; grounding errors also come back as ok = false.
ExecResult execute(const ExecCommand& cmd, const MonitorLayout& layout, Actuator& actuator);

nlohmann::ordered_json to_json(const ExecResult& r);

// A single serial execution lane in front of one actuator. submit() does not
// block; results complete in submission order with one primitive in flight.
class ActuatorLane {
 public:
  ActuatorLane(Actuator& actuator, MonitorLayout layout);
  ~ActuatorLane();
  ActuatorLane(const ActuatorLane&) = delete;
  ActuatorLane& operator=(const ActuatorLane&) = delete;

  std::future<ExecResult> submit(ExecCommand cmd);

 private:
  struct Job {
    ExecCommand cmd;
    std::promise<ExecResult> done;
  };
  void run();

  Actuator& actuator_;
  MonitorLayout layout_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Job> queue_;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace aloha
