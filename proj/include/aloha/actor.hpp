#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aloha/executor.hpp"
#include "aloha/http_backend.hpp"
#include "aloha/simenv.hpp"
#include "aloha/trace.hpp"
#include "json.hpp"

namespace aloha {

inline constexpr int kDefaultBudget = 50;
inline constexpr int kDefaultMemoryWindow = 5;
inline constexpr int kFailuresBeforeReplan = 3;

struct TargetCandidate {
  std::string element_id;
  Rect bounds;
  std::string label;
  int z = 0;
  bool enabled = true;
};

struct Resolution {
  TargetCandidate chosen;
  int rule = 1;           // 1 label match, 2 topmost enabled, 3 top-left tie-break
  bool ambiguous = false; // the label did not single out one candidate
};

// Visible widgets of the digest, menu items included.
std::vector<TargetCandidate> candidates_from(const ObservationDigest& obs);

// Candidates must be non-empty.
Resolution resolve_ambiguity(std::span<const TargetCandidate> candidates, std::string_view hint,
                             const ObservationDigest& obs);

struct PlanStep {
  std::string observation;
  std::string reasoning;
  int current_step = -1;
  std::string action;
  std::optional<ExecCommand> command;   // absent when done
  std::optional<ExecCommand> fallback;  // hotkey equivalent, used on the second retry
  std::string expectation;
  bool done = false;
  std::string resolution;
};

nlohmann::ordered_json to_json(const PlanStep& p);
// First JSON object in `raw`; throws UnparseablePlan.
PlanStep parse_plan(std::string_view raw);

struct VerifyResult {
  bool pass = false;
  std::string note;
};

struct MemoryEntry {
  int plan_index = 0;
  int attempt = 0;
  PlanStep plan;
  ExecCommand command;  // what was actually executed
  ExecResult exec;
  VerifyResult verify;
};

struct PlannerMemory {
  std::vector<MemoryEntry> entries;
  int window = kDefaultMemoryWindow;

  std::span<const MemoryEntry> recent() const;
};

struct PlanPrompt {
  std::string instruction;
  std::string goal;
  std::vector<TraceStep> guidance;
  ObservationDigest obs;
  bool with_history = true;  // false reduces the planner to a one-step decision maker
  std::vector<MemoryEntry> history;
  bool off_trace = false;
  std::string discrepancy;
  std::shared_ptr<const Raster> screenshot;

  std::string text() const;
};

class PlannerBackend {
 public:
  virtual ~PlannerBackend() = default;
  virtual std::string complete(const PlanPrompt& prompt) = 0;
};

// Reference planner. With history it walks the guidance in order; without
// history it picks the first step whose expectation the screen does not yet
// confirm.
class FollowerPlanner final : public PlannerBackend {
 public:
  std::string complete(const PlanPrompt& prompt) override;
};

class HttpPlanner final : public PlannerBackend {
 public:
  explicit HttpPlanner(HttpEndpoint ep) : ep_(std::move(ep)) {}
  std::string complete(const PlanPrompt& prompt) override;

 private:
  HttpEndpoint ep_;
};

// Turns one guidance action into a command against the live digest.
struct CommandChoice {
  std::optional<ExecCommand> command;
  std::optional<ExecCommand> fallback;
  std::string resolution;
};
CommandChoice command_for_action(std::string_view action, const ObservationDigest& obs);

struct PlanContext {
  bool off_trace = false;
  std::string discrepancy;
  std::shared_ptr<const Raster> screenshot;
  std::vector<std::string>* prompt_sink = nullptr;
};

PlanStep next_plan(PlannerBackend& backend, const std::string& goal, std::span<const TraceStep> guidance,
                   const ObservationDigest& obs, const PlannerMemory& memory, const PlanContext& ctx = {});

// Facts an expectation sentence commits to, checkable against a digest.
struct ExpectationCheck {
  enum class Kind { WindowOpen, WindowClosed, Present, Absent, Selected, Focused, Saved, Content, Enabled, Disabled };
  Kind kind = Kind::Present;
  std::string subject;  // label or window title
  std::string window;   // containing window title, if named
  std::string text;     // Content only
};

std::vector<ExpectationCheck> expectation_checks(std::string_view expectation,
                                                 std::span<const ObservationDigest* const> vocabulary);
bool check_holds(const ExpectationCheck& c, const ObservationDigest& obs);
std::string describe(const ExpectationCheck& c);
// True only when the expectation names something and all of it is on screen.
bool expectation_holds(std::string_view expectation, const ObservationDigest& obs);

VerifyResult verify_expectation(const PlanStep& plan, const ObservationDigest& before, const ObservationDigest& after);

struct EpisodeOptions {
  int budget = kDefaultBudget;
  int memory_window = kDefaultMemoryWindow;
  bool capture_prompts = false;
  bool send_screenshots = false;
};

struct EpisodeRecord {
  std::string task_id;
  std::vector<MemoryEntry> steps;
  int success = 0;
  int reached_step = 0;
  int trace_steps = 0;
  int budget_used = 0;
  std::string termination;  // done, budget or error: ...
  std::vector<std::string> prompts;
};

// trace_steps defaults to |guidance|.
EpisodeRecord run_episode(PlannerBackend& backend, SimEnv& env, const std::string& goal,
                          std::span<const TraceStep> guidance, const EpisodeOptions& opts = {},
                          std::optional<int> trace_steps = std::nullopt);

nlohmann::ordered_json to_json(const EpisodeRecord& r);

}  // namespace aloha
