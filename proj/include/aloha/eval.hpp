#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aloha/actor.hpp"
#include "aloha/http_backend.hpp"
#include "aloha/simenv.hpp"
#include "json.hpp"

namespace aloha {

inline constexpr int kReportSchemaVersion = 1;

enum class FailureCategory { ElementLocalization, TextEditing, MisalignedAction, StalledTrajectory, Other };
inline constexpr std::array<FailureCategory, 5> kFailureCategories = {
    FailureCategory::ElementLocalization, FailureCategory::TextEditing, FailureCategory::MisalignedAction,
    FailureCategory::StalledTrajectory, FailureCategory::Other};
std::string_view to_string(FailureCategory c);

// reached_step / trace_steps clamped to [0, 1]; throws EmptyGuidance when
// trace_steps is 0.
double compute_step_norm(const EpisodeRecord& record);

// Rule-based cause for a failed episode, judged on its record and the final
// simulator state.
FailureCategory classify_failure(const EpisodeRecord& record, const SimState& final_state, const TaskSpec& spec);

enum class PlannerMode { Follower, Vlm };
std::string_view to_string(PlannerMode m);
std::optional<PlannerMode> parse_planner_mode(std::string_view s);

struct EvalToggles {
  bool teach_trace = true;
  bool planner_memory = true;
};

struct EvalOptions {
  PlannerMode planner = PlannerMode::Follower;
  EvalToggles toggles;
  int budget = kDefaultBudget;
  int memory_window = kDefaultMemoryWindow;
  int jobs = 1;
  std::optional<HttpEndpoint> endpoint;  // required for Vlm
  std::optional<std::filesystem::path> records_dir;  // episode records and digests per task
};

struct TaskResult {
  std::string task_id;
  std::string category;
  int success = 0;
  int reached_step = 0;
  int trace_steps = 0;
  std::optional<double> step_norm;
  int budget_used = 0;
  std::string termination;
  std::optional<FailureCategory> failure;
  std::string error;
};

struct CategoryCount {
  int solved = 0;
  int total = 0;
};

struct EvalReport {
  PlannerMode planner = PlannerMode::Follower;
  EvalToggles toggles;
  int budget = kDefaultBudget;
  std::vector<TaskResult> per_task;
  double success_rate = 0;
  double mean_step_norm = 0;
  std::map<std::string, CategoryCount> per_category;  // keyed by category token
  std::map<FailureCategory, int> failure_breakdown;   // all five categories present

  int failures() const;
};

// Runs one episode in a fresh environment. Errors become a failed result
// with category other.
TaskResult run_task(const TaskSpec& spec, const EvalOptions& opts, EpisodeRecord* record_out = nullptr);

EvalReport run_eval(const std::vector<TaskSpec>& tasks, const EvalOptions& opts);
EvalReport run_eval(const std::filesystem::path& task_dir, const EvalOptions& opts);

nlohmann::ordered_json to_json(const EvalReport& r);
std::string report_table(const EvalReport& r);

}  // namespace aloha
