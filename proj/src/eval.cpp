#include "aloha/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include "aloha/error.hpp"

namespace aloha {

using ojson = nlohmann::ordered_json;

namespace {

const MemoryEntry* last_fail(const EpisodeRecord& r) {
  for (auto it = r.steps.rbegin(); it != r.steps.rend(); ++it) {
    if (!it->verify.pass) return &*it;
  }
  return nullptr;
}

bool repeated_commands(const EpisodeRecord& r) {
  std::map<std::string, std::set<int>> plans_by_command;
  for (const auto& e : r.steps) plans_by_command[to_json(e.command).dump()].insert(e.plan_index);
  return std::any_of(plans_by_command.begin(), plans_by_command.end(), [](const auto& kv) { return kv.second.size() > 1; });
}

std::string fmt_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", v * 100.0);
  return buf;
}

void write_records(const std::filesystem::path& dir, const TaskSpec& spec, const EpisodeRecord& rec,
                   const SimEnv& env) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / (spec.task_id + ".episode.json"), std::ios::binary) << to_json(rec).dump(2) << "\n";
  std::ofstream(dir / (spec.task_id + ".digest.txt"), std::ios::binary) << env.observe().text;
  std::ofstream effects(dir / (spec.task_id + ".effects.jsonl"), std::ios::binary);
  for (const auto& e : env.state().effect_log) {
    ojson j;
    j["t"] = e.t;
    j["primitive"] = e.primitive;
    if (e.at) j["at"] = ojson::array({e.at->x, e.at->y});
    j["effect"] = e.effect;
    j["changed"] = e.changed;
    effects << j.dump() << "\n";
  }
}

}  // namespace

std::string_view to_string(FailureCategory c) {
  switch (c) {
    case FailureCategory::ElementLocalization: return "element_localization";
    case FailureCategory::TextEditing: return "text_editing";
    case FailureCategory::MisalignedAction: return "misaligned_action";
    case FailureCategory::StalledTrajectory: return "stalled_trajectory";
    case FailureCategory::Other: return "other";
  }
  return "other";
}

std::string_view to_string(PlannerMode m) { return m == PlannerMode::Follower ? "follower" : "vlm"; }

std::optional<PlannerMode> parse_planner_mode(std::string_view s) {
  if (s == "follower") return PlannerMode::Follower;
  if (s == "vlm" || s == "http") return PlannerMode::Vlm;
  return std::nullopt;
}

double compute_step_norm(const EpisodeRecord& record) {
  if (record.trace_steps <= 0) fail(ErrorCode::EmptyGuidance, "trace_steps is 0");
  const double v = static_cast<double>(record.reached_step) / record.trace_steps;
  return std::clamp(v, 0.0, 1.0);
}

FailureCategory classify_failure(const EpisodeRecord& record, const SimState& final_state, const TaskSpec& spec) {
  const MemoryEntry* lf = last_fail(record);
  if (lf && lf->plan.resolution.find("ambiguous") != std::string::npos) return FailureCategory::ElementLocalization;
  for (const auto& c : spec.success_predicate) {
    if (c.kind != Check::Kind::FieldEquals || holds(c, final_state)) continue;
    for (const auto& w : final_state.windows) {
      for (const auto& wd : w.widgets) {
        if (wd.id == c.arg && !wd.content.empty()) return FailureCategory::TextEditing;
      }
    }
  }
  if (lf && (!lf->exec.ok || lf->exec.error == ErrorCode::OutOfBounds || lf->exec.message.starts_with("no effect"))) {
    return FailureCategory::MisalignedAction;
  }
  if (record.termination == "budget" && repeated_commands(record)) return FailureCategory::StalledTrajectory;
  return FailureCategory::Other;
}

int EvalReport::failures() const {
  return static_cast<int>(std::count_if(per_task.begin(), per_task.end(), [](const TaskResult& t) { return !t.success; }));
}

TaskResult run_task(const TaskSpec& spec, const EvalOptions& opts, EpisodeRecord* record_out) {
  TaskResult r;
  r.task_id = spec.task_id;
  r.category = spec.category;
  r.trace_steps = static_cast<int>(spec.guidance_trace.size());
  try {
    SimEnv env(build_state(spec.initial_state), spec);
    std::unique_ptr<PlannerBackend> backend;
    if (opts.planner == PlannerMode::Follower) {
      backend = std::make_unique<FollowerPlanner>();
    } else {
      if (!opts.endpoint) fail(ErrorCode::BackendUnavailable, "no planner endpoint configured");
      backend = std::make_unique<HttpPlanner>(*opts.endpoint);
    }
    EpisodeOptions eo;
    eo.budget = opts.budget;
    eo.memory_window = opts.toggles.planner_memory ? opts.memory_window : 0;
    eo.send_screenshots = opts.planner == PlannerMode::Vlm;
    const std::vector<TraceStep> none;
    const auto& guidance = opts.toggles.teach_trace ? spec.guidance_trace : none;
    EpisodeRecord rec = run_episode(*backend, env, spec.goal_text, guidance, eo, r.trace_steps);
    r.success = rec.success;
    r.reached_step = rec.reached_step;
    r.budget_used = rec.budget_used;
    r.termination = rec.termination;
    if (rec.trace_steps > 0) r.step_norm = compute_step_norm(rec);
    if (!r.success) r.failure = classify_failure(rec, env.state(), spec);
    if (opts.records_dir) write_records(*opts.records_dir, spec, rec, env);
    if (record_out) *record_out = std::move(rec);
  } catch (const std::exception& e) {
    r.success = 0;
    r.reached_step = 0;
    if (r.trace_steps > 0) r.step_norm = 0.0;
    r.termination = "error";
    r.error = e.what();
    r.failure = FailureCategory::Other;
  }
  return r;
}

EvalReport run_eval(const std::vector<TaskSpec>& tasks, const EvalOptions& opts) {
  EvalReport rep;
  rep.planner = opts.planner;
  rep.toggles = opts.toggles;
  rep.budget = opts.budget;
  rep.per_task.resize(tasks.size());
  const int jobs = std::clamp(opts.jobs, 1, std::max(1, static_cast<int>(tasks.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) rep.per_task[i] = run_task(tasks[i], opts);
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (FailureCategory c : kFailureCategories) rep.failure_breakdown[c] = 0;
  int solved = 0, normed = 0;
  double norm_sum = 0;
  for (const auto& t : rep.per_task) {
    auto& cc = rep.per_category[t.category];
    ++cc.total;
    if (t.success) {
      ++cc.solved;
      ++solved;
    } else {
      ++rep.failure_breakdown[t.failure.value_or(FailureCategory::Other)];
    }
    if (t.step_norm) {
      norm_sum += *t.step_norm;
      ++normed;
    }
  }
  rep.success_rate = tasks.empty() ? 0.0 : static_cast<double>(solved) / static_cast<double>(tasks.size());
  rep.mean_step_norm = normed ? norm_sum / normed : 0.0;
  return rep;
}

EvalReport run_eval(const std::filesystem::path& task_dir, const EvalOptions& opts) {
  return run_eval(load_task_dir(task_dir), opts);
}

ojson to_json(const EvalReport& r) {
  ojson j;
  j["schema_version"] = kReportSchemaVersion;
  j["planner"] = std::string(to_string(r.planner));
  j["toggles"] = {{"teach_trace", r.toggles.teach_trace}, {"planner_memory", r.toggles.planner_memory}};
  j["budget"] = r.budget;
  j["success_rate"] = r.success_rate;
  j["mean_step_norm"] = r.mean_step_norm;
  ojson cats = ojson::object();
  for (const auto& [k, v] : r.per_category) cats[k] = {{"solved", v.solved}, {"total", v.total}};
  j["per_category"] = std::move(cats);
  ojson fb = ojson::object();
  for (const auto& [k, v] : r.failure_breakdown) fb[std::string(to_string(k))] = v;
  j["failure_breakdown"] = std::move(fb);
  j["per_task"] = ojson::array();
  for (const auto& t : r.per_task) {
    ojson e;
    e["task_id"] = t.task_id;
    e["category"] = t.category;
    e["success"] = t.success;
    e["reached_step"] = t.reached_step;
    e["trace_steps"] = t.trace_steps;
    e["step_norm"] = t.step_norm ? ojson(*t.step_norm) : ojson(nullptr);
    e["budget_used"] = t.budget_used;
    e["termination"] = t.termination;
    e["failure"] = t.failure ? ojson(std::string(to_string(*t.failure))) : ojson(nullptr);
    if (!t.error.empty()) e["error"] = t.error;
    j["per_task"].push_back(std::move(e));
  }
  return j;
}

std::string report_table(const EvalReport& r) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof line, "%-20s %7s %6s %7s\n", "Category", "Solved", "Total", "Rate");
  out += line;
  int solved = 0, total = 0;
  for (const auto& [token, c] : r.per_category) {
    std::string_view display = category_display(token);
    std::snprintf(line, sizeof line, "%-20s %7d %6d %7s\n", std::string(display.empty() ? token : display).c_str(),
                  c.solved, c.total, fmt_rate(c.total ? static_cast<double>(c.solved) / c.total : 0.0).c_str());
    out += line;
    solved += c.solved;
    total += c.total;
  }
  std::snprintf(line, sizeof line, "%-20s %7d %6d %7s\n", "Overall", solved, total, fmt_rate(r.success_rate).c_str());
  out += line;
  std::snprintf(line, sizeof line, "mean step-norm %.3f\n", r.mean_step_norm);
  out += line;
  out += "failures:";
  for (const auto& [k, v] : r.failure_breakdown) out += " " + std::string(to_string(k)) + "=" + std::to_string(v);
  out += "\n";
  return out;
}

}  // namespace aloha
