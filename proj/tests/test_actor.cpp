#include "aloha/actor.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace aloha;
using testsupport::error_code;
using ojson = nlohmann::ordered_json;

namespace {

TaskSpec bundled(const std::string& id) { return load_task_file(testsupport::tasks_dir() / (id + ".json")).second; }

// Replies from a fixed list, repeating the last one; records every prompt.
class Scripted final : public PlannerBackend {
 public:
  explicit Scripted(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const PlanPrompt& prompt) override {
    prompts.push_back(prompt.text());
    const std::size_t i = std::min(calls++, replies_.size() - 1);
    return replies_[i];
  }
  std::vector<std::string> prompts;
  std::size_t calls = 0;

 private:
  std::vector<std::string> replies_;
};

std::string plan_reply(ExecCommand cmd, std::string expectation, int step = 0,
                       std::optional<ExecCommand> fallback = std::nullopt) {
  PlanStep p;
  p.observation = "screen";
  p.reasoning = "because";
  p.current_step = step;
  p.action = "do it";
  p.command = std::move(cmd);
  p.fallback = std::move(fallback);
  p.expectation = std::move(expectation);
  return to_json(p).dump();
}

ObservationDigest editor_obs(bool dialog_open) {
  ojson init = ojson::parse(R"({
    "windows": [
      {"id": "ed", "title": "Editor", "rect": [100, 100, 600, 400], "open": true,
       "widgets": [{"id": "ed/save", "kind": "button", "label": "Save As", "rect": [10, 40, 80, 30],
                    "effects": [{"op": "open_window", "target": "dlg"}]}]},
      {"id": "dlg", "title": "Save", "rect": [300, 200, 300, 200], "dialog": true}
    ]
  })");
  init["windows"][1]["open"] = dialog_open;
  return observe(build_state(init));
}

// Longest run of consecutive entries sharing a plan index.
int longest_run(const EpisodeRecord& r) {
  int best = 0, run = 0, prev = -1;
  for (const auto& e : r.steps) {
    run = e.plan_index == prev ? run + 1 : 1;
    prev = e.plan_index;
    best = std::max(best, run);
  }
  return best;
}

void check_record_invariants(const EpisodeRecord& r, int budget) {
  CHECK(static_cast<int>(r.steps.size()) <= budget);
  CHECK(r.budget_used == static_cast<int>(r.steps.size()));
  CHECK((r.success == 0 || r.success == 1));
  CHECK(r.reached_step >= 0);
  CHECK(r.reached_step <= r.trace_steps);
  CHECK(longest_run(r) <= 3);
}

}  // namespace

TEST_SUITE("actor") {

TEST_CASE("label match picks the named button") {
  const std::vector<TargetCandidate> c = {{"b1", {0, 0, 50, 20}, "Cancel", 1, true},
                                          {"b2", {60, 0, 50, 20}, "Save", 1, true}};
  const auto r = resolve_ambiguity(c, "click Save", ObservationDigest{});
  CHECK(r.chosen.element_id == "b2");
  CHECK(r.rule == 1);
  CHECK_FALSE(r.ambiguous);
}

TEST_CASE("identical unlabeled icons fall to the top-left tie-break") {
  const std::vector<TargetCandidate> c = {{"lower", {10, 50, 32, 32}, "", 1, true},
                                          {"upper", {10, 10, 32, 32}, "", 1, true}};
  const auto r = resolve_ambiguity(c, "click the icon", ObservationDigest{});
  CHECK(r.chosen.element_id == "upper");
  CHECK(r.rule == 3);
  CHECK(r.ambiguous);
}

TEST_CASE("single candidate resolves to itself") {
  const std::vector<TargetCandidate> c = {{"only", {5, 5, 10, 10}, "Thing", 0, true}};
  CHECK(resolve_ambiguity(c, "anything", ObservationDigest{}).chosen.element_id == "only");
}

TEST_CASE("topmost enabled candidate wins among equal labels") {
  const std::vector<TargetCandidate> c = {{"back", {0, 0, 10, 10}, "OK", 1, true},
                                          {"front", {50, 50, 10, 10}, "OK", 3, true},
                                          {"front_disabled", {0, 0, 10, 10}, "OK", 4, false}};
  const auto r = resolve_ambiguity(c, "press OK", ObservationDigest{});
  CHECK(r.chosen.element_id == "front");
  CHECK(r.rule == 2);
}

TEST_CASE("longer label containing a shorter one wins") {
  const std::vector<TargetCandidate> c = {{"folder", {0, 0, 10, 10}, "photos", 1, true},
                                          {"close", {50, 0, 10, 10}, "Close photos", 1, true}};
  CHECK(resolve_ambiguity(c, "click the Close photos button", ObservationDigest{}).chosen.element_id == "close");
}

TEST_CASE("resolution needs candidates") {
  CHECK(error_code([] { resolve_ambiguity({}, "x", ObservationDigest{}); }) == ErrorCode::InvariantViolation);
}

TEST_CASE("verification examples") {
  const auto closed = editor_obs(false);
  const auto open = editor_obs(true);

  PlanStep click;
  click.command = ExecCommand::click(Point{10, 10});
  click.expectation = "a Save dialog should appear";
  const auto unchanged = verify_expectation(click, closed, closed);
  CHECK_FALSE(unchanged.pass);
  CHECK(unchanged.note == "no state change");
  CHECK(verify_expectation(click, closed, open).pass);

  PlanStep wait;
  wait.command = ExecCommand::wait(500);
  wait.expectation = "Nothing changes.";
  CHECK(verify_expectation(wait, closed, closed).pass);

  // A change happened but the named window is missing.
  PlanStep wrong = click;
  wrong.expectation = "The Save dialog opens.";
  const auto reverse = verify_expectation(wrong, open, closed);
  CHECK_FALSE(reverse.pass);
  CHECK(reverse.note.find("Save") != std::string::npos);
}

TEST_CASE("expectation checks read the digest vocabulary") {
  const auto open = editor_obs(true);
  CHECK(expectation_holds("The Save dialog opens.", open));
  CHECK_FALSE(expectation_holds("The Save dialog opens.", editor_obs(false)));
  CHECK(expectation_holds("The Save dialog closes.", editor_obs(false)));
  CHECK_FALSE(expectation_holds("Nothing in particular.", open));
}

TEST_CASE("parse_plan tolerates chatter and rejects junk") {
  const std::string body = plan_reply(ExecCommand::wait(1), "Nothing changes.");
  const auto p = parse_plan("Sure, here is my plan:\n" + body + "\nGood luck!");
  CHECK(p.command == ExecCommand::wait(1));
  CHECK(p.current_step == 0);
  CHECK(error_code([] { parse_plan("no json here"); }) == ErrorCode::UnparseablePlan);
  CHECK(error_code([] { parse_plan(R"({"observation":"a","reasoning":"b","action":"c","expectation":"d"})"); }) ==
        ErrorCode::UnparseablePlan);
  CHECK(error_code([] {
          parse_plan(R"({"observation":"a","reasoning":"b","action":"c","expectation":"d","current_step":0})");
        }) == ErrorCode::UnparseablePlan);
  CHECK(error_code([] {
          parse_plan(
              R"({"observation":"a","reasoning":"b","action":"c","expectation":"d","current_step":0,"command":{"type":"teleport"}})");
        }) == ErrorCode::UnparseablePlan);
}

TEST_CASE("follower walks the guidance in order") {
  const TaskSpec spec = bundled("copy_pikachu");
  SimEnv env(build_state(spec.initial_state), spec);
  FollowerPlanner f;
  PlannerMemory mem;
  const auto obs = env.observe();
  const PlanStep first = next_plan(f, spec.goal_text, spec.guidance_trace, obs, mem);
  CHECK(first.current_step == 0);
  CHECK_FALSE(first.done);
  REQUIRE(first.command);
  const auto expected = command_for_action(spec.guidance_trace[0].action, obs);
  CHECK(first.command == expected.command);

  MemoryEntry e;
  e.plan = first;
  e.verify.pass = true;
  mem.entries.push_back(e);
  CHECK(next_plan(f, spec.goal_text, spec.guidance_trace, obs, mem).current_step == 1);

  mem.entries.back().verify.pass = false;
  CHECK(next_plan(f, spec.goal_text, spec.guidance_trace, obs, mem).current_step == 0);

  mem.entries.back().plan.current_step = static_cast<int>(spec.guidance_trace.size()) - 1;
  mem.entries.back().verify.pass = true;
  const PlanStep last = next_plan(f, spec.goal_text, spec.guidance_trace, obs, mem);
  CHECK(last.done);
  CHECK_FALSE(last.command);
}

TEST_CASE("planning prompts respect the memory window") {
  const TaskSpec spec = bundled("copy_pikachu");
  SimEnv env(build_state(spec.initial_state), spec);
  FollowerPlanner f;
  PlannerMemory mem;
  for (int i = 0; i < 8; ++i) {
    MemoryEntry e;
    e.plan_index = i;
    e.plan.action = "marker action " + std::to_string(i);
    e.verify.pass = true;
    mem.entries.push_back(e);
  }
  std::vector<std::string> sink;
  PlanContext ctx;
  ctx.prompt_sink = &sink;
  mem.window = 5;
  next_plan(f, spec.goal_text, spec.guidance_trace, env.observe(), mem, ctx);
  mem.window = 0;
  next_plan(f, spec.goal_text, spec.guidance_trace, env.observe(), mem, ctx);
  REQUIRE(sink.size() == 2);
  CHECK(sink[0].find("marker action 2") == std::string::npos);
  for (int i = 3; i < 8; ++i) CHECK(sink[0].find("marker action " + std::to_string(i)) != std::string::npos);
  CHECK(sink[1].find("marker action") == std::string::npos);
  CHECK(sink[1].find("History") == std::string::npos);
}

TEST_CASE("copy_pikachu succeeds within twelve steps") {
  const TaskSpec spec = bundled("copy_pikachu");
  SimEnv env(build_state(spec.initial_state), spec);
  FollowerPlanner f;
  const auto rec = run_episode(f, env, spec.goal_text, spec.guidance_trace);
  CHECK(rec.success == 1);
  CHECK(rec.budget_used <= 12);
  CHECK(rec.reached_step == 6);
  CHECK(rec.trace_steps == 6);
  CHECK(rec.termination == "done");
  check_record_invariants(rec, 50);
}

TEST_CASE("no guidance means nothing to follow") {
  const TaskSpec spec = bundled("copy_pikachu");
  SimEnv env(build_state(spec.initial_state), spec);
  FollowerPlanner f;
  const auto rec = run_episode(f, env, spec.goal_text, {});
  CHECK(rec.success == 0);
  CHECK(rec.reached_step == 0);
  CHECK(rec.steps.empty());
}

TEST_CASE("zero budget scores the initial state") {
  const TaskSpec spec = bundled("copy_pikachu");
  SimEnv env(build_state(spec.initial_state), spec);
  FollowerPlanner f;
  EpisodeOptions o;
  o.budget = 0;
  const auto rec = run_episode(f, env, spec.goal_text, spec.guidance_trace, o);
  CHECK(rec.steps.empty());
  CHECK(rec.success == score(build_state(spec.initial_state), spec));
  CHECK(rec.termination == "budget");
}

TEST_CASE("memory-off episodes send history-free prompts") {
  const TaskSpec spec = bundled("writer_letter");
  SimEnv env(build_state(spec.initial_state), spec);
  FollowerPlanner f;
  EpisodeOptions o;
  o.memory_window = 0;
  o.capture_prompts = true;
  const auto rec = run_episode(f, env, spec.goal_text, spec.guidance_trace, o);
  REQUIRE_FALSE(rec.prompts.empty());
  for (const auto& p : rec.prompts) {
    CHECK(p.find("History") == std::string::npos);
    CHECK(p.find("[plan ") == std::string::npos);
  }
  check_record_invariants(rec, 50);
}

TEST_CASE("failing plans retry twice, use the fallback, then go off trace") {
  const TaskSpec spec = bundled("copy_pikachu");
  SimEnv env(build_state(spec.initial_state), spec);
  const auto stray = ExecCommand::click(RelativeTarget{0, 0.99, 0.99});
  const auto fb = ExecCommand::hotkey(*parse_combo("Ctrl+a"));
  Scripted s({plan_reply(stray, "The photos window opens.", 0, fb)});
  EpisodeOptions o;
  o.budget = 7;
  const auto rec = run_episode(s, env, spec.goal_text, spec.guidance_trace, o);
  REQUIRE(rec.steps.size() == 7);
  CHECK(rec.steps[0].command == stray);
  CHECK(rec.steps[1].command == stray);
  CHECK(rec.steps[2].command == fb);
  CHECK(rec.steps[3].plan_index == 1);
  CHECK(rec.steps[3].attempt == 0);
  for (const auto& e : rec.steps) CHECK_FALSE(e.verify.pass);
  CHECK(longest_run(rec) == 3);
  REQUIRE(s.prompts.size() >= 2);
  CHECK(s.prompts[0].find("Off-trace") == std::string::npos);
  CHECK(s.prompts[1].find("Off-trace") != std::string::npos);
  CHECK(rec.reached_step == 0);
  CHECK(rec.termination == "budget");
}

TEST_CASE("one unparseable reply is retried, two end the episode") {
  const TaskSpec spec = bundled("copy_pikachu");
  {
    SimEnv env(build_state(spec.initial_state), spec);
    Scripted s({"garbage", plan_reply(ExecCommand::wait(10), "Nothing changes."), "{\"done\": true}"});
    EpisodeOptions o;
    o.budget = 1;
    const auto rec = run_episode(s, env, spec.goal_text, spec.guidance_trace, o);
    CHECK(rec.steps.size() == 1);
    CHECK(rec.steps[0].verify.pass);
  }
  {
    SimEnv env(build_state(spec.initial_state), spec);
    Scripted s({"garbage"});
    const auto rec = run_episode(s, env, spec.goal_text, spec.guidance_trace);
    CHECK(rec.steps.empty());
    CHECK(rec.termination.find("UnparseablePlan") != std::string::npos);
    CHECK(s.calls == 2);
  }
}

TEST_CASE("episodes are deterministic and honour invariants on every bundled task") {
  for (const auto& spec : load_task_dir(testsupport::tasks_dir())) {
    CAPTURE(spec.task_id);
    for (int window : {5, 0}) {
      for (bool guided : {true, false}) {
        EpisodeOptions o;
        o.memory_window = window;
        const std::vector<TraceStep> none;
        const auto& g = guided ? spec.guidance_trace : none;
        SimEnv a(build_state(spec.initial_state), spec);
        SimEnv b(build_state(spec.initial_state), spec);
        FollowerPlanner f;
        const auto ra = run_episode(f, a, spec.goal_text, g, o, static_cast<int>(spec.guidance_trace.size()));
        const auto rb = run_episode(f, b, spec.goal_text, g, o, static_cast<int>(spec.guidance_trace.size()));
        CHECK(to_json(ra).dump() == to_json(rb).dump());
        CHECK(a.state() == b.state());
        check_record_invariants(ra, o.budget);
        if (ra.success == 1 && guided && window > 0) CHECK(ra.reached_step == ra.trace_steps);
        if (guided && window > 0) CHECK(ra.success == 1);
        if (!guided) CHECK(ra.success == 0);
      }
    }
  }
}

TEST_CASE("episode record JSON layout") {
  const TaskSpec spec = bundled("copy_pikachu");
  SimEnv env(build_state(spec.initial_state), spec);
  FollowerPlanner f;
  const auto j = to_json(run_episode(f, env, spec.goal_text, spec.guidance_trace));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"task_id", "success", "reached_step", "trace_steps", "budget_used",
                                         "termination", "steps"});
  const auto& s0 = j["steps"][0];
  CHECK(s0["plan"]["current_step"] == 0);
  CHECK(s0["exec"]["ok"] == true);
  CHECK(s0["verify"]["pass"] == true);
  CHECK_NOTHROW(parse_command(s0["command"]));
}

}
