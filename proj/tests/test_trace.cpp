#include <regex>
#include <set>

#include "aloha/consolidate.hpp"

#include "aloha/error.hpp"
#include "aloha/json_extract.hpp"
#include "aloha/synthkit.hpp"
#include "aloha/trace.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace aloha;

namespace {

MarkedPair pair_for(const SemanticAction& a) {
  auto frame = std::make_shared<const Raster>(640, 600, Rgb{30, 60, 90});
  return has_geometry(a.kind) ? make_marked_pair(frame, a) : make_context_pair(frame, {10, 10}, a.kind);
}

TraceStep step(const std::string& action) { return {"o", "t", action, "e", 0}; }

const SemanticAction kClick = SemanticAction::click(0, 10, MouseButton::L, {100, 100});

// Replays canned replies and records every prompt it saw.
struct ScriptedBackend : VlmBackend {
  std::vector<std::string> replies;
  std::vector<PromptBundle> seen;
  std::string complete(const PromptBundle& p) override {
    seen.push_back(p);
    const std::string r = replies.at(std::min(seen.size() - 1, replies.size() - 1));
    return r;
  }
};

struct Recording : VlmBackend {
  MockVlmBackend inner;
  std::vector<PromptBundle> seen;
  std::string complete(const PromptBundle& p) override {
    seen.push_back(p);
    return inner.complete(p);
  }
};

struct Down : VlmBackend {
  std::string complete(const PromptBundle&) override { fail(ErrorCode::BackendUnavailable, "offline"); }
};

FrameProvider flat_frames() {
  auto frame = std::make_shared<const Raster>(1920, 1080, Rgb{200, 200, 200});
  return [frame](std::int64_t) { return frame; };
}

}  // namespace

TEST_SUITE("trace") {

TEST_CASE("prompt history window") {
  std::vector<TraceStep> hist;
  CHECK(build_prompt(kClick, pair_for(kClick), hist).history_summary.empty());
  for (int i = 1; i <= 5; ++i) hist.push_back(step("click step " + std::to_string(i)));
  CHECK(build_prompt(kClick, pair_for(kClick), hist).history_summary == "click step 3\nclick step 4\nclick step 5");
}

TEST_CASE("prompt parts and image order") {
  const auto drag = SemanticAction::drag(0, 1, MouseButton::L, {{100, 100}, {300, 200}});
  const auto pair = pair_for(drag);
  const auto b = build_prompt(drag, pair, {});
  CHECK(b.delta == default_prompt_resources().deltas.at(ActionKind::Drag));
  CHECK(b.base_instruction == default_prompt_resources().base_instruction);
  REQUIRE(b.images.size() == 2);
  CHECK(b.images[0]->w == 512);
  CHECK(b.images[1] == pair.context);
  const std::string text = b.text();
  CHECK(text.find(b.delta) != std::string::npos);
  CHECK_FALSE(contains_coordinate_pair(text));
}

TEST_CASE("every kind has its own delta") {
  const auto& res = default_prompt_resources();
  CHECK(res.version == 1);
  REQUIRE(res.deltas.size() == 7);
  std::set<std::string> distinct;
  for (const auto& [k, v] : res.deltas) distinct.insert(v);
  CHECK(distinct.size() == 7);
  CHECK_THROWS_AS(parse_prompt_resources("{\"version\":1}"), Error);
}

TEST_CASE("coordinate stripping") {
  const auto s = postprocess_step(
      R"j({"observation":"a File menu","think":"open it","action":"click the File menu at (34, 12)","expectation":"menu opens"})j",
      kClick);
  CHECK(s.action == "click the File menu at the marked location");
  CHECK(strip_coordinates("( 3 ,4 ) and (5,6)") == "the marked location and the marked location");
  CHECK_FALSE(contains_coordinate_pair("(a, 4)"));
  CHECK(contains_coordinate_pair("x (1,  2) y"));
}

TEST_CASE("field errors") {
  CHECK(testsupport::error_code([] { postprocess_step(R"j({"observation":"a","think":"b","action":"click"})j", kClick); }) ==
        ErrorCode::MissingField);
  CHECK(testsupport::error_code([] {
          postprocess_step(R"j({"observation":"a","think":" ","action":"click","expectation":"x"})j", kClick);
        }) == ErrorCode::EmptyField);
  CHECK(testsupport::error_code([] { postprocess_step("no object here", kClick); }) == ErrorCode::NoJsonObject);
  try {
    postprocess_step(R"j({"observation":"a","think":"b","action":"click"})j", kClick);
  } catch (const Error& e) {
    CHECK(e.detail() == "expectation");
  }
}

TEST_CASE("verb normalization") {
  CHECK(normalize_action_verb("tap the OK button", ActionKind::Click) == "click the OK button");
  CHECK(normalize_action_verb("Select the row", ActionKind::Click) == "click the row");
  CHECK(normalize_action_verb("enter \"abc\"", ActionKind::Type) == "type \"abc\"");
  CHECK(normalize_action_verb("move the file to the bin", ActionKind::Drag) == "drag the file to the bin");
  CHECK(normalize_action_verb("click the slider", ActionKind::Drag) == "drag the slider");
  CHECK(normalize_action_verb("the OK button", ActionKind::Click) == "click the OK button");
  CHECK(normalize_action_verb("tapestry view", ActionKind::Click) == "click tapestry view");
}

TEST_CASE("object embedded in prose") {
  const std::string raw =
      "Sure! Here is the step: {\"observation\":\"a {curly} label\",\"think\":\"t\",\"action\":\"press the button\","
      "\"expectation\":\"done\"} Hope that helps {not json}";
  const auto s = postprocess_step(raw, kClick);
  CHECK(s.observation == "a {curly} label");
  CHECK(s.action == "click the button");
  CHECK(extract_first_json_object("{bad} {\"a\":1}") == std::optional<std::string>("{\"a\":1}"));
  CHECK_FALSE(extract_first_json_object("{\"a\":"));
}

TEST_CASE("mock templates") {
  MockVlmBackend mock;
  auto click = generate_step(mock, kClick, pair_for(kClick), {}, 0);
  CHECK(click.action == "click the marked element");
  const auto drag = SemanticAction::drag(0, 1, MouseButton::L, {{100, 100}, {300, 200}});
  CHECK(generate_step(mock, drag, pair_for(drag), {}, 1).action == "drag from the marked start along the marked path");
  const auto typed = SemanticAction::type(0, 1, "hello");
  CHECK(generate_step(mock, typed, pair_for(typed), {}, 2).action == "type \"hello\" into the focused field");
  const auto hk = SemanticAction::hotkey(0, *parse_combo("Ctrl+s"));
  CHECK(generate_step(mock, hk, pair_for(hk), {}, 3).action == "hotkey Ctrl+s");
}

TEST_CASE("one retry when no object comes back") {
  const std::string good = R"j({"observation":"o","think":"t","action":"click it","expectation":"e"})j";
  ScriptedBackend once;
  once.replies = {"garbage", good};
  CHECK(generate_step(once, kClick, pair_for(kClick), {}, 7).source_action_index == 7);
  CHECK(once.seen.size() == 2);
  ScriptedBackend twice;
  twice.replies = {"garbage"};
  CHECK(testsupport::error_code([&] { generate_step(twice, kClick, pair_for(kClick), {}, 0); }) ==
        ErrorCode::NoJsonObject);
  CHECK(twice.seen.size() == 2);
  ScriptedBackend missing;
  missing.replies = {R"j({"observation":"o"})j", good};
  CHECK_THROWS_AS(generate_step(missing, kClick, pair_for(kClick), {}, 0), Error);
  CHECK(missing.seen.size() == 1);
}

TEST_CASE("backend errors propagate with the action index") {
  Down down;
  const std::vector<SemanticAction> acts{kClick};
  try {
    generate_trace(down, acts, flat_frames());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendUnavailable);
    CHECK(e.line() == std::optional<std::size_t>(0));
  }
}

TEST_CASE("trace over a synthetic demo") {
  MockVlmBackend mock;
  CHECK(generate_trace(mock, std::vector<SemanticAction>{}, flat_frames()).empty());
  const std::vector<SemanticAction> acts{
      SemanticAction::click(100, 150, MouseButton::L, {400, 300}), SemanticAction::type(1300, 1500, "report"),
      SemanticAction::hotkey(2800, *parse_combo("Ctrl+s")), SemanticAction::scroll(4000, 4100, {800, 600}, -2)};
  Recording rec;
  const auto trace = generate_trace(rec, acts, flat_frames());
  REQUIRE(trace.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(trace[i].source_action_index == static_cast<std::int64_t>(i));
  REQUIRE(rec.seen.size() == 4);
  CHECK(rec.seen[3].history_summary == trace[0].action + "\n" + trace[1].action + "\n" + trace[2].action);
  CHECK(rec.seen[0].history_summary.empty());
  CHECK(rec.seen[1].history_summary == trace[0].action);
}

TEST_CASE("trace files from a frame directory") {
  testsupport::TempDir dir("trace");
  SynthConfig cfg;
  cfg.seed = 5;
  const Expansion ex = expand_timed(gen_script(cfg), cfg);
  const FrameIndex idx =
      write_synthetic_frames(dir / "frames", ex.log.events.back().t + 100, 4, cfg.screen_w, cfg.screen_h);
  MockVlmBackend mock;
  const auto trace = generate_trace(mock, ex.truth, idx);
  CHECK(trace.size() == ex.truth.size());
  const std::string doc = write_trace(trace);
  CHECK(read_trace(doc) == trace);
}

TEST_CASE("schema, verb set and reproducibility over many recordings") {
  const std::regex key_order(R"j(^\{"observation":.*,"think":.*,"action":.*,"expectation":.*,"source_action_index":\d+\}$)j");
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    const auto actions = consolidate(expand(gen_script(cfg), cfg));
    MockVlmBackend a, b;
    const std::string first = write_trace(generate_trace(a, actions, flat_frames()));
    const std::string second = write_trace(generate_trace(b, actions, flat_frames()));
    REQUIRE(first == second);
    const auto steps = read_trace(first);
    REQUIRE(steps.size() == actions.size());
    for (const auto& line : testsupport::lines(first)) {
      REQUIRE(std::regex_match(line, key_order));
      const auto j = nlohmann::json::parse(line);
      REQUIRE(j.size() == 5);
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const auto& s = steps[i];
      for (const std::string* f : {&s.observation, &s.think, &s.action, &s.expectation}) {
        REQUIRE_FALSE(f->empty());
        REQUIRE_FALSE(contains_coordinate_pair(*f));
      }
      const std::string verb = s.action.substr(0, s.action.find(' '));
      REQUIRE(is_canonical_verb(verb));
      REQUIRE(verb == canonical_verb(actions[i].kind));
    }
  }
}

TEST_CASE("trace reader rejects bad records") {
  CHECK_THROWS_AS(read_trace(R"j({"observation":"o","think":"t","action":"jump","expectation":"e","source_action_index":0})j"),
                  Error);
  CHECK_THROWS_AS(
      read_trace(R"j({"observation":"o","think":"t","action":"click (1, 2)","expectation":"e","source_action_index":0})j"),
      Error);
  CHECK_THROWS_AS(read_trace(R"j({"observation":"o","think":"t","action":"click","expectation":"e"})j"), Error);
  CHECK_THROWS_AS(
      read_trace(R"j({"observation":"o","think":"t","action":"click","expectation":"e","source_action_index":0,"x":1})j"),
      Error);
}

}
