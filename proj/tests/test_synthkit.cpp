#include <set>

#include "aloha/consolidate.hpp"
#include "aloha/error.hpp"
#include "aloha/frames.hpp"
#include "aloha/rawlog.hpp"
#include "aloha/synthkit.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace aloha;

namespace {

SynthConfig seeded(std::uint64_t seed) {
  SynthConfig c;
  c.seed = seed;
  return c;
}

std::vector<SemanticAction> single(SemanticAction a) { return {std::move(a)}; }

}  // namespace

TEST_SUITE("synthkit") {

TEST_CASE("scripts are seeded and sized") {
  CHECK(gen_script(seeded(3)) == gen_script(seeded(3)));
  CHECK(gen_script(seeded(3)) != gen_script(seeded(4)));
  SynthConfig five = seeded(11);
  five.action_count = {5, 5};
  CHECK(gen_script(five).size() == 5);
}

TEST_CASE("every kind appears across seeds and geometry stays on screen") {
  std::set<ActionKind> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    for (const auto& a : gen_script(seeded(s))) {
      seen.insert(a.kind);
      std::vector<Point> pts = a.path;
      if (a.point) pts.push_back(*a.point);
      for (Point p : pts) {
        REQUIRE(p.x >= 0);
        REQUIRE(p.y >= 0);
        REQUIRE(p.x < 1920);
        REQUIRE(p.y < 1080);
      }
    }
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("click expands to one press pair within jitter") {
  const auto log = expand(single(SemanticAction::click(0, 0, MouseButton::L, {500, 400})), seeded(1));
  int downs = 0, ups = 0;
  Point down{}, up{};
  for (const auto& e : log.events) {
    if (e.kind == EventKind::MouseDown) ++downs, down = *e.pos;
    if (e.kind == EventKind::MouseUp) ++ups, up = *e.pos;
  }
  CHECK(downs == 1);
  CHECK(ups == 1);
  CHECK(std::abs(up.x - down.x) <= 2);
  CHECK(std::abs(up.y - down.y) <= 2);
}

TEST_CASE("scroll deltas sum to the notches") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto log = expand(single(SemanticAction::scroll(0, 0, {300, 300}, -2)), seeded(s));
    int sum = 0;
    for (const auto& e : log.events) {
      if (e.kind == EventKind::Scroll) sum += e.delta->y;
    }
    REQUIRE(sum == -240);
  }
}

TEST_CASE("typing expansion contains cancelled typos for some seeds") {
  bool typo_seen = false;
  for (std::uint64_t s = 0; s < 100 && !typo_seen; ++s) {
    const auto log = expand(single(SemanticAction::type(0, 0, "abcdefghij")), seeded(s));
    for (const auto& e : log.events) typo_seen |= e.kind == EventKind::KeyDown && *e.key == "Backspace";
    REQUIRE(*consolidate(log).at(0).text == "abcdefghij");
  }
  CHECK(typo_seen);
}

TEST_CASE("expansions validate and are deterministic") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto script = gen_script(seeded(s));
    const RawLog a = expand(script, seeded(s));
    CHECK_NOTHROW(validate(a));
    REQUIRE(a == expand(script, seeded(s)));
    REQUIRE(parse_raw_log(write_raw_log(a)) == a);
  }
}

TEST_CASE("oracle holds for seed 42") {
  const auto script = gen_script(seeded(42));
  std::string why;
  CHECK_MESSAGE(matches_script(consolidate(expand(script, seeded(42))), script, 2, &why), why);
}

TEST_CASE("oracle holds over a thousand seeds") {
  int mismatches = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto cfg = seeded(s);
    const auto script = gen_script(cfg);
    const Expansion ex = expand_timed(script, cfg);
    std::string why;
    if (!matches_script(consolidate(ex.log), script, cfg.noise.move_jitter_px, &why)) {
      ++mismatches;
      MESSAGE("seed " << s << ": " << why);
    }
    REQUIRE(consolidate(ex.log).size() == ex.truth.size());
  }
  CHECK(mismatches == 0);
}

TEST_CASE("matches_script detects differences") {
  const auto a = single(SemanticAction::click(0, 0, MouseButton::L, {10, 10}));
  CHECK(matches_script(single(SemanticAction::click(5, 9, MouseButton::L, {12, 8})), a, 2));
  CHECK_FALSE(matches_script(single(SemanticAction::click(0, 0, MouseButton::L, {13, 10})), a, 2));
  CHECK_FALSE(matches_script(single(SemanticAction::click(0, 0, MouseButton::R, {10, 10})), a, 2));
  CHECK_FALSE(matches_script({}, a, 2));
  CHECK_FALSE(matches_script(single(SemanticAction::type(0, 0, "x")), single(SemanticAction::type(0, 0, "y")), 2));
}

TEST_CASE("noise beyond a threshold is refused") {
  SynthConfig cfg = seeded(1);
  cfg.noise.move_jitter_px = 5;
  CHECK_THROWS_AS(check_noise(cfg), Error);
  SynthConfig slow = seeded(1);
  slow.noise.inter_key_gap_ms = {60, 1000};
  CHECK_THROWS_AS(check_noise(slow), Error);
  SynthConfig hold = seeded(1);
  hold.noise.click_duration_ms = {30, 500};
  CHECK_THROWS_AS(expand(gen_script(hold), hold), Error);
  ConsolidationConfig tight;
  tight.dblclick_gap_ms = 100;
  CHECK_THROWS_AS(check_noise(seeded(1), tight), Error);
  CHECK_NOTHROW(check_noise(seeded(1)));
}

TEST_CASE("consolidation survives noise beyond its thresholds") {
  for (std::uint64_t s = 0; s < 300; ++s) {
    SynthConfig cfg = seeded(s);
    const auto script = gen_script(cfg);
    cfg.noise.move_jitter_px = 2;
    const RawLog log = expand(script, cfg);
    ConsolidationConfig tight;
    tight.click_max_px = 1;
    tight.dblclick_gap_ms = 1;
    tight.type_gap_ms = 1;
    tight.scroll_gap_ms = 1;
    tight.click_max_ms = 1;
    std::vector<SemanticAction> out;
    REQUIRE_NOTHROW(out = consolidate(log, tight));
    CHECK_NOTHROW(validate(out));
  }
}

TEST_CASE("synthetic frames at 30 fps") {
  testsupport::TempDir dir("frames30");
  const FrameIndex idx = write_synthetic_frames(dir.path(), 1000, 30, 64, 48);
  REQUIRE(idx.entries.size() >= 30);
  for (std::size_t i = 1; i < idx.entries.size(); ++i) {
    const auto d = idx.entries[i].t - idx.entries[i - 1].t;
    REQUIRE((d == 33 || d == 34));
  }
  const FrameIndex again = load_frame_index(dir.path());
  CHECK(again.entries == idx.entries);
  CHECK(again.load(0).w == 64);
}

}
