// Every tagged example in docs/formats must parse (or fail) as documented.

#include <regex>

#include "aloha/actor.hpp"
#include "aloha/config.hpp"
#include "aloha/consolidate.hpp"
#include "aloha/eval.hpp"
#include "aloha/frames.hpp"
#include "aloha/json_extract.hpp"
#include "aloha/rawlog.hpp"
#include "aloha/trace.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace aloha;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Block {
  std::string file;
  std::string tag;
  std::string expect_error;  // error code name after '!'
  std::optional<std::size_t> expect_line;
  bool feeds_next = false;   // "=>x": the next block is the expected output
  std::string body;
};

std::vector<Block> blocks_in(const fs::path& md) {
  std::vector<Block> out;
  std::istringstream in(testsupport::slurp(md));
  std::string line;
  std::optional<Block> cur;
  static const std::regex fence_re(R"(^```([a-z-]+)(?: !(\w+)(?:@(\d+))?)?(?: =>([a-z-]+))?$)");
  while (std::getline(in, line)) {
    if (cur) {
      if (line == "```") {
        out.push_back(std::move(*cur));
        cur.reset();
      } else {
        cur->body += line + "\n";
      }
      continue;
    }
    if (!line.starts_with("```")) continue;
    Block b;
    b.file = md.filename().string();
    std::smatch m;
    if (std::regex_match(line, m, fence_re)) {
      b.tag = m[1];
      b.expect_error = m[2];
      if (m[3].matched) b.expect_line = std::stoul(m[3]);
      b.feeds_next = m[4].matched;
    }
    cur = b;
  }
  REQUIRE_FALSE(cur);
  return out;
}

std::vector<Block> all_blocks() {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(testsupport::source_dir() / "docs" / "formats")) {
    if (e.path().extension() == ".md") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Block> out;
  for (const auto& f : files) {
    for (auto& b : blocks_in(f)) out.push_back(std::move(b));
  }
  return out;
}

std::vector<std::string> keys_of(const ojson& j) {
  std::vector<std::string> k;
  for (auto it = j.begin(); it != j.end(); ++it) k.push_back(it.key());
  return k;
}

void expect_error(const Block& b, const std::function<void()>& f) {
  try {
    f();
    FAIL("expected " << b.expect_error);
  } catch (const Error& e) {
    CHECK(std::string(to_string(e.code())) == b.expect_error);
    if (b.expect_line) CHECK(e.line() == b.expect_line);
  }
}

void frames_dir(const fs::path& dir, const std::string& idx) {
  fs::create_directories(dir);
  std::ofstream(dir / "frames.idx", std::ios::binary) << idx;
  std::istringstream in(idx);
  for (std::string l; std::getline(in, l);) {
    const auto tab = l.find('\t');
    if (tab == std::string::npos) continue;
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06d.ppm", std::stoi(l.substr(0, tab)));
    write_image(dir / name, Raster(8, 8, {1, 2, 3}));
  }
}

}  // namespace

TEST_SUITE("docs") {

TEST_CASE("format documents carry tagged examples") {
  const auto blocks = all_blocks();
  std::map<std::string, int> per_file, per_tag;
  for (const auto& b : blocks) {
    if (b.tag.empty()) continue;
    per_file[b.file]++;
    per_tag[b.tag]++;
  }
  for (const char* f : {"raw-log.md", "cleaned-log.md", "frames-index.md", "trace.md", "command.md", "task.md",
                        "report.md", "config.md"}) {
    CAPTURE(f);
    CHECK(per_file[f] > 0);
  }
  for (const char* t : {"rawlog", "cleaned", "frames-idx", "trace", "trace-reply", "plan-reply", "http-request",
                        "command", "task", "episode", "report", "config"}) {
    CAPTURE(t);
    CHECK(per_tag[t] > 0);
  }
}

TEST_CASE("every tagged example behaves as documented") {
  const auto blocks = all_blocks();
  testsupport::TempDir tmp("docs");
  int checked = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (b.tag.empty()) continue;
    CAPTURE(b.file);
    CAPTURE(b.tag);
    CAPTURE(b.body);
    ++checked;
    if (!b.expect_error.empty()) {
      if (b.tag == "rawlog") expect_error(b, [&] { parse_raw_log(b.body); });
      else if (b.tag == "command") expect_error(b, [&] { parse_command(std::string_view(b.body)); });
      else if (b.tag == "config") expect_error(b, [&] { parse_config(b.body); });
      else if (b.tag == "frames-idx") {
        const fs::path dir = tmp / ("bad" + std::to_string(i));
        frames_dir(dir, b.body);
        expect_error(b, [&] { load_frame_index(dir); });
      } else FAIL("no error check for tag " << b.tag);
      continue;
    }
    if (b.tag == "rawlog") {
      const RawLog log = parse_raw_log(b.body);
      CHECK(write_raw_log(log) == b.body);
      if (b.feeds_next) {
        REQUIRE(i + 1 < blocks.size());
        CHECK(write_cleaned_log(consolidate(log)) == blocks[i + 1].body);
      }
    } else if (b.tag == "cleaned") {
      CHECK(write_cleaned_log(read_cleaned_log(b.body)) == b.body);
    } else if (b.tag == "frames-idx") {
      const fs::path dir = tmp / ("ok" + std::to_string(i));
      frames_dir(dir, b.body);
      const FrameIndex idx = load_frame_index(dir);
      CHECK(write_frame_index(idx.entries) == b.body);
    } else if (b.tag == "trace") {
      const auto steps = read_trace(b.body);
      CHECK(write_trace(steps) == b.body);
      for (const auto& s : steps) {
        CHECK_FALSE(contains_coordinate_pair(s.observation + " " + s.think + " " + s.action + " " + s.expectation));
        CHECK(is_canonical_verb(s.action.substr(0, s.action.find(' '))));
      }
    } else if (b.tag == "trace-reply") {
      SemanticAction click;
      click.kind = ActionKind::Click;
      click.point = Point{1, 1};
      CHECK_NOTHROW(postprocess_step(b.body, click));
    } else if (b.tag == "plan-reply") {
      const PlanStep p = parse_plan(b.body);
      CHECK(p.command);
    } else if (b.tag == "http-request") {
      const auto j = ojson::parse(b.body);
      CHECK(keys_of(j) == keys_of(ojson::parse(http_request_body("p", {}))));
    } else if (b.tag == "command") {
      const ExecCommand c = parse_command(std::string_view(b.body));
      CHECK(parse_command(to_json(c)) == c);
    } else if (b.tag == "task") {
      const TaskSpec spec = parse_task(b.body);
      SimEnv env(build_state(spec.initial_state), spec);
      CHECK(env.score() == 0);
      FollowerPlanner f;
      const auto rec = run_episode(f, env, spec.goal_text, spec.guidance_trace);
      CHECK(rec.success == 1);
    } else if (b.tag == "episode") {
      const auto j = ojson::parse(b.body);
      const TaskSpec spec = load_task_file(testsupport::tasks_dir() / "copy_pikachu.json").second;
      SimEnv env(build_state(spec.initial_state), spec);
      FollowerPlanner f;
      const auto real = to_json(run_episode(f, env, spec.goal_text, spec.guidance_trace));
      CHECK(keys_of(j) == keys_of(real));
      CHECK(keys_of(j["steps"][0]) == keys_of(real["steps"][0]));
      CHECK(keys_of(j["steps"][0]["plan"]) == keys_of(real["steps"][0]["plan"]));
      CHECK_NOTHROW(parse_command(j["steps"][0]["command"]));
    } else if (b.tag == "report") {
      const auto j = ojson::parse(b.body);
      EvalReport empty;
      for (auto c : kFailureCategories) empty.failure_breakdown[c] = 0;
      const auto real = to_json(empty);
      CHECK(keys_of(j) == keys_of(real));
      CHECK(keys_of(j["failure_breakdown"]) == keys_of(real["failure_breakdown"]));
      int failures = 0, sum = 0;
      for (const auto& t : j["per_task"]) failures += t["success"] == 0 ? 1 : 0;
      for (const auto& [k, v] : j["failure_breakdown"].items()) sum += v.get<int>();
      CHECK(sum == failures);
    } else if (b.tag == "config") {
      CHECK_NOTHROW(parse_config(b.body));
    } else {
      FAIL("unknown tag " << b.tag);
    }
  }
  CHECK(checked >= 30);
}

}
