#include <sys/wait.h>

#include <cstdlib>

#include "aloha/consolidate.hpp"
#include "aloha/trace.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

using namespace aloha;
namespace fs = std::filesystem;

namespace {

struct Run {
  int rc = -1;
  std::string out, err;
};

Run cli(const std::string& args, const testsupport::TempDir& tmp) {
  const fs::path o = tmp / "stdout.txt", e = tmp / "stderr.txt";
  const std::string cmd = std::string("env -u ALOHA_VLM_ENDPOINT -u ALOHA_VLM_API_KEY '") + ALOHA_CLI_PATH + "' " +
                          args + " >'" + o.string() + "' 2>'" + e.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testsupport::slurp(o);
  r.err = testsupport::slurp(e);
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("eval is byte-reproducible and writes json plus table") {
  testsupport::TempDir tmp("cli_eval");
  const Run a = cli("eval " + q(testsupport::tasks_dir()) + " -o " + q(tmp / "a.json"), tmp);
  REQUIRE(a.rc == 0);
  const Run b = cli("eval " + q(testsupport::tasks_dir()) + " -o " + q(tmp / "b.json"), tmp);
  REQUIRE(b.rc == 0);
  const std::string ja = testsupport::slurp(tmp / "a.json");
  CHECK(ja == testsupport::slurp(tmp / "b.json"));
  CHECK(testsupport::slurp(tmp / "a.txt") == testsupport::slurp(tmp / "b.txt"));
  CHECK(a.out == testsupport::slurp(tmp / "a.txt"));
  const auto j = nlohmann::json::parse(ja);
  CHECK(j["per_task"].size() == 20);
  CHECK(j["success_rate"].get<double>() >= 0.9);

  const Run c = cli("eval --no-trace " + q(testsupport::tasks_dir()), tmp);
  REQUIRE(c.rc == 0);
  CHECK(nlohmann::json::parse(c.out)["success_rate"] == 0.0);
  CHECK(nlohmann::json::parse(c.out)["toggles"]["teach_trace"] == false);
}

TEST_CASE("demo-gen, clean, mark and trace chain together") {
  testsupport::TempDir tmp("cli_chain");
  const fs::path demo = tmp / "demo";
  REQUIRE(cli("demo-gen --seed 11 --frames -o " + q(demo), tmp).rc == 0);
  const Run clean = cli("clean " + q(demo / "raw.log") + " -o " + q(tmp / "cleaned.jsonl"), tmp);
  REQUIRE(clean.rc == 0);
  const std::string cleaned = testsupport::slurp(tmp / "cleaned.jsonl");
  CHECK(cleaned == testsupport::slurp(demo / "truth.jsonl"));
  const auto actions = read_cleaned_log(cleaned);
  REQUIRE_FALSE(actions.empty());

  const Run mark = cli("mark " + q(tmp / "cleaned.jsonl") + " " + q(demo / "frames") + " -o " + q(tmp / "marks"), tmp);
  REQUIRE(mark.rc == 0);
  CHECK(testsupport::lines(testsupport::slurp(tmp / "marks" / "marks.jsonl")).size() == actions.size());
  CHECK(fs::exists(tmp / "marks" / "mark_0000.png"));

  const Run t1 = cli("trace " + q(tmp / "cleaned.jsonl") + " " + q(demo / "frames"), tmp);
  REQUIRE(t1.rc == 0);
  const Run t2 = cli("trace " + q(tmp / "cleaned.jsonl") + " " + q(demo / "frames"), tmp);
  CHECK(t1.out == t2.out);
  const auto steps = read_trace(t1.out);
  CHECK(steps.size() == actions.size());
  for (const auto& s : steps) CHECK_FALSE(contains_coordinate_pair(s.action));
}

TEST_CASE("run prints an episode record") {
  testsupport::TempDir tmp("cli_run");
  const Run r = cli("run " + q(testsupport::tasks_dir() / "copy_pikachu.json"), tmp);
  REQUIRE(r.rc == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["success"] == 1);
  CHECK(j["budget_used"].get<int>() <= 12);
  CHECK(r.err.find("copy_pikachu: success=1") != std::string::npos);

  const Run capped = cli("--budget 2 run " + q(testsupport::tasks_dir() / "copy_pikachu.json"), tmp);
  REQUIRE(capped.rc == 0);
  CHECK(nlohmann::json::parse(capped.out)["budget_used"].get<int>() <= 2);
}

TEST_CASE("exit codes") {
  testsupport::TempDir tmp("cli_rc");
  CHECK(cli("", tmp).rc == 1);
  CHECK(cli("frobnicate", tmp).rc == 1);
  CHECK(cli("clean", tmp).rc == 1);
  CHECK(cli("--planner oracle eval " + q(testsupport::tasks_dir()), tmp).rc == 1);
  CHECK(cli("--help", tmp).rc == 0);

  std::ofstream(tmp / "bad.log") << "#ALOHA-RAW v1 1920 1080 30\n100\tMOUSE_UP\tL 1 1\n";
  const Run bad = cli("clean " + q(tmp / "bad.log"), tmp);
  CHECK(bad.rc == 2);
  CHECK(bad.err.find("UnmatchedMouseUp") != std::string::npos);
  CHECK(cli("clean " + q(tmp / "missing.log"), tmp).rc == 2);

  const Run vlm = cli("--planner vlm run " + q(testsupport::tasks_dir() / "copy_pikachu.json"), tmp);
  CHECK(vlm.rc == 3);
  CHECK(vlm.err.find("BackendUnavailable") != std::string::npos);
  CHECK(cli("--backend http trace " + q(tmp / "missing.jsonl") + " " + q(tmp.path()), tmp).rc == 2);
}

}
