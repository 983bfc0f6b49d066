// aloha: command-line front end for the demonstration pipeline, the
// simulated desktop and the evaluation harness.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "aloha/actor.hpp"
#include "aloha/config.hpp"
#include "aloha/consolidate.hpp"
#include "aloha/error.hpp"
#include "aloha/eval.hpp"
#include "aloha/frames.hpp"
#include "aloha/http_backend.hpp"
#include "aloha/rawlog.hpp"
#include "aloha/simenv.hpp"
#include "aloha/synthkit.hpp"
#include "aloha/trace.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace aloha;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + out_path);
  out << text;
}

struct Globals {
  std::string config_path;
  std::string backend;
  std::string planner;
  int budget = 0;
  int jobs = 0;
  bool no_trace = false;
  bool no_memory = false;

  AppConfig resolve() const {
    AppConfig c = config_path.empty() ? AppConfig{} : load_config(config_path);
    apply_env(c);
    if (!backend.empty()) c.trace_backend = backend;
    if (!planner.empty()) c.planner = planner;
    if (budget > 0) c.budget = budget;
    if (jobs > 0) c.jobs = jobs;
    try {
      validate(c);
    } catch (const Error& e) {
      throw UsageError(e.detail());
    }
    return c;
  }
};

EvalOptions eval_options(const AppConfig& c, const Globals& g) {
  EvalOptions o;
  o.planner = parse_planner_mode(c.planner).value_or(PlannerMode::Follower);
  o.budget = c.budget;
  o.memory_window = c.memory_window;
  o.jobs = c.jobs;
  o.endpoint = c.endpoint;
  o.toggles.teach_trace = !g.no_trace;
  o.toggles.planner_memory = !g.no_memory;
  if (o.planner == PlannerMode::Vlm && !o.endpoint) fail(ErrorCode::BackendUnavailable, "set ALOHA_VLM_ENDPOINT");
  return o;
}

int cmd_clean(const Globals& g, const std::string& in, const std::string& out) {
  const AppConfig c = g.resolve();
  const RawLog log = parse_raw_log(slurp(in));
  emit(out, write_cleaned_log(consolidate(log, c.consolidation)));
  return kExitOk;
}

int cmd_mark(const Globals& g, const std::string& cleaned, const std::string& frames, const std::string& out_dir) {
  const AppConfig c = g.resolve();
  const auto actions = read_cleaned_log(slurp(cleaned));
  const FrameIndex idx = load_frame_index(frames);
  fs::create_directories(out_dir);
  std::string manifest;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto& a = actions[i];
    const std::int64_t frame_no = frame_at(idx, a.t_start);
    auto frame = std::make_shared<const Raster>(idx.load(frame_no));
    const MarkedPair pair =
        has_geometry(a.kind) ? make_marked_pair(frame, a, c.mark)
                             : make_context_pair(frame, cursor_before(actions, i, frame->w, frame->h), a.kind, c.mark);
    char name[32];
    std::snprintf(name, sizeof name, "mark_%04zu.png", i);
    write_image(fs::path(out_dir) / name, pair.crop);
    nlohmann::ordered_json j;
    j["index"] = i;
    j["kind"] = std::string(to_string(a.kind));
    j["frame_no"] = frame_no;
    j["crop_origin"] = {pair.crop_origin.x, pair.crop_origin.y};
    j["crop"] = name;
    manifest += j.dump() + "\n";
  }
  std::ofstream(fs::path(out_dir) / "marks.jsonl", std::ios::binary) << manifest;
  std::cout << actions.size() << " actions marked into " << out_dir << "\n";
  return kExitOk;
}

int cmd_trace(const Globals& g, const std::string& cleaned, const std::string& frames, const std::string& out) {
  const AppConfig c = g.resolve();
  const auto actions = read_cleaned_log(slurp(cleaned));
  const FrameIndex idx = load_frame_index(frames);
  std::unique_ptr<VlmBackend> backend;
  if (c.trace_backend == "http") {
    if (!c.endpoint) fail(ErrorCode::BackendUnavailable, "set ALOHA_VLM_ENDPOINT");
    backend = std::make_unique<HttpVlmBackend>(*c.endpoint);
  } else {
    backend = std::make_unique<MockVlmBackend>();
  }
  emit(out, write_trace(generate_trace(*backend, actions, idx, c.mark)));
  return kExitOk;
}

int cmd_run(const Globals& g, const std::string& task_path, const std::string& out) {
  const AppConfig c = g.resolve();
  const EvalOptions o = eval_options(c, g);
  const auto [state, spec] = load_task_file(task_path);
  EpisodeRecord rec;
  const TaskResult r = run_task(spec, o, &rec);
  if (!r.error.empty()) {
    std::cerr << "error: " << r.error << "\n";
    return r.error.find("BackendUnavailable") != std::string::npos ? kExitBackend : kExitData;
  }
  emit(out, to_json(rec).dump(2) + "\n");
  if (rec.termination.find("BackendUnavailable") != std::string::npos) {
    std::cerr << rec.termination << "\n";
    return kExitBackend;
  }
  std::cerr << spec.task_id << ": success=" << r.success << " reached=" << r.reached_step << "/" << r.trace_steps
            << " budget_used=" << r.budget_used << " termination=" << r.termination << "\n";
  return kExitOk;
}

int cmd_eval(const Globals& g, const std::string& dir, const std::string& out, const std::string& records) {
  const AppConfig c = g.resolve();
  EvalOptions o = eval_options(c, g);
  if (!records.empty()) o.records_dir = records;
  const EvalReport rep = run_eval(fs::path(dir), o);
  const std::string json = to_json(rep).dump(2) + "\n";
  const std::string table = report_table(rep);
  if (out.empty()) {
    std::cout << json;
    std::cerr << table;
  } else {
    emit(out, json);
    fs::path tp(out);
    tp.replace_extension(".txt");
    emit(tp.string(), table);
    std::cout << table;
  }
  return kExitOk;
}

int cmd_demo_gen(const Globals& g, std::uint64_t seed, const std::string& out_dir, bool frames, int fps) {
  const AppConfig c = g.resolve();
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.fps = fps;
  const auto script = gen_script(cfg);
  const Expansion ex = expand_timed(script, cfg, c.consolidation);
  fs::create_directories(out_dir);
  emit((fs::path(out_dir) / "truth.jsonl").string(), write_cleaned_log(ex.truth));
  emit((fs::path(out_dir) / "raw.log").string(), write_raw_log(ex.log));
  std::cout << ex.truth.size() << " actions, " << ex.log.events.size() << " raw events\n";
  if (frames) {
    const std::int64_t end = ex.log.events.empty() ? 0 : ex.log.events.back().t + 500;
    const FrameIndex idx = write_synthetic_frames(fs::path(out_dir) / "frames", end, fps, cfg.screen_w, cfg.screen_h);
    std::cout << idx.entries.size() << " frames\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aloha: demonstration-to-agent pipeline and simulated desktop harness"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--backend", g.backend, "trace backend: mock | http");
  app.add_option("--planner", g.planner, "planner: follower | vlm");
  app.add_option("--budget", g.budget, "step budget per episode")->check(CLI::PositiveNumber);
  app.add_option("--jobs", g.jobs, "parallel tasks in eval")->check(CLI::PositiveNumber);
  app.add_flag("--no-trace", g.no_trace, "withhold the guidance trace from the planner");
  app.add_flag("--no-memory", g.no_memory, "disable planner memory");

  std::string in, frames, out, records;
  auto* clean = app.add_subcommand("clean", "consolidate a raw event log into a cleaned action log");
  clean->add_option("rawlog", in, "raw event log")->required();
  clean->add_option("-o,--out", out, "output file (default stdout)");

  auto* mark = app.add_subcommand("mark", "render marked crops for every cleaned action");
  mark->add_option("cleaned", in, "cleaned action log")->required();
  mark->add_option("frames", frames, "frame directory with frames.idx")->required();
  mark->add_option("-o,--out", out, "output directory")->required();

  auto* trace = app.add_subcommand("trace", "generate the four-field teaching trace");
  trace->add_option("cleaned", in, "cleaned action log")->required();
  trace->add_option("frames", frames, "frame directory with frames.idx")->required();
  trace->add_option("-o,--out", out, "output file (default stdout)");

  auto* run = app.add_subcommand("run", "run one task episode in the simulator");
  run->add_option("task", in, "task JSON")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out, "episode record output (default stdout)");

  auto* eval = app.add_subcommand("eval", "run every task in a directory and report");
  eval->add_option("task_dir", in, "directory of task JSON files")->required()->check(CLI::ExistingDirectory);
  eval->add_option("-o,--out", out, "report JSON; the table goes next to it as .txt");
  eval->add_option("--records", records, "directory for episode records, digests and effect logs");

  std::uint64_t seed = 0;
  bool with_frames = false;
  int fps = 4;
  auto* demo = app.add_subcommand("demo-gen", "synthesize a ground-truth script, its raw log and frames");
  demo->add_option("--seed", seed, "generator seed");
  demo->add_option("-o,--out", out, "output directory")->required();
  demo->add_flag("--frames", with_frames, "also write flat-color frames with an index");
  demo->add_option("--fps", fps, "frame rate for --frames")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*clean) return cmd_clean(g, in, out);
    if (*mark) return cmd_mark(g, in, frames, out);
    if (*trace) return cmd_trace(g, in, frames, out);
    if (*run) return cmd_run(g, in, out);
    if (*eval) return cmd_eval(g, in, out, records);
    if (*demo) return cmd_demo_gen(g, seed, out, with_frames, fps);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::BackendUnavailable ? kExitBackend : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
