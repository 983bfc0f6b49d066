#pragma once
// Seeded ground-truth action scripts and their noisy raw-event expansions.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aloha/consolidate.hpp"
#include "aloha/frames.hpp"
#include "aloha/rawlog.hpp"

namespace aloha {

struct IntRange {
  int lo = 0;
  int hi = 0;
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

struct SynthNoise {
  int move_jitter_px = 2;
  IntRange extra_moves_per_drag{3, 10};
  IntRange inter_key_gap_ms{60, 400};
  IntRange click_duration_ms{30, 200};
  IntRange dblclick_gap_ms{60, 250};
  IntRange scroll_gap_ms{10, 250};
  IntRange action_gap_ms{1100, 2000};
  IntRange stray_moves{0, 3};
  int typo_percent = 10;
  int key_hold_ms = 20;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  IntRange action_count{5, 15};
  SynthNoise noise;
  int screen_w = 1920;
  int screen_h = 1080;
  int fps = 30;
};

// Distinct deterministic scripts per seed; all seven kinds occur across seeds.
std::vector<SemanticAction> gen_script(const SynthConfig& cfg);

// Throws NoiseExceedsThreshold when a noise magnitude could cross a threshold
// of `cc`, which would make the expansion ambiguous.
void check_noise(const SynthConfig& cfg, const ConsolidationConfig& cc = {});

struct Expansion {
  RawLog log;
  std::vector<SemanticAction> truth;  // the script with the expansion timestamps
};

Expansion expand_timed(const std::vector<SemanticAction>& script, const SynthConfig& cfg,
                       const ConsolidationConfig& cc = {});
RawLog expand(const std::vector<SemanticAction>& script, const SynthConfig& cfg, const ConsolidationConfig& cc = {});

// Action-for-action agreement ignoring timestamps. Points must agree within
// `tolerance_px` per axis; a drag must start on the script's first point,
// end within tolerance of its last, and pass through every waypoint in order.
bool matches_script(const std::vector<SemanticAction>& actual, const std::vector<SemanticAction>& script,
                    int tolerance_px, std::string* why = nullptr);

// Flat-color frames covering [0, duration_ms] at `fps`, written with their
// index into `dir`.
FrameIndex write_synthetic_frames(const std::filesystem::path& dir, std::int64_t duration_ms, int fps, int w, int h);

}  // namespace aloha
