#include "aloha/synthkit.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>

#include "aloha/error.hpp"

namespace aloha {

namespace {

constexpr int kMinDragPx = 20;
constexpr int kShiftLeadMs = 10;
constexpr int kModStepMs = 10;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  int in(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  int in(IntRange r) { return in(r.lo, r.hi); }
  bool percent(int p) { return in(0, 99) < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(in(0, static_cast<int>(v.size()) - 1))];
  }

 private:
  std::mt19937_64 gen_;
};

int margin(const SynthConfig& cfg) { return std::max(8, cfg.noise.move_jitter_px + 1); }

Point random_point(Rng& rng, const SynthConfig& cfg) {
  const int m = margin(cfg);
  return {rng.in(m, cfg.screen_w - 1 - m), rng.in(m, cfg.screen_h - 1 - m)};
}

Point jitter(Rng& rng, Point p, int j) { return {p.x + rng.in(-j, j), p.y + rng.in(-j, j)}; }

std::int64_t d2(Point a, Point b) {
  const std::int64_t dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

const std::vector<std::string>& plain_keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> v = {"Backspace", "Enter", "Tab", "Escape", "Delete", "Up", "Down", "Left", "Right"};
    for (int i = 1; i <= 12; ++i) v.push_back("F" + std::to_string(i));
    return v;
  }();
  return k;
}

const std::vector<std::string>& hotkey_bases() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> v;
    for (char c = 'a'; c <= 'z'; ++c) v.emplace_back(1, c);
    for (char c = '0'; c <= '9'; ++c) v.emplace_back(1, c);
    for (const char* n : {"F1", "F4", "F5", "F12", "Tab", "Enter", "Delete"}) v.emplace_back(n);
    return v;
  }();
  return k;
}

std::string random_text(Rng& rng) {
  const int n = rng.in(1, 12);
  std::string s;
  for (int i = 0; i < n; ++i) {
    const int roll = rng.in(0, 9);
    if (roll < 5) {
      s.push_back(static_cast<char>('a' + rng.in(0, 25)));
    } else if (roll < 7) {
      s.push_back(static_cast<char>('A' + rng.in(0, 25)));
    } else if (roll < 8) {
      s.push_back(' ');
    } else {
      s.push_back(static_cast<char>(rng.in(0x21, 0x7E)));
    }
  }
  return s;
}

SemanticAction random_action(Rng& rng, const SynthConfig& cfg) {
  switch (rng.in(0, 6)) {
    case 0: return SemanticAction::click(0, 0, rng.pick(std::vector{MouseButton::L, MouseButton::R, MouseButton::M}),
                                         random_point(rng, cfg));
    case 1: return SemanticAction::double_click(0, 0, MouseButton::L, random_point(rng, cfg));
    case 2: {
      std::vector<Point> path{random_point(rng, cfg)};
      const int n = rng.in(2, 4);
      while (static_cast<int>(path.size()) < n) {
        Point p = random_point(rng, cfg);
        if (p == path.back()) continue;
        if (static_cast<int>(path.size()) == n - 1 && d2(p, path.front()) < kMinDragPx * kMinDragPx) continue;
        path.push_back(p);
      }
      return SemanticAction::drag(0, 0, rng.pick(std::vector{MouseButton::L, MouseButton::R}), std::move(path));
    }
    case 3: return SemanticAction::type(0, 0, random_text(rng));
    case 4: return SemanticAction::key_press(0, rng.pick(plain_keys()));
    case 5: {
      KeyCombo c;
      for (Modifier m : {Modifier::Ctrl, Modifier::Alt, Modifier::Meta}) {
        if (rng.in(0, 2) == 0) c.mods.push_back(m);
      }
      if (c.mods.empty()) c.mods.push_back(rng.pick(std::vector{Modifier::Ctrl, Modifier::Alt, Modifier::Meta}));
      if (rng.in(0, 3) == 0) c.mods.push_back(Modifier::Shift);
      canonicalize(c);
      c.key = rng.pick(hotkey_bases());
      return SemanticAction::hotkey(0, std::move(c));
    }
    default: {
      const int n = rng.in(1, 5);
      return SemanticAction::scroll(0, 0, random_point(rng, cfg), rng.in(0, 1) ? n : -n);
    }
  }
}

void require_range(IntRange r, const char* name) {
  if (r.lo < 0 || r.lo > r.hi) fail(ErrorCode::InvariantViolation, std::string(name) + " range is invalid");
}

void exceeds(bool bad, const std::string& what) {
  if (bad) fail(ErrorCode::NoiseExceedsThreshold, what);
}

std::string key_token(char c) {
  if (c == ' ') return "Space";
  return std::string(1, static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
}

class Expander {
 public:
  Expander(const SynthConfig& cfg) : cfg_(cfg), rng_(cfg.seed * 0x9E3779B97F4A7C15ULL + 0x5EED) {}

  Expansion run(const std::vector<SemanticAction>& script) {
    Expansion ex;
    ex.log.meta = {cfg_.screen_w, cfg_.screen_h, cfg_.fps};
    t_ = 0;
    for (const auto& a : script) {
      strays();
      t_ += rng_.in(cfg_.noise.action_gap_ms);
      ex.truth.push_back(one(a));
    }
    ex.log.events = std::move(events_);
    return ex;
  }

 private:
  const SynthNoise& noise() const { return cfg_.noise; }
  int j() const { return noise().move_jitter_px; }

  void push(RawEvent e) {
    t_ = e.t;
    events_.push_back(std::move(e));
  }

  void strays() {
    const int n = rng_.in(noise().stray_moves);
    for (int i = 0; i < n; ++i) push(RawEvent::mouse_move(t_ + rng_.in(5, 40), random_point(rng_, cfg_)));
  }

  Point inside(Point p) const {
    return {std::clamp(p.x, 0, cfg_.screen_w - 1), std::clamp(p.y, 0, cfg_.screen_h - 1)};
  }

  // down at p, up jittered; returns the down time.
  std::int64_t press(MouseButton b, Point p) {
    const std::int64_t t0 = t_;
    push(RawEvent::mouse_down(t0, b, p));
    push(RawEvent::mouse_up(t0 + rng_.in(noise().click_duration_ms), b, inside(jitter(rng_, p, j()))));
    return t0;
  }

  void key_tap(const std::string& key) {
    const std::int64_t t0 = t_;
    push(RawEvent::key_down(t0, key));
    push(RawEvent::key_up(t0 + noise().key_hold_ms, key));
    t_ = t0;
  }

  SemanticAction one(const SemanticAction& a) {
    SemanticAction out = a;
    switch (a.kind) {
      case ActionKind::Click: {
        out.t_start = press(*a.button, *a.point);
        out.t_end = t_;
        break;
      }
      case ActionKind::DoubleClick: {
        out.t_start = press(*a.button, *a.point);
        t_ += rng_.in(noise().dblclick_gap_ms);
        press(*a.button, inside(jitter(rng_, *a.point, j())));
        out.t_end = t_;
        break;
      }
      case ActionKind::Drag: {
        out.t_start = t_;
        push(RawEvent::mouse_down(t_, *a.button, a.path.front()));
        const int extra = rng_.in(noise().extra_moves_per_drag);
        const int segs = static_cast<int>(a.path.size()) - 1;
        for (int s = 0; s < segs; ++s) {
          const Point from = a.path[static_cast<std::size_t>(s)], to = a.path[static_cast<std::size_t>(s) + 1];
          const int moves = extra / segs + (s < extra % segs ? 1 : 0);
          for (int m = 1; m <= moves; ++m) {
            const Point lin{from.x + (to.x - from.x) * m / (moves + 1), from.y + (to.y - from.y) * m / (moves + 1)};
            push(RawEvent::mouse_move(t_ + rng_.in(8, 30), inside(jitter(rng_, lin, j()))));
          }
          push(RawEvent::mouse_move(t_ + rng_.in(8, 30), to));
        }
        push(RawEvent::mouse_up(t_ + rng_.in(8, 30), *a.button, a.path.back()));
        out.t_end = t_;
        break;
      }
      case ActionKind::Type: {
        bool first = true;
        std::int64_t last_down = 0;
        auto next_down = [&] {
          if (first) {
            out.t_start = t_;
          } else {
            t_ = last_down + rng_.in(noise().inter_key_gap_ms);
          }
          first = false;
          last_down = t_;
        };
        for (char c : *a.text) {
          if (rng_.percent(noise().typo_percent)) {
            next_down();
            key_tap(std::string(1, static_cast<char>('a' + rng_.in(0, 25))));
            next_down();
            key_tap("Backspace");
          }
          next_down();
          const bool shifted = std::isupper(static_cast<unsigned char>(c)) != 0;
          if (shifted) {
            const std::int64_t td = t_;
            push(RawEvent::key_down(td - kShiftLeadMs, "Shift"));
            push(RawEvent::key_down(td, key_token(c)));
            push(RawEvent::key_up(td + noise().key_hold_ms, key_token(c)));
            push(RawEvent::key_up(td + noise().key_hold_ms + 5, "Shift"));
            t_ = td;
          } else {
            key_tap(key_token(c));
          }
        }
        out.t_end = last_down;
        t_ = std::max<std::int64_t>(t_, events_.back().t);
        break;
      }
      case ActionKind::Key: {
        out.t_start = out.t_end = t_;
        key_tap(*a.key);
        t_ = events_.back().t;
        break;
      }
      case ActionKind::Hotkey: {
        const auto& mods = a.combo->mods;
        for (Modifier m : mods) push(RawEvent::key_down(t_ + kModStepMs, std::string(to_string(m))));
        t_ += kModStepMs;
        out.t_start = out.t_end = t_;
        key_tap(a.combo->key);
        t_ = events_.back().t;
        for (auto it = mods.rbegin(); it != mods.rend(); ++it) {
          push(RawEvent::key_up(t_ + 5, std::string(to_string(*it))));
        }
        break;
      }
      case ActionKind::Scroll: {
        const int n = *a.notches;
        const int total = std::abs(n) * 120;
        const int parts = std::min(rng_.in(1, 4), total);
        std::vector<int> cuts;
        while (static_cast<int>(cuts.size()) < parts - 1) {
          const int c = rng_.in(1, total - 1);
          if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.push_back(total);
        int prev = 0;
        out.t_start = t_;
        for (std::size_t i = 0; i < cuts.size(); ++i) {
          if (i > 0) t_ += rng_.in(noise().scroll_gap_ms);
          const int amount = (cuts[i] - prev) * (n > 0 ? 1 : -1);
          prev = cuts[i];
          const Point p = i == 0 ? *a.point : inside(jitter(rng_, *a.point, j()));
          push(RawEvent::scroll(t_, p, 0, amount));
        }
        out.t_end = t_;
        break;
      }
    }
    return out;
  }

  const SynthConfig& cfg_;
  Rng rng_;
  std::int64_t t_ = 0;
  std::vector<RawEvent> events_;
};

bool near(Point a, Point b, int tol) { return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol; }

}  // namespace

std::vector<SemanticAction> gen_script(const SynthConfig& cfg) {
  Rng rng(cfg.seed);
  const int n = rng.in(cfg.action_count);
  std::vector<SemanticAction> script;
  script.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) script.push_back(random_action(rng, cfg));
  return script;
}

void check_noise(const SynthConfig& cfg, const ConsolidationConfig& cc) {
  const SynthNoise& n = cfg.noise;
  require_range(n.extra_moves_per_drag, "extra_moves_per_drag");
  require_range(n.inter_key_gap_ms, "inter_key_gap_ms");
  require_range(n.click_duration_ms, "click_duration_ms");
  require_range(n.dblclick_gap_ms, "dblclick_gap_ms");
  require_range(n.scroll_gap_ms, "scroll_gap_ms");
  require_range(n.action_gap_ms, "action_gap_ms");
  require_range(n.stray_moves, "stray_moves");
  require_range(cfg.action_count, "action_count");
  if (n.move_jitter_px < 0 || n.typo_percent < 0 || n.typo_percent > 100 || n.key_hold_ms < 1) {
    fail(ErrorCode::InvariantViolation, "noise magnitudes out of range");
  }
  if (cfg.screen_w <= 2 * margin(cfg) || cfg.screen_h <= 2 * margin(cfg) || cfg.fps <= 0) {
    fail(ErrorCode::InvariantViolation, "screen too small");
  }
  const std::int64_t jj = 2LL * n.move_jitter_px * n.move_jitter_px;
  exceeds(jj >= static_cast<std::int64_t>(cc.click_max_px) * cc.click_max_px, "move_jitter_px vs click_max_px");
  exceeds(jj >= static_cast<std::int64_t>(cc.dblclick_px) * cc.dblclick_px, "move_jitter_px vs dblclick_px");
  exceeds(kMinDragPx <= cc.click_max_px, "drag displacement vs click_max_px");
  exceeds(n.click_duration_ms.hi >= cc.click_max_ms, "click_duration_ms vs click_max_ms");
  exceeds(n.dblclick_gap_ms.hi >= cc.dblclick_gap_ms, "dblclick_gap_ms vs dblclick_gap_ms");
  exceeds(n.inter_key_gap_ms.hi >= cc.type_gap_ms, "inter_key_gap_ms vs type_gap_ms");
  exceeds(n.inter_key_gap_ms.lo <= n.key_hold_ms + kShiftLeadMs + 5, "inter_key_gap_ms vs key hold");
  exceeds(n.scroll_gap_ms.hi >= cc.scroll_gap_ms, "scroll_gap_ms vs scroll_gap_ms");
  const int widest = std::max({cc.type_gap_ms, cc.dblclick_gap_ms, cc.scroll_gap_ms});
  exceeds(n.action_gap_ms.lo <= widest, "action_gap_ms must exceed every grouping window");
}

Expansion expand_timed(const std::vector<SemanticAction>& script, const SynthConfig& cfg,
                       const ConsolidationConfig& cc) {
  check_noise(cfg, cc);
  validate(script);
  return Expander(cfg).run(script);
}

RawLog expand(const std::vector<SemanticAction>& script, const SynthConfig& cfg, const ConsolidationConfig& cc) {
  return expand_timed(script, cfg, cc).log;
}

bool matches_script(const std::vector<SemanticAction>& actual, const std::vector<SemanticAction>& script,
                    int tolerance_px, std::string* why) {
  auto no = [&](std::size_t i, const std::string& what) {
    if (why) *why = "action " + std::to_string(i) + ": " + what;
    return false;
  };
  if (actual.size() != script.size()) {
    return no(std::min(actual.size(), script.size()),
              "count " + std::to_string(actual.size()) + " vs " + std::to_string(script.size()));
  }
  for (std::size_t i = 0; i < script.size(); ++i) {
    const auto &a = actual[i], &s = script[i];
    if (a.kind != s.kind) return no(i, std::string(to_string(a.kind)) + " vs " + std::string(to_string(s.kind)));
    if (a.button != s.button) return no(i, "button");
    if (a.text != s.text) return no(i, "text");
    if (a.key != s.key) return no(i, "key");
    if (a.combo != s.combo) return no(i, "combo");
    if (a.notches != s.notches) return no(i, "notches");
    if (a.point.has_value() != s.point.has_value()) return no(i, "point presence");
    if (a.point && !near(*a.point, *s.point, tolerance_px)) return no(i, "point");
    if (s.kind == ActionKind::Drag) {
      if (a.path.empty() || !near(a.path.front(), s.path.front(), tolerance_px)) return no(i, "drag start");
      if (!near(a.path.back(), s.path.back(), tolerance_px)) return no(i, "drag end");
      std::size_t k = 0;
      for (const Point& p : a.path) {
        if (k < s.path.size() && near(p, s.path[k], tolerance_px)) ++k;
      }
      if (k != s.path.size()) return no(i, "drag waypoints");
    }
  }
  return true;
}

FrameIndex write_synthetic_frames(const std::filesystem::path& dir, std::int64_t duration_ms, int fps, int w, int h) {
  if (fps <= 0 || w <= 0 || h <= 0 || duration_ms < 0) fail(ErrorCode::InvariantViolation, "bad frame parameters");
  std::filesystem::create_directories(dir);
  const std::int64_t count = duration_ms * fps / 1000 + 1;
  const auto entries = synth_frame_times(count, fps);
  for (const auto& e : entries) {
    const auto n = static_cast<std::uint64_t>(e.frame_no);
    const Rgb c{static_cast<std::uint8_t>(40 + n * 37 % 160), static_cast<std::uint8_t>(40 + n * 91 % 160),
                static_cast<std::uint8_t>(40 + n * 53 % 160)};
    write_image(dir / (frame_file_stem(e.frame_no) + ".png"), Raster(w, h, c));
  }
  std::ofstream(dir / "frames.idx", std::ios::binary) << write_frame_index(entries);
  return load_frame_index(dir);
}

}  // namespace aloha
