#include "aloha/actor.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "aloha/json_extract.hpp"
#include "text_util.hpp"

namespace aloha {

using ojson = nlohmann::ordered_json;

namespace {

const std::vector<std::string_view> kNegations = {"closes",  "closed",     "disappears", "disappear", "no longer",
                                                  "removed", "is deleted", "is gone",    "vanishes",  "goes away"};

bool contains_any(std::string_view lowered, const std::vector<std::string_view>& words) {
  return std::any_of(words.begin(), words.end(), [&](std::string_view w) { return detail::contains_word(lowered, w); });
}

// Labels of several matches are reduced to those not contained in another
// matched label ("photos" loses to "Close photos").
std::vector<std::string> maximal_labels(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  std::vector<std::string> out;
  for (const auto& l : labels) {
    const std::string ll = detail::lower(l);
    bool inside = false;
    for (const auto& m : labels) {
      const std::string ml = detail::lower(m);
      if (ml != ll && ml.find(ll) != std::string::npos) inside = true;
    }
    if (!inside) out.push_back(l);
  }
  return out;
}

std::vector<std::string> labels_in(std::string_view text, const std::vector<std::string>& vocab) {
  std::vector<std::string> hits;
  for (const auto& l : vocab) {
    if (l.size() >= 2 && detail::contains_word(text, l)) hits.push_back(l);
  }
  return maximal_labels(std::move(hits));
}

std::optional<std::string> first_quoted(std::string_view s) {
  const auto a = s.find('"');
  if (a == std::string_view::npos) return std::nullopt;
  const auto b = s.find('"', a + 1);
  if (b == std::string_view::npos) return std::nullopt;
  return std::string(s.substr(a + 1, b - a - 1));
}

std::string blank_quotes(std::string s) {
  bool in = false;
  for (char& c : s) {
    if (c == '"') {
      in = !in;
      c = ' ';
    } else if (in) {
      c = ' ';
    }
  }
  return s;
}

struct WindowPhrase {
  std::string title;
  bool container = false;
};

// Finds "<title> window|dialog" phrases, preferring titles known from the
// digests, and blanks them out of `text`.
std::vector<WindowPhrase> take_window_phrases(std::string& text, std::vector<std::string> titles) {
  std::vector<WindowPhrase> out;
  std::sort(titles.begin(), titles.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
  auto container_before = [&](std::size_t pos) {
    static const std::vector<std::string> preps = {"in the ", "from the ", "inside the ", "into the ", "within the "};
    const std::string head = detail::lower(text.substr(0, pos));
    return std::any_of(preps.begin(), preps.end(), [&](const std::string& p) { return head.ends_with(p); });
  };
  auto take = [&](std::size_t pos, std::size_t len, std::string title) {
    out.push_back({std::move(title), container_before(pos)});
    std::fill(text.begin() + static_cast<std::ptrdiff_t>(pos), text.begin() + static_cast<std::ptrdiff_t>(pos + len), ' ');
  };
  for (const auto& t : titles) {
    if (t.empty()) continue;
    for (std::string_view suffix : {" window", " dialog"}) {
      const std::string needle = detail::lower(t) + std::string(suffix);
      std::size_t pos;
      while ((pos = detail::lower(text).find(needle)) != std::string::npos) {
        const bool left_ok = pos == 0 || !detail::is_word_char(text[pos - 1]);
        if (!left_ok) break;
        take(pos, needle.size(), t);
      }
    }
  }
  static const std::regex unknown(R"(([A-Za-z0-9_.\-]+) (window|dialog)\b)", std::regex::icase);
  std::smatch m;
  std::string scan = text;
  while (std::regex_search(scan, m, unknown)) {
    const std::string word = m[1].str();
    const std::size_t pos = text.size() - scan.size() + static_cast<std::size_t>(m.position(0));
    const std::string lw = detail::lower(word);
    if (lw != "the" && lw != "a" && lw != "new" && lw != "this" && lw != "that") {
      take(pos, static_cast<std::size_t>(m.length(0)), word);
    }
    scan = text.substr(pos + static_cast<std::size_t>(m.length(0)));
  }
  return out;
}

std::vector<const DigestWidget*> labelled(const ObservationDigest& obs, const ExpectationCheck& c) {
  std::vector<const DigestWidget*> out;
  const DigestWindow* container = c.window.empty() ? nullptr : obs.window_titled(c.window);
  if (!c.window.empty() && !container) return out;
  const std::string want = detail::lower(c.subject);
  for (const auto& w : obs.widgets) {
    if (!w.visible || detail::lower(w.label) != want) continue;
    if (container && w.window_id != container->id) continue;
    out.push_back(&w);
  }
  return out;
}

// A free spot of `win` where a click lands on the window itself: inside its
// client area, on no widget, not covered by a higher window.
std::optional<Point> free_point(const ObservationDigest& obs, const DigestWindow& win) {
  const Rect c = win.client;
  for (int y = c.y + c.h - 8; y >= c.y + 4; y -= 8) {
    for (int x = c.x + c.w - 8; x >= c.x + 4; x -= 8) {
      const Point p{x, y};
      bool covered = false;
      for (const auto& other : obs.windows) {
        if (other.z > win.z && other.rect.contains(p)) covered = true;
      }
      for (const auto& w : obs.widgets) {
        if (w.visible && (w.window_id == win.id || w.kind == WidgetKind::MenuItem) && w.rect.contains(p)) covered = true;
      }
      if (!covered) return p;
    }
  }
  return std::nullopt;
}

const DigestWindow* window_named_in(std::string_view text, const ObservationDigest& obs) {
  const DigestWindow* best = nullptr;
  const std::string lt = detail::lower(text);
  for (const auto& w : obs.windows) {
    for (std::string_view suffix : {" window", " dialog"}) {
      if (detail::contains_word(lt, detail::lower(w.title) + std::string(suffix))) {
        if (!best || w.title.size() > best->title.size()) best = &w;
      }
    }
  }
  return best;
}

Target relative_to(Point p, const ObservationDigest& obs) {
  MonitorLayout layout{obs.monitors};
  if (!layout.contains(p)) return p;
  return to_relative(p, layout);
}

std::string resolution_note(const Resolution& r) {
  std::string n = "rule" + std::to_string(r.rule) + " " + r.chosen.element_id;
  if (r.ambiguous) n += " ambiguous";
  return n;
}

std::optional<Resolution> resolve_hint(std::string_view hint, const ObservationDigest& obs) {
  const auto cands = candidates_from(obs);
  if (cands.empty()) return std::nullopt;
  return resolve_ambiguity(cands, hint, obs);
}

std::string summarize(const ObservationDigest& obs) {
  std::string s = std::to_string(obs.windows.size()) + " window(s) open";
  if (!obs.windows.empty()) s += ", frontmost \"" + obs.windows.back().title + "\"";
  if (obs.focus) s += ", focus on " + *obs.focus;
  return s;
}

std::string plan_json(const PlanStep& p) { return to_json(p).dump(); }

}  // namespace

std::vector<TargetCandidate> candidates_from(const ObservationDigest& obs) {
  std::vector<TargetCandidate> out;
  for (const auto& w : obs.widgets) {
    if (w.visible) out.push_back({w.id, w.rect, w.label, w.z, w.enabled});
  }
  return out;
}

Resolution resolve_ambiguity(std::span<const TargetCandidate> candidates, std::string_view hint,
                             const ObservationDigest& /*obs*/) {
  if (candidates.empty()) fail(ErrorCode::InvariantViolation, "resolve_ambiguity needs candidates");
  std::vector<const TargetCandidate*> pool;
  std::vector<std::string> matched;
  for (const auto& c : candidates) {
    if (!c.label.empty() && detail::contains_word(hint, c.label)) matched.push_back(c.label);
  }
  matched = maximal_labels(matched);
  for (const auto& c : candidates) {
    if (std::find(matched.begin(), matched.end(), c.label) != matched.end()) pool.push_back(&c);
  }
  Resolution r;
  if (pool.size() == 1) {
    r.chosen = *pool.front();
    r.rule = 1;
    return r;
  }
  if (pool.empty()) {
    for (const auto& c : candidates) pool.push_back(&c);
  }
  r.ambiguous = pool.size() > 1;

  std::vector<const TargetCandidate*> enabled;
  for (auto* c : pool) {
    if (c->enabled) enabled.push_back(c);
  }
  if (!enabled.empty()) pool = enabled;
  const int top = (*std::max_element(pool.begin(), pool.end(), [](auto* a, auto* b) { return a->z < b->z; }))->z;
  std::vector<const TargetCandidate*> topmost;
  for (auto* c : pool) {
    if (c->z == top) topmost.push_back(c);
  }
  if (topmost.size() == 1) {
    r.chosen = *topmost.front();
    r.rule = 2;
    return r;
  }
  auto best = std::min_element(topmost.begin(), topmost.end(), [](auto* a, auto* b) {
    return std::tie(a->bounds.y, a->bounds.x, a->element_id) < std::tie(b->bounds.y, b->bounds.x, b->element_id);
  });
  r.chosen = **best;
  r.rule = 3;
  return r;
}

ojson to_json(const PlanStep& p) {
  ojson j;
  j["observation"] = p.observation;
  j["reasoning"] = p.reasoning;
  j["current_step"] = p.current_step;
  j["action"] = p.action;
  if (p.command) j["command"] = to_json(*p.command);
  if (p.fallback) j["fallback"] = to_json(*p.fallback);
  j["expectation"] = p.expectation;
  j["done"] = p.done;
  if (!p.resolution.empty()) j["resolution"] = p.resolution;
  return j;
}

PlanStep parse_plan(std::string_view raw) {
  auto obj = extract_first_json_object(raw);
  if (!obj) fail(ErrorCode::UnparseablePlan, "no JSON object in planner reply");
  const ojson j = ojson::parse(*obj);
  auto str = [&](const char* k, bool required) -> std::string {
    if (!j.contains(k)) {
      if (required) fail(ErrorCode::UnparseablePlan, std::string("missing ") + k);
      return {};
    }
    if (!j[k].is_string()) fail(ErrorCode::UnparseablePlan, std::string(k) + " must be a string");
    return j[k].get<std::string>();
  };
  PlanStep p;
  p.observation = str("observation", true);
  p.reasoning = str("reasoning", true);
  p.action = str("action", true);
  p.expectation = str("expectation", true);
  p.resolution = str("resolution", false);
  if (!j.contains("current_step") || !j["current_step"].is_number_integer()) {
    fail(ErrorCode::UnparseablePlan, "current_step must be an integer");
  }
  p.current_step = j["current_step"].get<int>();
  p.done = j.contains("done") && j["done"].is_boolean() && j["done"].get<bool>();
  try {
    if (j.contains("command") && !j["command"].is_null()) p.command = parse_command(j["command"]);
    if (j.contains("fallback") && !j["fallback"].is_null()) p.fallback = parse_command(j["fallback"]);
  } catch (const Error& e) {
    fail(ErrorCode::UnparseablePlan, std::string("bad command: ") + e.what());
  }
  if (!p.done && !p.command) fail(ErrorCode::UnparseablePlan, "plan without command");
  return p;
}

std::span<const MemoryEntry> PlannerMemory::recent() const {
  const std::size_t n = std::min(entries.size(), static_cast<std::size_t>(std::max(window, 0)));
  return std::span<const MemoryEntry>(entries).subspan(entries.size() - n);
}

std::string PlanPrompt::text() const {
  std::string t = instruction;
  t += "\n\nGoal: " + goal + "\n\nGuidance (soft reference):\n";
  if (guidance.empty()) t += "(none)\n";
  for (std::size_t i = 0; i < guidance.size(); ++i) {
    t += std::to_string(i) + ". " + guidance[i].action + " => " + guidance[i].expectation + "\n";
  }
  if (with_history) {
    t += "\nHistory:\n";
    if (history.empty()) t += "(none)\n";
    for (const auto& e : history) {
      t += "[plan " + std::to_string(e.plan_index) + " attempt " + std::to_string(e.attempt) + " step " +
           std::to_string(e.plan.current_step) + "] " + e.plan.action + " -> " + (e.verify.pass ? "PASS" : "FAIL");
      if (!e.verify.note.empty()) t += " (" + e.verify.note + ")";
      t += "\n";
    }
    if (off_trace) t += "\nOff-trace: " + discrepancy + "\n";
  } else if (off_trace) {
    t += "\nOff-trace: the last plan did not verify.\n";
  }
  t += "\nObservation:\n" + obs.text;
  return t;
}

CommandChoice command_for_action(std::string_view action_in, const ObservationDigest& obs) {
  CommandChoice out;
  std::string action(detail::trim(action_in));
  static const std::regex fallback_re(R"(\s+or\s+(?:hotkey|press)\s+(\S+)\s*$)", std::regex::icase);
  std::smatch fm;
  if (std::regex_search(action, fm, fallback_re)) {
    if (auto combo = parse_combo(fm[1].str()); combo && !combo->mods.empty()) out.fallback = ExecCommand::hotkey(*combo);
    action = action.substr(0, static_cast<std::size_t>(fm.position(0)));
  }
  const std::string lower = detail::lower(action);
  auto rest_after = [&](std::string_view verb) { return std::string(detail::trim(std::string_view(action).substr(verb.size()))); };
  auto point_for = [&](std::string_view hint) -> std::optional<Point> {
    auto r = resolve_hint(hint, obs);
    if (!r) return std::nullopt;
    out.resolution = resolution_note(*r);
    return r->chosen.bounds.center();
  };

  if (lower.starts_with("double-click ") || lower.starts_with("click ")) {
    const bool dbl = lower.starts_with("double-click ");
    const std::string hint = rest_after(dbl ? "double-click" : "click");
    if (auto p = point_for(hint)) {
      const Target t = relative_to(*p, obs);
      out.command = dbl ? ExecCommand::double_click(t) : ExecCommand::click(t);
    }
  } else if (lower.starts_with("drag ")) {
    const std::string rest = rest_after("drag");
    static const std::regex split(R"(^(.*?)\s+(?:into|onto|to|over)\s+(.*)$)", std::regex::icase);
    std::smatch m;
    if (std::regex_match(rest, m, split)) {
      const std::string src_hint = m[1].str(), dst_hint = m[2].str();
      auto src = resolve_hint(src_hint, obs);
      std::optional<Point> dst;
      if (const DigestWindow* w = window_named_in(dst_hint, obs)) {
        dst = free_point(obs, *w);
      } else if (auto r = resolve_hint(dst_hint, obs)) {
        dst = r->chosen.bounds.center();
      }
      if (src && dst) {
        out.resolution = resolution_note(*src);
        out.command = ExecCommand::drag({relative_to(src->chosen.bounds.center(), obs), relative_to(*dst, obs)});
      }
    }
  } else if (lower.starts_with("type ")) {
    std::string text;
    if (auto q = first_quoted(action)) {
      text = *q;
    } else {
      text = rest_after("type");
      const auto into = detail::lower(text).find(" into ");
      if (into != std::string::npos) text = text.substr(0, into);
    }
    out.command = ExecCommand::input(text);
  } else if (lower.starts_with("press ") || lower.starts_with("hotkey ")) {
    const bool hk = lower.starts_with("hotkey ");
    std::string token = rest_after(hk ? "hotkey" : "press");
    token = token.substr(0, token.find(' '));
    if (auto combo = parse_combo(token); combo && !combo->mods.empty()) {
      out.command = ExecCommand::hotkey(*combo);
    } else if (is_valid_key_token(token) && !is_modifier_token(token)) {
      out.command = ExecCommand::key_press(token);
    }
  } else if (lower.starts_with("scroll ")) {
    static const std::regex scroll_re(R"(^scroll\s+(up|down)(?:\s+(\d+))?)", std::regex::icase);
    std::smatch m;
    if (std::regex_search(action, m, scroll_re)) {
      const int n = m[2].matched ? std::stoi(m[2].str()) : 3;
      const int notches = detail::lower(m[1].str()) == "up" ? n : -n;
      std::optional<Point> at;
      if (const DigestWindow* w = window_named_in(action, obs)) {
        at = free_point(obs, *w);
      } else if (!obs.windows.empty()) {
        at = free_point(obs, obs.windows.back());
      }
      if (at && n > 0) out.command = ExecCommand::scroll(relative_to(*at, obs), notches);
    }
  } else if (lower.starts_with("wait")) {
    out.command = ExecCommand::wait(500);
  }
  if (!out.command) {
    out.command = ExecCommand::wait(500);
    out.resolution = "unresolved action";
  }
  return out;
}

std::string FollowerPlanner::complete(const PlanPrompt& prompt) {
  PlanStep p;
  p.observation = summarize(prompt.obs);
  const int n = static_cast<int>(prompt.guidance.size());
  int next = -1;
  if (prompt.with_history) {
    if (prompt.history.empty()) {
      next = 0;
    } else {
      const MemoryEntry& last = prompt.history.back();
      next = (last.verify.pass || prompt.off_trace) ? last.plan.current_step + 1 : last.plan.current_step;
      if (next < 0) next = 0;
    }
  } else {
    int skip = prompt.off_trace ? 1 : 0;
    for (int i = 0; i < n; ++i) {
      if (expectation_holds(prompt.guidance[static_cast<std::size_t>(i)].expectation, prompt.obs)) continue;
      if (skip-- > 0) continue;
      next = i;
      break;
    }
    if (next < 0) next = n;
  }
  if (n == 0 || next >= n) {
    p.done = true;
    p.current_step = n == 0 ? -1 : n - 1;
    p.reasoning = n == 0 ? "No guidance to follow." : "Every guidance step has been carried out.";
    p.action = "wait";
    p.expectation = "Nothing changes.";
    return plan_json(p);
  }
  const TraceStep& step = prompt.guidance[static_cast<std::size_t>(next)];
  p.current_step = next;
  p.reasoning = (prompt.off_trace ? "Off trace, moving on to guidance step " : "Following guidance step ") +
                std::to_string(next) + " of " + std::to_string(n) + ".";
  p.action = step.action;
  p.expectation = step.expectation;
  CommandChoice choice = command_for_action(step.action, prompt.obs);
  p.command = choice.command;
  p.fallback = choice.fallback;
  p.resolution = choice.resolution;
  // Targets travel monitor-relative, as a model would emit them.
  return plan_json(p);
}

std::string HttpPlanner::complete(const PlanPrompt& prompt) {
  std::vector<std::shared_ptr<const Raster>> images;
  if (prompt.screenshot) images.push_back(prompt.screenshot);
  return http_complete(ep_, prompt.text(), images);
}

PlanStep next_plan(PlannerBackend& backend, const std::string& goal, std::span<const TraceStep> guidance,
                   const ObservationDigest& obs, const PlannerMemory& memory, const PlanContext& ctx) {
  PlanPrompt prompt;
  prompt.instruction = default_prompt_resources().planner_instruction;
  prompt.goal = goal;
  prompt.guidance.assign(guidance.begin(), guidance.end());
  prompt.obs = obs;
  prompt.with_history = memory.window > 0;
  if (prompt.with_history) {
    auto recent = memory.recent();
    prompt.history.assign(recent.begin(), recent.end());
  }
  prompt.off_trace = ctx.off_trace;
  prompt.discrepancy = ctx.discrepancy;
  prompt.screenshot = ctx.screenshot;
  if (ctx.prompt_sink) ctx.prompt_sink->push_back(prompt.text());
  try {
    return parse_plan(backend.complete(prompt));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnparseablePlan) throw;
    return parse_plan(backend.complete(prompt));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::UnparseablePlan, e.what());
  }
}

std::vector<ExpectationCheck> expectation_checks(std::string_view expectation,
                                                 std::span<const ObservationDigest* const> vocabulary) {
  using K = ExpectationCheck::Kind;
  std::vector<std::string> titles, labels;
  for (const auto* d : vocabulary) {
    for (const auto& w : d->windows) titles.push_back(w.title);
    for (const auto& w : d->widgets) {
      if (w.visible && !w.label.empty()) labels.push_back(w.label);
    }
  }
  const std::string low = detail::lower(expectation);
  const bool negated = contains_any(low, kNegations);
  const auto quote = first_quoted(expectation);
  std::string text = blank_quotes(std::string(expectation));
  const auto phrases = take_window_phrases(text, titles);

  std::vector<ExpectationCheck> checks;
  std::string container;
  for (const auto& ph : phrases) {
    if (ph.container) {
      container = ph.title;
    } else {
      checks.push_back({negated ? K::WindowClosed : K::WindowOpen, ph.title, {}, {}});
    }
  }
  const std::string rest = detail::lower(text);
  auto has = [&](std::initializer_list<std::string_view> words) {
    return std::any_of(words.begin(), words.end(), [&](std::string_view w) { return detail::contains_word(rest, w); });
  };
  for (const auto& label : labels_in(text, labels)) {
    ExpectationCheck c;
    c.subject = label;
    c.window = container;
    if (has({"selected", "highlighted"})) {
      c.kind = K::Selected;
    } else if (has({"focused", "focus"})) {
      c.kind = K::Focused;
    } else if (has({"saved"})) {
      c.kind = K::Saved;
    } else if (has({"disabled", "greyed"})) {
      c.kind = K::Disabled;
    } else if (has({"enabled"})) {
      c.kind = K::Enabled;
    } else if (quote) {
      c.kind = K::Content;
      c.text = *quote;
    } else {
      c.kind = negated ? K::Absent : K::Present;
    }
    checks.push_back(std::move(c));
  }
  return checks;
}

bool check_holds(const ExpectationCheck& c, const ObservationDigest& obs) {
  using K = ExpectationCheck::Kind;
  switch (c.kind) {
    case K::WindowOpen: return obs.window_titled(c.subject) != nullptr;
    case K::WindowClosed: return obs.window_titled(c.subject) == nullptr;
    default: break;
  }
  const auto ws = labelled(obs, c);
  auto any = [&](auto pred) { return std::any_of(ws.begin(), ws.end(), pred); };
  switch (c.kind) {
    case K::Present: return !ws.empty();
    case K::Absent: return ws.empty();
    case K::Selected: return any([](const DigestWidget* w) { return w->selected; });
    case K::Focused: return any([&](const DigestWidget* w) { return obs.focus == w->id; });
    case K::Saved: return any([](const DigestWidget* w) { return w->saved && !w->dirty; });
    case K::Content: return any([&](const DigestWidget* w) { return w->content == c.text; });
    case K::Enabled: return any([](const DigestWidget* w) { return w->enabled; });
    case K::Disabled: return any([](const DigestWidget* w) { return !w->enabled; });
    default: return false;
  }
}

std::string describe(const ExpectationCheck& c) {
  using K = ExpectationCheck::Kind;
  std::string where = c.window.empty() ? "" : " in " + c.window;
  switch (c.kind) {
    case K::WindowOpen: return "window " + c.subject + " open";
    case K::WindowClosed: return "window " + c.subject + " closed";
    case K::Present: return c.subject + " present" + where;
    case K::Absent: return c.subject + " absent" + where;
    case K::Selected: return c.subject + " selected" + where;
    case K::Focused: return c.subject + " focused" + where;
    case K::Saved: return c.subject + " saved" + where;
    case K::Content: return c.subject + " shows \"" + c.text + "\"" + where;
    case K::Enabled: return c.subject + " enabled" + where;
    case K::Disabled: return c.subject + " disabled" + where;
  }
  return c.subject;
}

bool expectation_holds(std::string_view expectation, const ObservationDigest& obs) {
  const ObservationDigest* vocab[] = {&obs};
  const auto checks = expectation_checks(expectation, vocab);
  if (checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [&](const ExpectationCheck& c) { return check_holds(c, obs); });
}

VerifyResult verify_expectation(const PlanStep& plan, const ObservationDigest& before, const ObservationDigest& after) {
  if (plan.done) return {true, "done"};
  const bool exempt = plan.command && (plan.command->type == CommandType::Wait ||
                                       plan.command->type == CommandType::Screenshot ||
                                       plan.command->type == CommandType::CursorPosition);
  if (!exempt && before.same_state(after)) return {false, "no state change"};
  const ObservationDigest* vocab[] = {&before, &after};
  for (const auto& c : expectation_checks(plan.expectation, vocab)) {
    if (!check_holds(c, after)) return {false, "expected " + describe(c)};
  }
  return {true, exempt && before.same_state(after) ? "exempt from change check" : ""};
}

EpisodeRecord run_episode(PlannerBackend& backend, SimEnv& env, const std::string& goal,
                          std::span<const TraceStep> guidance, const EpisodeOptions& opts,
                          std::optional<int> trace_steps) {
  EpisodeRecord rec;
  rec.task_id = env.spec().task_id;
  rec.trace_steps = trace_steps.value_or(static_cast<int>(guidance.size()));
  PlannerMemory memory;
  memory.window = opts.memory_window;
  ActuatorLane lane(env.actuator(), env.layout());

  PlanContext ctx;
  if (opts.capture_prompts) ctx.prompt_sink = &rec.prompts;
  int consecutive_fail = 0;
  int reached = 0;
  rec.termination = "budget";
  for (int plan_index = 0; rec.budget_used < opts.budget; ++plan_index) {
    const ObservationDigest obs = env.observe();
    if (opts.send_screenshots) ctx.screenshot = std::make_shared<const Raster>(env.render());
    PlanStep plan;
    try {
      plan = next_plan(backend, goal, guidance, obs, memory, ctx);
    } catch (const Error& e) {
      rec.termination = std::string("error: ") + e.what();
      break;
    }
    if (plan.done) {
      rec.termination = "done";
      break;
    }
    ExecCommand cmd = *plan.command;
    VerifyResult last;
    for (int attempt = 0; attempt < kFailuresBeforeReplan && rec.budget_used < opts.budget; ++attempt) {
      if (attempt == 2 && plan.fallback) cmd = *plan.fallback;
      const ObservationDigest before = env.observe();
      ExecResult res = lane.submit(cmd).get();
      ++rec.budget_used;
      const ObservationDigest after = env.observe();
      PlanStep executed = plan;
      executed.command = cmd;
      last = res.ok ? verify_expectation(executed, before, after) : VerifyResult{false, "execution failed: " + res.message};
      memory.entries.push_back({plan_index, attempt, plan, cmd, std::move(res), last});
      if (last.pass) {
        consecutive_fail = 0;
        if (plan.current_step >= 0) reached = std::max(reached, plan.current_step + 1);
        break;
      }
      ++consecutive_fail;
    }
    ctx.off_trace = false;
    ctx.discrepancy.clear();
    if (consecutive_fail >= kFailuresBeforeReplan) {
      ctx.off_trace = true;
      ctx.discrepancy = "step " + std::to_string(plan.current_step) + " failed " +
                        std::to_string(consecutive_fail) + " times: " + last.note;
      consecutive_fail = 0;
    }
  }
  rec.steps = std::move(memory.entries);
  rec.success = env.score();
  rec.reached_step = std::min(reached, rec.trace_steps);
  return rec;
}

ojson to_json(const EpisodeRecord& r) {
  ojson j;
  j["task_id"] = r.task_id;
  j["success"] = r.success;
  j["reached_step"] = r.reached_step;
  j["trace_steps"] = r.trace_steps;
  j["budget_used"] = r.budget_used;
  j["termination"] = r.termination;
  j["steps"] = ojson::array();
  for (const auto& e : r.steps) {
    ojson s;
    s["plan_index"] = e.plan_index;
    s["attempt"] = e.attempt;
    s["plan"] = to_json(e.plan);
    s["command"] = to_json(e.command);
    s["exec"] = to_json(e.exec);
    s["verify"] = {{"pass", e.verify.pass}, {"note", e.verify.note}};
    j["steps"].push_back(std::move(s));
  }
  return j;
}

}  // namespace aloha
