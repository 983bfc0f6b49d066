#include "aloha/trace.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "aloha/error.hpp"
#include "aloha/json_extract.hpp"
#include "trace_json.hpp"
#include "text_util.hpp"

namespace aloha {

namespace detail {
std::string_view embedded_prompt_resources();
}

namespace {

const std::regex& coordinate_pattern() {
  static const std::regex re(R"(\(\s*\d+\s*,\s*\d+\s*\))");
  return re;
}

// Words a model commonly opens an action description with. Any hit is
// replaced by the canonical verb of the recorded action kind.
const std::vector<std::string>& known_verbs() {
  static const std::vector<std::string> verbs = {
      "double-click", "double click", "doubleclick", "double-tap", "left-click", "left click",
      "right-click",  "right click",  "click",       "clicks",     "tap",        "select",
      "choose",       "pick",         "hit",         "push",       "open",       "activate",
      "launch",       "drag",         "drags",       "move",       "drop",       "pull",
      "type",         "types",        "enter",       "input",      "write",      "fill",
      "key",          "press",        "presses",     "hotkey",     "shortcut",   "use",
      "scroll",       "scrolls",      "swipe",       "wheel",      "wait",       "pause"};
  return verbs;
}

std::string kind_delta(const PromptResources& res, ActionKind kind) {
  auto it = res.deltas.find(kind);
  return it == res.deltas.end() ? std::string{} : it->second;
}

std::string step_text_field(const detail::ojson& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) fail(ErrorCode::MissingField, name);
  if (!it->is_string()) fail(ErrorCode::MissingField, std::string(name) + " (not a string)");
  std::string value = it->get<std::string>();
  if (detail::trim(value).empty()) fail(ErrorCode::EmptyField, name);
  return value;
}

}  // namespace

std::optional<std::string> extract_first_json_object(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        std::string candidate(text.substr(start, i - start + 1));
        if (nlohmann::json::accept(candidate)) return candidate;
        break;
      }
    }
  }
  return std::nullopt;
}

PromptResources parse_prompt_resources(std::string_view json_text) {
  detail::ojson j;
  try {
    j = detail::ojson::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::SchemaError, std::string("prompt resources: ") + e.what());
  }
  PromptResources res;
  res.version = detail::get_as<int>(j, "version", "prompt resources");
  res.base_instruction = detail::get_as<std::string>(j, "base_instruction", "prompt resources");
  res.planner_instruction = detail::get_as<std::string>(j, "planner_instruction", "prompt resources");
  const auto& deltas = detail::need(j, "deltas", "prompt resources");
  for (auto kind : {ActionKind::Click, ActionKind::DoubleClick, ActionKind::Drag, ActionKind::Type, ActionKind::Key,
                    ActionKind::Hotkey, ActionKind::Scroll}) {
    res.deltas[kind] = detail::get_as<std::string>(deltas, to_string(kind), "prompt resources deltas");
  }
  return res;
}

const PromptResources& default_prompt_resources() {
  static const PromptResources res = parse_prompt_resources(detail::embedded_prompt_resources());
  return res;
}

std::string PromptBundle::text() const {
  std::string out = base_instruction;
  out += "\n\nAction prior:\n" + delta;
  out += "\n\nAction facts:\n" + action_facts;
  out += "\n\nPrevious steps:\n" + (history_summary.empty() ? std::string("(none)") : history_summary);
  out += "\n\nImages: [1] marked crop, [2] full-screen context.";
  return out;
}

std::string action_facts(const SemanticAction& a) {
  std::string facts = "kind: " + std::string(to_string(a.kind));
  if (a.button) facts += "\nbutton: " + std::string(to_string(*a.button));
  if (a.kind == ActionKind::Drag) facts += "\npath points: " + std::to_string(a.path.size());
  if (a.text) facts += "\ntext: " + detail::ojson(*a.text).dump();
  if (a.key) facts += "\nkey: " + *a.key;
  if (a.combo) facts += "\ncombo: " + to_string(*a.combo);
  if (a.notches) {
    facts += std::string("\ndirection: ") + (*a.notches > 0 ? "up" : "down");
    facts += "\nnotches: " + std::to_string(std::abs(*a.notches));
  }
  return facts;
}

PromptBundle build_prompt(const SemanticAction& action, const MarkedPair& pair, std::span<const TraceStep> history,
                          const PromptResources& res) {
  PromptBundle b;
  b.base_instruction = res.base_instruction;
  b.delta = kind_delta(res, action.kind);
  const std::size_t n = std::min(kTraceHistoryWindow, history.size());
  for (std::size_t i = history.size() - n; i < history.size(); ++i) {
    if (!b.history_summary.empty()) b.history_summary += '\n';
    b.history_summary += history[i].action;
  }
  b.images.push_back(std::make_shared<const Raster>(pair.crop));
  b.images.push_back(pair.context);
  b.action_kind = action.kind;
  b.action_facts = action_facts(action);
  return b;
}

std::string MockVlmBackend::complete(const PromptBundle& prompt) {
  // Payload lines of the action facts, e.g. "text: \"hello\"".
  auto fact = [&](std::string_view name) -> std::string {
    for (auto line : detail::split(prompt.action_facts, '\n')) {
      const std::string prefix = std::string(name) + ": ";
      if (line.starts_with(prefix)) return std::string(line.substr(prefix.size()));
    }
    return {};
  };
  detail::ojson j;
  switch (prompt.action_kind) {
    case ActionKind::Click:
      j["observation"] = "The marked crop shows an interface element under the red X.";
      j["think"] = "The user wants to activate the marked element.";
      j["action"] = "click the marked element";
      j["expectation"] = "The marked element responds to the click.";
      break;
    case ActionKind::DoubleClick:
      j["observation"] = "The marked crop shows an item under the red X.";
      j["think"] = "The user wants to open the marked item.";
      j["action"] = "double-click the marked element";
      j["expectation"] = "The marked item opens.";
      break;
    case ActionKind::Drag:
      j["observation"] = "The red polyline starts on an item and ends over a drop region.";
      j["think"] = "The user moves the item along the marked path.";
      j["action"] = "drag from the marked start along the marked path";
      j["expectation"] = "The item appears at the marked end of the path.";
      break;
    case ActionKind::Type:
      j["observation"] = "A text input is focused near the cursor.";
      j["think"] = "The user enters text into the focused input.";
      j["action"] = "type " + fact("text") + " into the focused field";
      j["expectation"] = "The focused field shows the typed text.";
      break;
    case ActionKind::Key:
      j["observation"] = "The current window has keyboard focus.";
      j["think"] = "The user presses a special key.";
      j["action"] = "press " + fact("key");
      j["expectation"] = "The window reacts to " + fact("key") + ".";
      break;
    case ActionKind::Hotkey:
      j["observation"] = "The current window has keyboard focus.";
      j["think"] = "The user triggers a keyboard shortcut.";
      j["action"] = "hotkey " + fact("combo");
      j["expectation"] = "The command bound to " + fact("combo") + " runs.";
      break;
    case ActionKind::Scroll:
      j["observation"] = "The marked region contains scrollable content.";
      j["think"] = "The user scrolls to reveal more content.";
      j["action"] = "scroll " + fact("direction") + " " + fact("notches") + " notches at the marked location";
      j["expectation"] = "The content under the marked location moves.";
      break;
  }
  return j.dump();
}

std::string_view canonical_verb(ActionKind kind) {
  switch (kind) {
    case ActionKind::Click: return "click";
    case ActionKind::DoubleClick: return "double-click";
    case ActionKind::Drag: return "drag";
    case ActionKind::Type: return "type";
    case ActionKind::Key: return "press";
    case ActionKind::Hotkey: return "hotkey";
    case ActionKind::Scroll: return "scroll";
  }
  return "click";
}

bool is_canonical_verb(std::string_view word) {
  static const std::vector<std::string_view> verbs = {"click", "double-click", "drag",   "type",
                                                      "scroll", "press",       "hotkey", "wait"};
  return std::find(verbs.begin(), verbs.end(), word) != verbs.end();
}

bool contains_coordinate_pair(std::string_view s) {
  return std::regex_search(s.begin(), s.end(), coordinate_pattern());
}

std::string strip_coordinates(std::string_view s) {
  return std::regex_replace(std::string(s), coordinate_pattern(), "the marked location");
}

std::string normalize_action_verb(std::string_view action_text, ActionKind kind) {
  const std::string_view text = detail::trim(action_text);
  const std::string lowered = detail::lower(text);
  const std::string verb(canonical_verb(kind));
  for (const auto& candidate : known_verbs()) {
    if (!lowered.starts_with(candidate)) continue;
    const std::size_t end = candidate.size();
    if (end < lowered.size() && detail::is_word_char(lowered[end])) continue;
    std::string rest(detail::trim(text.substr(end)));
    return rest.empty() ? verb : verb + " " + rest;
  }
  return verb + " " + std::string(text);
}

TraceStep postprocess_step(std::string_view raw, const SemanticAction& action) {
  auto object = extract_first_json_object(raw);
  if (!object) fail(ErrorCode::NoJsonObject, "no JSON object in backend reply");
  const auto j = detail::ojson::parse(*object);
  TraceStep step;
  step.observation = strip_coordinates(step_text_field(j, "observation"));
  step.think = strip_coordinates(step_text_field(j, "think"));
  step.action = normalize_action_verb(strip_coordinates(step_text_field(j, "action")), action.kind);
  step.expectation = strip_coordinates(step_text_field(j, "expectation"));
  return step;
}

TraceStep generate_step(VlmBackend& backend, const SemanticAction& action, const MarkedPair& pair,
                        std::span<const TraceStep> history, std::int64_t action_index) {
  const PromptBundle prompt = build_prompt(action, pair, history);
  TraceStep step;
  try {
    step = postprocess_step(backend.complete(prompt), action);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoJsonObject) throw;
    step = postprocess_step(backend.complete(prompt), action);
  }
  step.source_action_index = action_index;
  return step;
}

std::vector<TraceStep> generate_trace(VlmBackend& backend, std::span<const SemanticAction> actions,
                                      const FrameProvider& frames, const MarkConfig& cfg) {
  std::vector<TraceStep> trace;
  trace.reserve(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto& action = actions[i];
    try {
      auto frame = frames(action.t_start);
      MarkedPair pair = has_geometry(action.kind)
                            ? make_marked_pair(frame, action, cfg)
                            : make_context_pair(frame, cursor_before(actions, i, frame->w, frame->h), action.kind, cfg);
      trace.push_back(generate_step(backend, action, pair, trace, static_cast<std::int64_t>(i)));
    } catch (const Error& e) {
      fail(e.code(), "action " + std::to_string(i) + ": " + e.what(), i);
    }
  }
  return trace;
}

std::vector<TraceStep> generate_trace(VlmBackend& backend, std::span<const SemanticAction> actions,
                                      const FrameIndex& idx, const MarkConfig& cfg) {
  std::int64_t cached_no = -1;
  std::shared_ptr<const Raster> cached;
  FrameProvider provider = [&](std::int64_t t) {
    const std::int64_t no = frame_at(idx, t);
    if (no != cached_no) {
      cached = std::make_shared<const Raster>(idx.load(no));
      cached_no = no;
    }
    return cached;
  };
  return generate_trace(backend, actions, provider, cfg);
}

void validate(const TraceStep& step) {
  const std::pair<const char*, const std::string*> fields[] = {
      {"observation", &step.observation},
      {"think", &step.think},
      {"action", &step.action},
      {"expectation", &step.expectation}};
  for (const auto& [name, value] : fields) {
    if (detail::trim(*value).empty()) fail(ErrorCode::EmptyField, name);
    if (contains_coordinate_pair(*value)) fail(ErrorCode::InvariantViolation, std::string(name) + " leaks coordinates");
  }
  const std::string_view action = step.action;
  const auto space = action.find(' ');
  if (!is_canonical_verb(action.substr(0, space))) {
    fail(ErrorCode::InvariantViolation, "action does not start with a canonical verb: " + step.action);
  }
  if (step.source_action_index < 0) fail(ErrorCode::InvariantViolation, "negative source_action_index");
}

namespace detail {

ojson to_json(const TraceStep& s) {
  ojson j;
  j["observation"] = s.observation;
  j["think"] = s.think;
  j["action"] = s.action;
  j["expectation"] = s.expectation;
  j["source_action_index"] = s.source_action_index;
  return j;
}

TraceStep trace_step_from_json(const ojson& j) {
  if (!j.is_object()) fail(ErrorCode::SchemaError, "trace step must be an object");
  reject_unknown_keys(j, {"observation", "think", "action", "expectation", "source_action_index"}, "trace step");
  TraceStep s;
  s.observation = get_as<std::string>(j, "observation", "trace step");
  s.think = get_as<std::string>(j, "think", "trace step");
  s.action = get_as<std::string>(j, "action", "trace step");
  s.expectation = get_as<std::string>(j, "expectation", "trace step");
  s.source_action_index = get_as<std::int64_t>(j, "source_action_index", "trace step");
  validate(s);
  return s;
}

}  // namespace detail

std::string write_trace(std::span<const TraceStep> steps) {
  std::string out;
  for (const auto& s : steps) {
    validate(s);
    out += detail::to_json(s).dump();
    out += '\n';
  }
  return out;
}

std::vector<TraceStep> read_trace(std::string_view text) {
  std::vector<TraceStep> steps;
  auto lines = detail::split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    try {
      steps.push_back(detail::trace_step_from_json(detail::ojson::parse(lines[i])));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::MalformedLine, e.what(), i + 1);
    } catch (const Error& e) {
      fail(ErrorCode::SchemaError, e.what(), i + 1);
    }
  }
  return steps;
}

}  // namespace aloha
