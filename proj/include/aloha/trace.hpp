#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aloha/consolidate.hpp"
#include "aloha/frames.hpp"

namespace aloha {

// The four-field teaching record produced for every cleaned action.
struct TraceStep {
  std::string observation;
  std::string think;
  std::string action;
  std::string expectation;
  std::int64_t source_action_index = 0;

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

// Versioned prompt texts (resources/prompts_v1.json).
struct PromptResources {
  int version = 0;
  std::string base_instruction;
  std::map<ActionKind, std::string> deltas;
  std::string planner_instruction;
};

const PromptResources& default_prompt_resources();
PromptResources parse_prompt_resources(std::string_view json_text);

struct PromptBundle {
  std::string base_instruction;
  std::string delta;
  std::string history_summary;
  std::vector<std::shared_ptr<const Raster>> images;  // crop first, then context
  ActionKind action_kind = ActionKind::Click;
  std::string action_facts;  // coordinate-free payload (typed text, key combo, ...)

  std::string text() const;
};

class VlmBackend {
 public:
  virtual ~VlmBackend() = default;
  virtual std::string complete(const PromptBundle& prompt) = 0;
};

// Deterministic template engine keyed by action kind; never reads pixels.
class MockVlmBackend final : public VlmBackend {
 public:
  std::string complete(const PromptBundle& prompt) override;
};

inline constexpr std::size_t kTraceHistoryWindow = 3;

PromptBundle build_prompt(const SemanticAction& action, const MarkedPair& pair, std::span<const TraceStep> history,
                          const PromptResources& res = default_prompt_resources());

std::string action_facts(const SemanticAction& action);

// Canonical leading verb per action kind: click, double-click, drag, type,
// press, hotkey, scroll.
std::string_view canonical_verb(ActionKind kind);
bool is_canonical_verb(std::string_view word);

bool contains_coordinate_pair(std::string_view s);
std::string strip_coordinates(std::string_view s);
std::string normalize_action_verb(std::string_view action_text, ActionKind kind);

// Throws NoJsonObject, MissingField(name) or EmptyField(name).
TraceStep postprocess_step(std::string_view raw, const SemanticAction& action);

// One retry on NoJsonObject; transport errors propagate as BackendUnavailable.
TraceStep generate_step(VlmBackend& backend, const SemanticAction& action, const MarkedPair& pair,
                        std::span<const TraceStep> history, std::int64_t action_index);

using FrameProvider = std::function<std::shared_ptr<const Raster>(std::int64_t t)>;

// Aborts on the first failing step; the Error's line() is the action index.
std::vector<TraceStep> generate_trace(VlmBackend& backend, std::span<const SemanticAction> actions,
                                      const FrameProvider& frames, const MarkConfig& cfg = {});
std::vector<TraceStep> generate_trace(VlmBackend& backend, std::span<const SemanticAction> actions,
                                      const FrameIndex& idx, const MarkConfig& cfg = {});

void validate(const TraceStep& step);

// JSON Lines with keys observation, think, action, expectation, source_action_index.
std::string write_trace(std::span<const TraceStep> steps);
std::vector<TraceStep> read_trace(std::string_view text);

}  // namespace aloha
