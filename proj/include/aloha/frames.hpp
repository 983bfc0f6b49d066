#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aloha/consolidate.hpp"
#include "aloha/raster.hpp"

namespace aloha {

struct FrameEntry {
  std::int64_t frame_no = 0;
  std::int64_t t = 0;
  friend bool operator==(const FrameEntry&, const FrameEntry&) = default;
};

// `frames.idx` lines are `<frame_no>\t<t>`; images live next to it as
// frame_<frame_no, 6 digits>.png or .ppm.
struct FrameIndex {
  std::filesystem::path dir;
  std::vector<FrameEntry> entries;

  std::filesystem::path frame_path(std::int64_t frame_no) const;
  Raster load(std::int64_t frame_no) const;
};

std::string frame_file_stem(std::int64_t frame_no);

FrameIndex load_frame_index(const std::filesystem::path& dir);
std::string write_frame_index(std::span<const FrameEntry> entries);

// Capture timestamps for `count` frames at `fps`: t_i = floor(i * 1000 / fps).
std::vector<FrameEntry> synth_frame_times(std::int64_t count, int fps);

// The frame on screen at time t: greatest entry timestamp <= t.
std::int64_t frame_at(const FrameIndex& idx, std::int64_t t);

struct MarkConfig {
  int crop_size = 512;
  int arm_px = 48;     // center-to-tip length of each X stroke
  int stroke_px = 6;
  double alpha = 0.5;
  Rgb color = {255, 0, 0};
};

struct MarkedPair {
  Raster crop;                              // marked, crop_size x crop_size
  std::shared_ptr<const Raster> context;    // the untouched full frame
  Point crop_origin;
  ActionKind action_kind = ActionKind::Click;
};

// Click/DoubleClick/Scroll point, or the drag path's bounding-box center.
// Throws NoGeometry for keyboard actions.
Point action_anchor(const SemanticAction& action);

// Top-left of a crop centered on `anchor`, shifted to lie inside the frame.
Point crop_origin_for(Point anchor, int frame_w, int frame_h, int crop_size);

// Pixels the marker for `action` covers, in frame coordinates, clipped to
// the crop rect. Blending happens once per covered pixel.
std::vector<Point> marker_pixels(const SemanticAction& action, Point crop_origin, const MarkConfig& cfg);

Rgb blend(Rgb src, const MarkConfig& cfg);

MarkedPair make_marked_pair(std::shared_ptr<const Raster> frame, const SemanticAction& action,
                            const MarkConfig& cfg = {});

// Unmarked crop centered on `anchor`, used for keyboard-only actions.
MarkedPair make_context_pair(std::shared_ptr<const Raster> frame, Point anchor, ActionKind kind,
                             const MarkConfig& cfg = {});

// Last known cursor position before actions[index]: the final point of the
// most recent geometric action, or the frame center when there is none.
Point cursor_before(std::span<const SemanticAction> actions, std::size_t index, int frame_w, int frame_h);

void validate(const MarkConfig& cfg);

}  // namespace aloha
