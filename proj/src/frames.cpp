#include "aloha/frames.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aloha/error.hpp"
#include "text_util.hpp"

namespace aloha {

namespace {

std::optional<std::int64_t> parse_nonneg(std::string_view s) {
  if (s.empty() || s[0] == '-' || s[0] == '+') return std::nullopt;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

double dist2_to_segment(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double wx = px - ax, wy = py - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? (wx * vx + wy * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
  return dx * dx + dy * dy;
}

struct Segment {
  double ax, ay, bx, by;
};

std::vector<Segment> marker_segments(const SemanticAction& action, const MarkConfig& cfg) {
  std::vector<Segment> segs;
  if (action.kind == ActionKind::Drag) {
    for (std::size_t i = 0; i + 1 < action.path.size(); ++i) {
      segs.push_back({double(action.path[i].x), double(action.path[i].y), double(action.path[i + 1].x),
                      double(action.path[i + 1].y)});
    }
    return segs;
  }
  const Point c = *action.point;
  const double d = cfg.arm_px / std::sqrt(2.0);
  segs.push_back({c.x - d, c.y - d, c.x + d, c.y + d});
  segs.push_back({c.x - d, c.y + d, c.x + d, c.y - d});
  return segs;
}

std::shared_ptr<const Raster> require_frame(const std::shared_ptr<const Raster>& frame, const MarkConfig& cfg) {
  validate(cfg);
  if (!frame || !frame->valid()) fail(ErrorCode::InvariantViolation, "frame raster is invalid");
  if (frame->w < cfg.crop_size || frame->h < cfg.crop_size) {
    fail(ErrorCode::InvariantViolation, "frame is smaller than the crop size");
  }
  return frame;
}

Raster copy_crop(const Raster& frame, Point origin, int size) {
  Raster crop(size, size);
  const std::size_t row_bytes = static_cast<std::size_t>(size) * 3;
  for (int y = 0; y < size; ++y) {
    const auto* src = frame.pixels.data() + (static_cast<std::size_t>(origin.y + y) * frame.w + origin.x) * 3;
    std::copy(src, src + row_bytes, crop.pixels.data() + static_cast<std::size_t>(y) * row_bytes);
  }
  return crop;
}

}  // namespace

std::string frame_file_stem(std::int64_t frame_no) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06lld", static_cast<long long>(frame_no));
  return buf;
}

std::filesystem::path FrameIndex::frame_path(std::int64_t frame_no) const {
  const auto stem = frame_file_stem(frame_no);
  auto png = dir / (stem + ".png");
  if (std::filesystem::exists(png)) return png;
  return dir / (stem + ".ppm");
}

Raster FrameIndex::load(std::int64_t frame_no) const {
  const auto path = frame_path(frame_no);
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingFrameFile, "frame " + std::to_string(frame_no));
  return read_image(path);
}

FrameIndex load_frame_index(const std::filesystem::path& dir) {
  const auto idx_path = dir / "frames.idx";
  std::ifstream in(idx_path);
  if (!in) fail(ErrorCode::MissingIndex, idx_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  FrameIndex idx;
  idx.dir = dir;
  auto lines = detail::split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    auto fields = detail::split(lines[i], '\t');
    if (fields.size() != 2) fail(ErrorCode::MalformedLine, std::string(lines[i]), line_no);
    auto no = parse_nonneg(fields[0]);
    auto t = parse_nonneg(fields[1]);
    if (!no || !t) fail(ErrorCode::MalformedLine, std::string(lines[i]), line_no);
    if (!idx.entries.empty() && *t <= idx.entries.back().t) {
      fail(ErrorCode::NonIncreasingTimestamp, std::string(lines[i]), line_no);
    }
    idx.entries.push_back({*no, *t});
  }
  for (const auto& e : idx.entries) {
    if (!std::filesystem::exists(idx.frame_path(e.frame_no))) {
      fail(ErrorCode::MissingFrameFile, "frame " + std::to_string(e.frame_no));
    }
  }
  return idx;
}

std::string write_frame_index(std::span<const FrameEntry> entries) {
  std::string out;
  for (const auto& e : entries) out += std::to_string(e.frame_no) + '\t' + std::to_string(e.t) + '\n';
  return out;
}

std::vector<FrameEntry> synth_frame_times(std::int64_t count, int fps) {
  if (fps <= 0) fail(ErrorCode::InvariantViolation, "fps must be positive");
  std::vector<FrameEntry> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
  for (std::int64_t i = 0; i < count; ++i) out.push_back({i, i * 1000 / fps});
  return out;
}

std::int64_t frame_at(const FrameIndex& idx, std::int64_t t) {
  if (idx.entries.empty()) fail(ErrorCode::InvariantViolation, "empty frame index");
  auto it = std::upper_bound(idx.entries.begin(), idx.entries.end(), t,
                             [](std::int64_t value, const FrameEntry& e) { return value < e.t; });
  if (it == idx.entries.begin()) fail(ErrorCode::BeforeFirstFrame, "t=" + std::to_string(t));
  return std::prev(it)->frame_no;
}

void validate(const MarkConfig& cfg) {
  if (cfg.crop_size <= 0 || cfg.arm_px <= 0 || cfg.stroke_px <= 0 || cfg.alpha < 0.0 || cfg.alpha > 1.0) {
    fail(ErrorCode::InvariantViolation, "mark config out of range");
  }
}

Point action_anchor(const SemanticAction& action) {
  if (!has_geometry(action.kind)) fail(ErrorCode::NoGeometry, std::string(to_string(action.kind)));
  if (action.kind != ActionKind::Drag) return *action.point;
  if (action.path.empty()) fail(ErrorCode::InvariantViolation, "drag without path");
  int minx = action.path[0].x, maxx = minx, miny = action.path[0].y, maxy = miny;
  for (Point p : action.path) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  return {(minx + maxx) / 2, (miny + maxy) / 2};
}

Point crop_origin_for(Point anchor, int frame_w, int frame_h, int crop_size) {
  const int half = crop_size / 2;
  return {std::clamp(anchor.x - half, 0, frame_w - crop_size), std::clamp(anchor.y - half, 0, frame_h - crop_size)};
}

std::vector<Point> marker_pixels(const SemanticAction& action, Point crop_origin, const MarkConfig& cfg) {
  const double r = cfg.stroke_px / 2.0;
  const double r2 = r * r;
  const int size = cfg.crop_size;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(size) * size, 0);
  for (const auto& s : marker_segments(action, cfg)) {
    const int x0 = std::max(crop_origin.x, static_cast<int>(std::floor(std::min(s.ax, s.bx) - r)));
    const int x1 = std::min(crop_origin.x + size - 1, static_cast<int>(std::ceil(std::max(s.ax, s.bx) + r)));
    const int y0 = std::max(crop_origin.y, static_cast<int>(std::floor(std::min(s.ay, s.by) - r)));
    const int y1 = std::min(crop_origin.y + size - 1, static_cast<int>(std::ceil(std::max(s.ay, s.by) + r)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (dist2_to_segment(x, y, s.ax, s.ay, s.bx, s.by) <= r2) {
          mask[static_cast<std::size_t>(y - crop_origin.y) * size + (x - crop_origin.x)] = 1;
        }
      }
    }
  }
  std::vector<Point> out;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (mask[static_cast<std::size_t>(y) * size + x]) out.push_back({crop_origin.x + x, crop_origin.y + y});
    }
  }
  return out;
}

Rgb blend(Rgb src, const MarkConfig& cfg) {
  Rgb out{};
  for (int c = 0; c < 3; ++c) {
    const double v = (1.0 - cfg.alpha) * src[c] + cfg.alpha * cfg.color[c];
    out[c] = static_cast<std::uint8_t>(std::clamp(std::floor(v), 0.0, 255.0));
  }
  return out;
}

MarkedPair make_marked_pair(std::shared_ptr<const Raster> frame, const SemanticAction& action, const MarkConfig& cfg) {
  const Point anchor = action_anchor(action);
  require_frame(frame, cfg);
  MarkedPair pair;
  pair.action_kind = action.kind;
  pair.crop_origin = crop_origin_for(anchor, frame->w, frame->h, cfg.crop_size);
  pair.crop = copy_crop(*frame, pair.crop_origin, cfg.crop_size);
  for (Point p : marker_pixels(action, pair.crop_origin, cfg)) {
    const int cx = p.x - pair.crop_origin.x, cy = p.y - pair.crop_origin.y;
    pair.crop.set(cx, cy, blend(frame->at(p.x, p.y), cfg));
  }
  pair.context = std::move(frame);
  return pair;
}

MarkedPair make_context_pair(std::shared_ptr<const Raster> frame, Point anchor, ActionKind kind,
                             const MarkConfig& cfg) {
  require_frame(frame, cfg);
  MarkedPair pair;
  pair.action_kind = kind;
  pair.crop_origin = crop_origin_for(anchor, frame->w, frame->h, cfg.crop_size);
  pair.crop = copy_crop(*frame, pair.crop_origin, cfg.crop_size);
  pair.context = std::move(frame);
  return pair;
}

Point cursor_before(std::span<const SemanticAction> actions, std::size_t index, int frame_w, int frame_h) {
  for (std::size_t i = std::min(index, actions.size()); i-- > 0;) {
    const auto& a = actions[i];
    if (a.kind == ActionKind::Drag && !a.path.empty()) return a.path.back();
    if (a.point) return *a.point;
  }
  return {frame_w / 2, frame_h / 2};
}

}  // namespace aloha
