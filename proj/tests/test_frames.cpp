#include <cmath>
#include <fstream>

#include "aloha/error.hpp"
#include "aloha/frames.hpp"
#include "aloha/raster.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace aloha;

namespace {

std::shared_ptr<const Raster> gradient(int w, int h) {
  auto r = std::make_shared<Raster>(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      r->set(x, y, {static_cast<std::uint8_t>((x * 7 + y) & 255), static_cast<std::uint8_t>((y * 5) & 255),
                    static_cast<std::uint8_t>((x ^ y) & 255)});
    }
  }
  return r;
}

void write_index(const std::filesystem::path& dir, const std::string& text, std::initializer_list<int> frames) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "frames.idx") << text;
  for (int f : frames) write_image(dir / (frame_file_stem(f) + ".ppm"), Raster(4, 4, {1, 2, 3}));
}

}  // namespace

TEST_SUITE("frames") {

TEST_CASE("frame index loading") {
  testsupport::TempDir dir("idx");
  write_index(dir.path(), "0\t0\n1\t33\n2\t66\n", {0, 1, 2});
  const FrameIndex idx = load_frame_index(dir.path());
  REQUIRE(idx.entries.size() == 3);
  CHECK(idx.entries[1] == FrameEntry{1, 33});
  CHECK(frame_file_stem(7) == "frame_000007");
  CHECK(idx.load(2) == Raster(4, 4, {1, 2, 3}));
}

TEST_CASE("frame index errors") {
  testsupport::TempDir dir("idxerr");
  CHECK(testsupport::error_code([&] { load_frame_index(dir / "none"); }) == ErrorCode::MissingIndex);
  write_index(dir / "a", "0\t0\n1\t33\n", {0});
  CHECK(testsupport::error_code([&] { load_frame_index(dir / "a"); }) == ErrorCode::MissingFrameFile);
  write_index(dir / "b", "0\t0\n1\t0\n", {0, 1});
  CHECK(testsupport::error_code([&] { load_frame_index(dir / "b"); }) == ErrorCode::NonIncreasingTimestamp);
  write_index(dir / "c", "0 0\n", {0});
  CHECK(testsupport::error_code([&] { load_frame_index(dir / "c"); }) == ErrorCode::MalformedLine);
}

TEST_CASE("30 fps timestamps step by 33 or 34 ms") {
  const auto times = synth_frame_times(300, 30);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const auto d = times[i].t - times[i - 1].t;
    REQUIRE((d == 33 || d == 34));
  }
  CHECK(write_frame_index(std::vector<FrameEntry>{{0, 0}, {1, 33}}) == "0\t0\n1\t33\n");
}

TEST_CASE("frame lookup is a floor search") {
  FrameIndex idx;
  idx.entries = {{0, 0}, {1, 33}, {2, 66}};
  CHECK(frame_at(idx, 40) == 1);
  CHECK(frame_at(idx, 66) == 2);
  CHECK(frame_at(idx, 1000) == 2);
  CHECK(frame_at(idx, 0) == 0);
  CHECK(testsupport::error_code([&] { frame_at(idx, -1); }) == ErrorCode::BeforeFirstFrame);
}

TEST_CASE("crop origins") {
  CHECK(crop_origin_for({960, 540}, 1920, 1080, 512) == Point{704, 284});
  CHECK(crop_origin_for({10, 10}, 1920, 1080, 512) == Point{0, 0});
  CHECK(crop_origin_for({1919, 1079}, 1920, 1080, 512) == Point{1408, 568});
}

TEST_CASE("blend values") {
  const MarkConfig cfg;
  CHECK(blend({255, 0, 0}, cfg) == Rgb{255, 0, 0});
  CHECK(blend({0, 0, 0}, cfg) == Rgb{127, 0, 0});
  CHECK(blend({255, 255, 255}, cfg) == Rgb{255, 127, 127});
}

TEST_CASE("marked pair for a click") {
  auto frame = std::make_shared<const Raster>(1920, 1080, Rgb{0, 0, 0});
  const auto pair = make_marked_pair(frame, SemanticAction::click(0, 0, MouseButton::L, {960, 540}));
  CHECK(pair.crop_origin == Point{704, 284});
  CHECK(pair.crop.w == 512);
  CHECK(pair.crop.h == 512);
  CHECK(pair.context == frame);
  CHECK(pair.crop.at(256, 256) == Rgb{127, 0, 0});
  CHECK(pair.crop.at(0, 0) == Rgb{0, 0, 0});
  // arm tip reached, just past it untouched
  CHECK(pair.crop.at(256 + 33, 256 + 33) == Rgb{127, 0, 0});
  CHECK(pair.crop.at(256 + 40, 256 + 40) == Rgb{0, 0, 0});
  CHECK(pair.crop.at(256 + 20, 256) == Rgb{0, 0, 0});
}

TEST_CASE("drag draws a polyline and no cross") {
  auto frame = std::make_shared<const Raster>(1920, 1080, Rgb{0, 0, 0});
  const auto a = SemanticAction::drag(0, 0, MouseButton::L, {{800, 500}, {1000, 500}});
  const auto pair = make_marked_pair(frame, a);
  CHECK(pair.crop_origin == Point{900 - 256, 500 - 256});
  for (int x = 800; x <= 1000; x += 10) CHECK(pair.crop.at(x - pair.crop_origin.x, 256) == Rgb{127, 0, 0});
  CHECK(pair.crop.at(256, 256 + 20) == Rgb{0, 0, 0});
  CHECK(pair.crop.at(256 + 20, 256 + 20) == Rgb{0, 0, 0});
}

TEST_CASE("keyboard actions have no geometry") {
  auto frame = std::make_shared<const Raster>(1920, 1080);
  CHECK(testsupport::error_code([&] { make_marked_pair(frame, SemanticAction::type(0, 0, "x")); }) == ErrorCode::NoGeometry);
  const auto ctx = make_context_pair(frame, {100, 100}, ActionKind::Type);
  CHECK(ctx.crop_origin == Point{0, 0});
  CHECK(ctx.crop == Raster(512, 512));
  const std::vector<SemanticAction> acts{SemanticAction::click(0, 0, MouseButton::L, {5, 6}),
                                         SemanticAction::type(1, 2, "a")};
  CHECK(cursor_before(acts, 1, 1920, 1080) == Point{5, 6});
  CHECK(cursor_before(acts, 0, 1920, 1080) == Point{960, 540});
}

TEST_CASE("frames smaller than the crop are rejected") {
  auto frame = std::make_shared<const Raster>(100, 100);
  CHECK_THROWS_AS(make_marked_pair(frame, SemanticAction::click(0, 0, MouseButton::L, {5, 5})), Error);
}

TEST_CASE("grid of anchors: containment, centroid and blend") {
  const MarkConfig cfg;
  auto frame = gradient(1920, 1080);
  const int reach = cfg.arm_px + cfg.stroke_px;
  int centroid_checked = 0;
  for (int y = 0; y < 1080; y += 17) {
    for (int x = 0; x < 1920; x += 17) {
      const Point o = crop_origin_for({x, y}, 1920, 1080, cfg.crop_size);
      REQUIRE(o.x >= 0);
      REQUIRE(o.y >= 0);
      REQUIRE(o.x + cfg.crop_size <= 1920);
      REQUIRE(o.y + cfg.crop_size <= 1080);
      const auto pts = marker_pixels(SemanticAction::click(0, 0, MouseButton::L, {x, y}), o, cfg);
      const bool unclamped = x - reach >= o.x && y - reach >= o.y && x + reach < o.x + cfg.crop_size &&
                             y + reach < o.y + cfg.crop_size;
      if (unclamped) {
        double sx = 0, sy = 0;
        for (Point p : pts) sx += p.x, sy += p.y;
        REQUIRE(!pts.empty());
        REQUIRE(std::abs(sx / pts.size() - x) <= 1.0);
        REQUIRE(std::abs(sy / pts.size() - y) <= 1.0);
        ++centroid_checked;
      }
    }
  }
  CHECK(centroid_checked > 5000);

  for (int y = 0; y < 1080; y += 17 * 7) {
    for (int x = 0; x < 1920; x += 17 * 7) {
      const auto pair = make_marked_pair(frame, SemanticAction::click(0, 0, MouseButton::L, {x, y}), cfg);
      REQUIRE(pair.context == frame);
      int n = 0;
      for (int cy = 0; cy < cfg.crop_size; ++cy) {
        for (int cx = 0; cx < cfg.crop_size; ++cx) {
          const Rgb src = frame->at(pair.crop_origin.x + cx, pair.crop_origin.y + cy);
          const Rgb out = pair.crop.at(cx, cy);
          if (out == src) continue;
          REQUIRE(std::abs(out[0] - static_cast<int>(std::floor(0.5 * src[0] + 127.5))) <= 1);
          REQUIRE(out[1] == src[1] / 2);
          REQUIRE(out[2] == src[2] / 2);
          ++n;
        }
      }
      REQUIRE(n > 0);
    }
  }
}

TEST_CASE("image codecs round trip") {
  testsupport::TempDir dir("img");
  const Raster r = *gradient(37, 23);
  write_image(dir / "a.ppm", r);
  write_image(dir / "a.png", r);
  CHECK(read_image(dir / "a.ppm") == r);
  CHECK(read_image(dir / "a.png") == r);
  const std::string ppm = encode_ppm(r);
  CHECK(ppm.rfind("P6\n37 23\n255\n", 0) == 0);
  CHECK(decode_ppm(std::span(reinterpret_cast<const std::uint8_t*>(ppm.data()), ppm.size())) == r);
  const std::vector<std::uint8_t> junk{1, 2, 3};
  CHECK_THROWS_AS(decode_png(junk), Error);
  CHECK_THROWS_AS(decode_ppm(junk), Error);
  CHECK_THROWS_AS(write_image(dir / "a.bmp", r), Error);
}

TEST_CASE("base64") {
  const std::string s = "Man";
  CHECK(base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())) == "TWFu");
  const std::string t = "Ma";
  CHECK(base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(t.data()), t.size())) == "TWE=");
}

}
