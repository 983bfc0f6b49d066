#include "aloha/raster.hpp"

#include <png.h>
#include <openssl/evp.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

#include "aloha/error.hpp"

namespace aloha {

Raster::Raster(int width, int height, Rgb fill) : w(width), h(height) {
  if (width <= 0 || height <= 0) fail(ErrorCode::InvariantViolation, "raster dimensions must be positive");
  pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill[0];
    pixels[i + 1] = fill[1];
    pixels[i + 2] = fill[2];
  }
}

void Raster::fill_rect(int x, int y, int rw, int rh, Rgb c) {
  const int x0 = std::max(0, x), y0 = std::max(0, y);
  const int x1 = std::min(w, x + rw), y1 = std::min(h, y + rh);
  for (int yy = y0; yy < y1; ++yy) {
    for (int xx = x0; xx < x1; ++xx) set(xx, yy, c);
  }
}

std::string encode_ppm(const Raster& r) {
  if (!r.valid()) fail(ErrorCode::InvariantViolation, "invalid raster");
  std::string out = "P6\n" + std::to_string(r.w) + " " + std::to_string(r.h) + "\n255\n";
  out.append(reinterpret_cast<const char*>(r.pixels.data()), r.pixels.size());
  return out;
}

namespace {

class PpmHeaderReader {
 public:
  explicit PpmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  int next_int() {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > 1'000'000) fail(ErrorCode::ImageFormat, "PPM dimension too large");
      ++digits;
    }
    if (digits == 0) fail(ErrorCode::ImageFormat, "PPM header: expected integer");
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t data_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail(ErrorCode::ImageFormat, "PPM header truncated");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

Raster decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') fail(ErrorCode::ImageFormat, "not a P6 PPM");
  PpmHeaderReader reader(bytes);
  const int w = reader.next_int();
  const int h = reader.next_int();
  const int maxval = reader.next_int();
  if (w <= 0 || h <= 0 || maxval != 255) fail(ErrorCode::ImageFormat, "unsupported PPM geometry or maxval");
  const std::size_t offset = reader.data_offset();
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - offset < need) fail(ErrorCode::ImageFormat, "PPM pixel data truncated");
  Raster r;
  r.w = w;
  r.h = h;
  r.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                  bytes.begin() + static_cast<std::ptrdiff_t>(offset + need));
  return r;
}

std::vector<std::uint8_t> encode_png(const Raster& r) {
  if (!r.valid()) fail(ErrorCode::InvariantViolation, "invalid raster");
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(r.w);
  image.height = static_cast<png_uint_32>(r.h);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, r.pixels.data(), 0, nullptr)) {
    fail(ErrorCode::ImageFormat, std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, r.pixels.data(), 0, nullptr)) {
    fail(ErrorCode::ImageFormat, std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

Raster decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    fail(ErrorCode::ImageFormat, std::string("PNG decode failed: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  Raster r;
  r.w = static_cast<int>(image.width);
  r.h = static_cast<int>(image.height);
  r.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, r.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorCode::ImageFormat, std::string("PNG decode failed: ") + image.message);
  }
  return r;
}

Raster read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto ext = path.extension().string();
  if (ext == ".ppm") return decode_ppm(bytes);
  if (ext == ".png") return decode_png(bytes);
  fail(ErrorCode::ImageFormat, "unsupported image extension: " + ext);
}

void write_image(const std::filesystem::path& path, const Raster& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".ppm") {
    const auto data = encode_ppm(r);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
  } else if (ext == ".png") {
    const auto data = encode_png(r);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  } else {
    fail(ErrorCode::ImageFormat, "unsupported image extension: " + ext);
  }
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace aloha
