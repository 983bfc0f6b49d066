#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace aloha {

using Rgb = std::array<std::uint8_t, 3>;

// Row-major 8-bit RGB image.
struct Raster {
  int w = 0;
  int h = 0;
  std::vector<std::uint8_t> pixels;

  Raster() = default;
  Raster(int width, int height, Rgb fill = {0, 0, 0});

  bool valid() const {
    return w > 0 && h > 0 && pixels.size() == static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  }
  Rgb at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
    pixels[i] = c[0];
    pixels[i + 1] = c[1];
    pixels[i + 2] = c[2];
  }
  void fill_rect(int x, int y, int rw, int rh, Rgb c);

  friend bool operator==(const Raster&, const Raster&) = default;
};

// Binary PPM (P6, maxval 255); the bit-exact reference format.
std::string encode_ppm(const Raster& r);
Raster decode_ppm(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const Raster& r);
Raster decode_png(std::span<const std::uint8_t> bytes);

// Dispatches on the file extension (.ppm or .png).
Raster read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Raster& r);

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace aloha
