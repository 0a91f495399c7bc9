#pragma once

#include <png.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "hrrt/errors.hpp"

namespace hrrt {

using Bytes = std::vector<std::uint8_t>;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

namespace colors {
inline constexpr Rgb kObstacle{0, 0, 0};
inline constexpr Rgb kFree{255, 255, 255};
inline constexpr Rgb kStart{255, 0, 0};
inline constexpr Rgb kGoal{0, 0, 255};
inline constexpr Rgb kPathRegion{0, 255, 0};
inline constexpr Rgb kPath{186, 85, 211};
inline constexpr Rgb kTreeEdge{190, 190, 190};
}  // namespace colors

/// 8-bit raster with 1 (gray) or 3 (RGB) interleaved channels, row-major.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  [[nodiscard]] std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * channels;
  }
  [[nodiscard]] Rgb rgb(int x, int y) const {
    const auto o = offset(x, y);
    return {data[o], data[o + 1], data[o + 2]};
  }
  void set_rgb(int x, int y, Rgb c) {
    const auto o = offset(x, y);
    data[o] = c.r;
    data[o + 1] = c.g;
    data[o + 2] = c.b;
  }
  [[nodiscard]] std::uint8_t gray(int x, int y) const { return data[offset(x, y)]; }
  void set_gray(int x, int y, std::uint8_t v) { data[offset(x, y)] = v; }

  friend bool operator==(const Image&, const Image&) = default;
};

inline Bytes encode_png(const Image& img) {
  if (img.channels != 1 && img.channels != 3) throw Error("encode_png: channels must be 1 or 3");
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(img.width);
  desc.height = static_cast<png_uint_32>(img.height);
  desc.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, img.data.data(), 0, nullptr))
    throw Error(std::string("encode_png: ") + desc.message);
  Bytes out(size);
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, img.data.data(), 0, nullptr))
    throw Error(std::string("encode_png: ") + desc.message);
  out.resize(size);
  return out;
}

/// Decodes to gray when the file has no color, RGB otherwise. Alpha is dropped.
inline Image decode_png(const Bytes& bytes) {
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size()))
    throw DecodeError(std::string("malformed PNG: ") + desc.message);
  const bool color = (desc.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (desc.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  if (alpha) {
    png_image_free(&desc);
    throw DecodeError("PNG with alpha channel is not supported");
  }
  desc.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image img(static_cast<int>(desc.width), static_cast<int>(desc.height), color ? 3 : 1);
  if (!png_image_finish_read(&desc, nullptr, img.data.data(), 0, nullptr))
    throw DecodeError(std::string("malformed PNG: ") + desc.message);
  return img;
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw Error("write failed: " + path.string());
}

inline void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  write_file(path, bytes.data(), bytes.size());
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, text.data(), text.size());
}

}  // namespace hrrt
