#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "softseg/error.hpp"
#include "softseg/image.hpp"

#ifdef SOFTSEG_WITH_PNG
#include <png.h>
#endif

namespace softseg {

// 8-bit files come back as GrayImage (scaled by maxval); 16-bit files come
// back as RawCtSlice with the stored values untouched, since whether they are
// CT data or a quantized mask is only known to the caller.
using LoadedImage = std::variant<GrayImage, RawCtSlice>;

enum class BitDepth { Eight, Sixteen };

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file_bytes(const std::string& path,
                             const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write: " + path);
}

// Reads one PGM header token, skipping whitespace and '#' comments.
inline std::string pgm_token(const std::vector<unsigned char>& bytes,
                             std::size_t& pos) {
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#') break;
    tok.push_back(c);
    ++pos;
  }
  if (tok.empty()) throw Error("malformed PGM header: unexpected end of file");
  return tok;
}

inline int pgm_int(const std::vector<unsigned char>& bytes, std::size_t& pos,
                   const char* what) {
  const std::string tok = pgm_token(bytes, pos);
  for (char c : tok)
    if (c < '0' || c > '9')
      throw Error(std::string("malformed PGM header: bad ") + what);
  return std::stoi(tok);
}

inline LoadedImage load_pgm(const std::vector<unsigned char>& bytes,
                            const std::string& path) {
  std::size_t pos = 0;
  if (pgm_token(bytes, pos) != "P5")
    throw Error("unsupported PGM magic (only binary P5 is supported): " + path);
  const int width = pgm_int(bytes, pos, "width");
  const int height = pgm_int(bytes, pos, "height");
  const int maxval = pgm_int(bytes, pos, "maxval");
  if (width < 1 || height < 1)
    throw Error("malformed PGM header: non-positive dimensions in " + path);
  if (maxval < 1 || maxval > 65535)
    throw Error("unsupported PGM maxval " + std::to_string(maxval));
  ++pos;  // single whitespace byte after maxval

  const std::size_t count = std::size_t(width) * std::size_t(height);
  if (maxval < 256) {
    if (bytes.size() - pos < count)
      throw Error("truncated PGM raster in " + path);
    GrayImage img(width, height);
    for (std::size_t i = 0; i < count; ++i)
      img.data()[i] = bytes[pos + i] / double(maxval);
    return img;
  }
  if (bytes.size() - pos < count * 2)
    throw Error("truncated PGM raster in " + path);
  RawCtSlice slice(width, height);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned hi = bytes[pos + 2 * i];
    const unsigned lo = bytes[pos + 2 * i + 1];
    slice.data()[i] = static_cast<std::uint16_t>((hi << 8) | lo);
  }
  return slice;
}

inline void save_pgm(const std::string& path,
                     const std::vector<std::uint16_t>& pixels, int width,
                     int height, int maxval) {
  std::string header = "P5\n" + std::to_string(width) + " " +
                       std::to_string(height) + "\n" + std::to_string(maxval) +
                       "\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + pixels.size() * (maxval < 256 ? 1 : 2));
  for (std::uint16_t v : pixels) {
    if (maxval < 256) {
      bytes.push_back(static_cast<unsigned char>(v));
    } else {
      bytes.push_back(static_cast<unsigned char>(v >> 8));
      bytes.push_back(static_cast<unsigned char>(v & 0xff));
    }
  }
  write_file_bytes(path, bytes);
}

#ifdef SOFTSEG_WITH_PNG

inline LoadedImage load_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw Error("cannot open file: " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw Error("libpng initialization failed");
  }

  std::vector<std::vector<unsigned char>> rows;
  int width = 0, height = 0, depth = 0, color = 0;
  std::string error;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw Error("malformed PNG file: " + path);
  }

  png_init_io(png, fp);
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  depth = png_get_bit_depth(png, info);
  color = png_get_color_type(png, info);

  if (color != PNG_COLOR_TYPE_GRAY) error = "unsupported color format";
  if (error.empty() && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }

  if (error.empty()) {
    rows.assign(static_cast<std::size_t>(height),
                std::vector<unsigned char>(std::size_t(width) * (depth / 8)));
    std::vector<png_bytep> row_ptrs(height);
    for (int y = 0; y < height; ++y) row_ptrs[y] = rows[y].data();
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
  }

  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  if (!error.empty()) throw Error(error + ": " + path);

  if (depth == 8) {
    GrayImage img(width, height);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) img.at(x, y) = rows[y][x] / 255.0;
    return img;
  }
  RawCtSlice slice(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const unsigned hi = rows[y][2 * x];
      const unsigned lo = rows[y][2 * x + 1];
      slice.at(x, y) = static_cast<std::uint16_t>((hi << 8) | lo);
    }
  return slice;
}

inline void save_png(const std::string& path,
                     const std::vector<std::uint16_t>& pixels, int width,
                     int height, int maxval) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw Error("cannot write file: " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error("PNG write failed: " + path);
  }

  const int depth = maxval < 256 ? 8 : 16;
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<unsigned char> row(std::size_t(width) * (depth / 8));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint16_t v = pixels[std::size_t(y) * width + x];
      if (depth == 8) {
        row[x] = static_cast<unsigned char>(v);
      } else {
        row[2 * x] = static_cast<unsigned char>(v >> 8);
        row[2 * x + 1] = static_cast<unsigned char>(v & 0xff);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

#endif  // SOFTSEG_WITH_PNG

inline bool has_png_extension(const std::string& path) {
  const auto ext = std::filesystem::path(path).extension().string();
  return ext == ".png" || ext == ".PNG";
}

inline std::vector<std::uint16_t> quantize(const std::vector<double>& values,
                                           int maxval) {
  std::vector<std::uint16_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double q = std::lround(values[i] * maxval);
    out[i] = static_cast<std::uint16_t>(std::clamp(q, 0.0, double(maxval)));
  }
  return out;
}

inline void save_pixels(const std::string& path,
                        const std::vector<std::uint16_t>& pixels, int width,
                        int height, int maxval) {
  if (has_png_extension(path)) {
#ifdef SOFTSEG_WITH_PNG
    save_png(path, pixels, width, height, maxval);
    return;
#else
    throw Error("PNG support not built: " + path);
#endif
  }
  save_pgm(path, pixels, width, height, maxval);
}

}  // namespace detail

// Loads a PGM (P5) or grayscale PNG file. Dispatch is by content signature,
// not extension.
inline LoadedImage load_image(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5')
    return detail::load_pgm(bytes, path);
  if (bytes.size() >= 4 && bytes[0] == 0x89 && bytes[1] == 'P' &&
      bytes[2] == 'N' && bytes[3] == 'G') {
#ifdef SOFTSEG_WITH_PNG
    return detail::load_png(path);
#else
    throw Error("PNG support not built: " + path);
#endif
  }
  throw Error("unrecognized image format (expected PGM P5 or PNG): " + path);
}

// Loads a file that must be 8-bit or is to be treated as plain [0,1] data;
// 16-bit input is normalized by 1/65535.
inline GrayImage load_gray(const std::string& path) {
  LoadedImage img = load_image(path);
  if (std::holds_alternative<GrayImage>(img))
    return std::get<GrayImage>(std::move(img));
  return normalize_raw(std::get<RawCtSlice>(img));
}

// Loads a mask image; any pixel at or above half intensity counts as set.
inline BinaryMask load_binary_mask(const std::string& path) {
  const GrayImage g = load_gray(path);
  BinaryMask out(g.width(), g.height());
  for (std::size_t i = 0; i < g.size(); ++i)
    out.data()[i] = g.data()[i] >= 0.5 ? 1 : 0;
  return out;
}

// Values are quantized by round(v * (2^depth - 1)); a save/load round trip
// reproduces the input within one quantization step per pixel.
inline void save_image(const GrayImage& img, const std::string& path,
                       BitDepth depth = BitDepth::Eight) {
  const int maxval = depth == BitDepth::Eight ? 255 : 65535;
  detail::save_pixels(path, detail::quantize(img.data(), maxval), img.width(),
                      img.height(), maxval);
}

inline void save_image(const BinaryMask& mask, const std::string& path,
                       BitDepth depth = BitDepth::Eight) {
  const int maxval = depth == BitDepth::Eight ? 255 : 65535;
  std::vector<std::uint16_t> pixels(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    pixels[i] = mask.data()[i] ? static_cast<std::uint16_t>(maxval) : 0;
  detail::save_pixels(path, pixels, mask.width(), mask.height(), maxval);
}

// Trimaps are stored as 8-bit images with the fixed encoding
// {background=0, unknown=128, foreground=255}.
inline void save_trimap(const Trimap& trimap, const std::string& path) {
  std::vector<std::uint16_t> pixels(trimap.size());
  for (std::size_t i = 0; i < trimap.size(); ++i) {
    switch (trimap.data()[i]) {
      case TrimapLabel::Background: pixels[i] = 0; break;
      case TrimapLabel::Unknown: pixels[i] = 128; break;
      case TrimapLabel::Foreground: pixels[i] = 255; break;
    }
  }
  detail::save_pixels(path, pixels, trimap.width(), trimap.height(), 255);
}

inline Trimap load_trimap(const std::string& path) {
  LoadedImage img = load_image(path);
  if (!std::holds_alternative<GrayImage>(img))
    throw Error("trimap files must be 8-bit: " + path);
  const GrayImage& g = std::get<GrayImage>(img);
  Trimap out(g.width(), g.height());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int v = static_cast<int>(std::lround(g.data()[i] * 255.0));
    if (v == 0) out.data()[i] = TrimapLabel::Background;
    else if (v == 128) out.data()[i] = TrimapLabel::Unknown;
    else if (v == 255) out.data()[i] = TrimapLabel::Foreground;
    else
      throw Error("invalid trimap pixel value " + std::to_string(v) +
                  " (expected 0, 128 or 255) in " + path);
  }
  return out;
}

}  // namespace softseg
