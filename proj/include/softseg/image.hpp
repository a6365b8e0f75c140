#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "softseg/error.hpp"

namespace softseg {

// Row-major 2D pixel plane. Every image-like value in the library is an
// instantiation of this template; semantics live in the aliases below.
template <typename T>
class Plane {
 public:
  Plane() = default;

  Plane(int width, int height, T fill = T{})
      : width_(width),
        height_(height),
        data_(checked_size(width, height), fill) {}

  Plane(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != checked_size(width, height))
      throw Error("plane data length does not match width * height");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }

  // Row-major linear index.
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_dims(const Plane& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Plane& a, const Plane& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  static std::size_t checked_size(int width, int height) {
    if (width < 0 || height < 0)
      throw Error("plane dimensions must be non-negative");
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Intensities in [0,1].
using GrayImage = Plane<double>;
// Per-pixel alpha in [0,1]; foreground = 1, background = 0.
using SoftMask = Plane<double>;
// Values restricted to {0,1}.
using BinaryMask = Plane<std::uint8_t>;
// 16-bit CT export, stored value = HU + 32768, not yet windowed.
using RawCtSlice = Plane<std::uint16_t>;

enum class TrimapLabel : std::uint8_t { Background = 0, Unknown = 1, Foreground = 2 };
using Trimap = Plane<TrimapLabel>;

enum class SeedLabel : std::uint8_t { Undecided = 0, SureForeground = 1, SureBackground = 2 };
using SeedLabels = Plane<SeedLabel>;

inline void check_same_dims(int wa, int ha, int wb, int hb, const char* what) {
  if (wa != wb || ha != hb)
    throw Error(std::string(what) + ": dimension mismatch");
}

template <typename A, typename B>
void check_same_dims(const Plane<A>& a, const Plane<B>& b, const char* what) {
  check_same_dims(a.width(), a.height(), b.width(), b.height(), what);
}

inline std::size_t count_set(const BinaryMask& mask) {
  std::size_t n = 0;
  for (auto v : mask.data()) n += (v != 0);
  return n;
}

inline BinaryMask complement(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i)
    out.data()[i] = mask.data()[i] ? 0 : 1;
  return out;
}

// ---------------------------------------------------------------------------
// CT windowing

// Maps stored 16-bit CT values to [0,1] display intensities.
// stored = HU + 32768; v = clamp((HU - (level - width/2)) / width, 0, 1).
inline GrayImage hu_window(const RawCtSlice& slice, double level, double width) {
  if (!(width > 0.0)) throw Error("hu_window: window width must be > 0");
  GrayImage out(slice.width(), slice.height());
  const double lo = level - width / 2.0;
  for (std::size_t i = 0; i < slice.size(); ++i) {
    const double hu = static_cast<double>(slice.data()[i]) - 32768.0;
    out.data()[i] = std::clamp((hu - lo) / width, 0.0, 1.0);
  }
  return out;
}

// Plain normalization for 16-bit files that are masks rather than CT data.
inline GrayImage normalize_raw(const RawCtSlice& slice) {
  GrayImage out(slice.width(), slice.height());
  for (std::size_t i = 0; i < slice.size(); ++i)
    out.data()[i] = slice.data()[i] / 65535.0;
  return out;
}

// ---------------------------------------------------------------------------
// Binary morphology

struct StructuringElement {
  enum class Shape { Disk, Square };

  Shape shape = Shape::Disk;
  int radius = 1;

  StructuringElement(Shape s, int r) : shape(s), radius(r) {
    if (r < 1) throw Error("structuring element radius must be >= 1");
  }

  // Offsets covered by the element, origin included.
  std::vector<std::pair<int, int>> offsets() const {
    std::vector<std::pair<int, int>> out;
    const int r2 = radius * radius;
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx)
        if (shape == Shape::Square || dx * dx + dy * dy <= r2)
          out.emplace_back(dx, dy);
    return out;
  }
};

enum class MorphOp { Erode, Dilate };

// Pixels outside the image are treated as background for both operations,
// so erosion always strips the border of a mask that reaches it.
inline BinaryMask morphology(const BinaryMask& mask, MorphOp op,
                             const StructuringElement& se) {
  const auto offsets = se.offsets();
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      bool value = (op == MorphOp::Erode);
      for (const auto& [dx, dy] : offsets) {
        const int nx = x + dx;
        const int ny = y + dy;
        const bool covered = mask.in_bounds(nx, ny) && mask.at(nx, ny) != 0;
        if (op == MorphOp::Erode) {
          if (!covered) { value = false; break; }
        } else {
          if (covered) { value = true; break; }
        }
      }
      out.at(x, y) = value ? 1 : 0;
    }
  }
  return out;
}

inline BinaryMask erode(const BinaryMask& mask, const StructuringElement& se) {
  return morphology(mask, MorphOp::Erode, se);
}

inline BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) {
  return morphology(mask, MorphOp::Dilate, se);
}

// ---------------------------------------------------------------------------
// Resizing

// Align-corners bilinear resampling: x_src = x_dst * (W-1)/(W'-1) for W' > 1,
// and x_src = 0 when the target dimension is 1.
inline GrayImage bilinear_resize(const GrayImage& img, int new_width,
                                 int new_height) {
  if (new_width < 1 || new_height < 1)
    throw Error("bilinear_resize: target dimensions must be >= 1");
  if (img.empty()) throw Error("bilinear_resize: empty source image");

  const double sx =
      new_width > 1 ? double(img.width() - 1) / double(new_width - 1) : 0.0;
  const double sy =
      new_height > 1 ? double(img.height() - 1) / double(new_height - 1) : 0.0;

  GrayImage out(new_width, new_height);
  for (int y = 0; y < new_height; ++y) {
    const double fy = y * sy;
    const int y0 = std::min(static_cast<int>(fy), img.height() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < new_width; ++x) {
      const double fx = x * sx;
      const int x0 = std::min(static_cast<int>(fx), img.width() - 1);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - x0;
      const double top = img.at(x0, y0) * (1.0 - wx) + img.at(x1, y0) * wx;
      const double bottom = img.at(x0, y1) * (1.0 - wx) + img.at(x1, y1) * wx;
      out.at(x, y) = top * (1.0 - wy) + bottom * wy;
    }
  }
  return out;
}

}  // namespace softseg
