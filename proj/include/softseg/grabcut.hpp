#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "softseg/error.hpp"
#include "softseg/gmm.hpp"
#include "softseg/image.hpp"
#include "softseg/max_flow.hpp"

namespace softseg {

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct LineSegment {
  PixelCoord p0, p1;

  double length() const {
    const double dx = p1.x - p0.x;
    const double dy = p1.y - p0.y;
    return std::sqrt(dx * dx + dy * dy);
  }
};

// RECIST measurement: the lesion's long and short diameters as two segments
// in pixel coordinates. This is the weak-supervision input.
struct RecistAnnotation {
  LineSegment long_axis;
  LineSegment short_axis;

  void validate(int width, int height) const {
    for (const auto& p :
         {long_axis.p0, long_axis.p1, short_axis.p0, short_axis.p1})
      if (p.x < 0 || p.x >= width || p.y < 0 || p.y >= height)
        throw Error("RECIST endpoint outside image bounds");
    if (long_axis.p0 == long_axis.p1 || short_axis.p0 == short_axis.p1)
      throw Error("RECIST axis degenerates to a single point");
    if (long_axis.length() < short_axis.length())
      throw Error("RECIST long axis is shorter than the short axis");
    if (short_axis.length() < 1.0)
      throw Error("RECIST short axis is shorter than one pixel");
  }
};

// Bresenham rasterization, all octants.
inline std::vector<PixelCoord> rasterize_segment(const LineSegment& seg) {
  std::vector<PixelCoord> out;
  int x = seg.p0.x, y = seg.p0.y;
  const int dx = std::abs(seg.p1.x - x), dy = -std::abs(seg.p1.y - y);
  const int sx = x < seg.p1.x ? 1 : -1, sy = y < seg.p1.y ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    out.push_back({x, y});
    if (x == seg.p1.x && y == seg.p1.y) break;
    const int e2 = 2 * err;
    if (e2 >= dy) { err += dy; x += sx; }
    if (e2 <= dx) { err += dx; y += sy; }
  }
  return out;
}

// Rasterizes both RECIST axes, dilates them by `band` into the sure
// foreground, and marks an image border frame of width `frame` as sure
// background. Everything else stays undecided.
inline SeedLabels seeds_from_recist(const RecistAnnotation& annotation,
                                    int width, int height, int band = 1,
                                    int frame = 0) {
  annotation.validate(width, height);
  if (band < 0) throw Error("seeds_from_recist: band must be >= 0");
  if (frame == 0) frame = std::max(1, int(std::lround(0.03 * std::min(width, height))));
  if (frame < 1) throw Error("seeds_from_recist: frame must be >= 1");

  BinaryMask axes(width, height);
  for (const auto& seg : {annotation.long_axis, annotation.short_axis})
    for (const auto& p : rasterize_segment(seg)) axes.at(p.x, p.y) = 1;
  if (band >= 1)
    axes = dilate(axes, {StructuringElement::Shape::Disk, band});

  SeedLabels seeds(width, height, SeedLabel::Undecided);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const bool in_frame =
          x < frame || y < frame || x >= width - frame || y >= height - frame;
      if (axes.at(x, y)) {
        if (in_frame)
          throw Error("RECIST foreground intersects the background frame");
        seeds.at(x, y) = SeedLabel::SureForeground;
      } else if (in_frame) {
        seeds.at(x, y) = SeedLabel::SureBackground;
      }
    }
  return seeds;
}

struct GrabCutParams {
  int components = 5;      // GMM components per class
  double gamma = 50.0;     // smoothness weight
  int iterations = 5;
  std::uint64_t seed = 0;
};

struct GrabCutResult {
  BinaryMask mask;
  // Energy after each iteration's min-cut; non-increasing by construction.
  std::vector<double> energies;
  GmmModel foreground_model;
  GmmModel background_model;
  double beta = 0.0;
};

namespace detail {

inline double grabcut_beta(const GrayImage& img) {
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      if (x + 1 < img.width()) {
        const double d = img.at(x, y) - img.at(x + 1, y);
        sum += d * d;
        ++count;
      }
      if (y + 1 < img.height()) {
        const double d = img.at(x, y) - img.at(x, y + 1);
        sum += d * d;
        ++count;
      }
    }
  const double mean = count ? sum / double(count) : 0.0;
  return mean > 0.0 ? 1.0 / (2.0 * mean) : 0.0;
}

}  // namespace detail

// Iterative graph-cut segmentation: alternates GMM appearance fitting on the
// current partition with an exact min-cut of the data + contrast-sensitive
// smoothness energy. Seed pixels never change sides. Undecided pixels start
// on the foreground side for the first model fit.
inline GrabCutResult grabcut_segment(const GrayImage& img,
                                     const SeedLabels& seeds,
                                     const GrabCutParams& params = {}) {
  check_same_dims(img, seeds, "grabcut_segment");
  if (params.components < 1) throw Error("grabcut_segment: components must be >= 1");
  if (params.iterations < 1) throw Error("grabcut_segment: iterations must be >= 1");
  std::size_t n_fg = 0, n_bg = 0;
  for (auto s : seeds.data()) {
    n_fg += (s == SeedLabel::SureForeground);
    n_bg += (s == SeedLabel::SureBackground);
  }
  if (n_fg == 0 || n_bg == 0)
    throw Error("grabcut_segment: seeds need at least one sure foreground "
                "and one sure background pixel");

  const int w = img.width(), h = img.height();
  const std::size_t n = img.size();
  const double beta = detail::grabcut_beta(img);

  std::vector<std::uint8_t> fg(n);
  for (std::size_t i = 0; i < n; ++i)
    fg[i] = seeds.data()[i] != SeedLabel::SureBackground;

  GmmModel fg_model, bg_model;
  std::vector<double> energies;
  std::vector<double> fg_samples, bg_samples;

  for (int iter = 0; iter < params.iterations; ++iter) {
    fg_samples.clear();
    bg_samples.clear();
    for (std::size_t i = 0; i < n; ++i)
      (fg[i] ? fg_samples : bg_samples).push_back(img.data()[i]);

    constexpr int kEmBudget = 40;  // EM cap for the inner fits
    if (iter == 0) {
      fg_model = fit_gmm(fg_samples, params.components, params.seed * 2 + 1,
                         kEmBudget);
      bg_model = fit_gmm(bg_samples, params.components, params.seed * 2 + 2,
                         kEmBudget);
    } else {
      // Warm-started EM keeps the data term non-increasing on the same
      // partition, which makes the total energy monotone.
      em_refine(fg_model, fg_samples, kEmBudget);
      em_refine(bg_model, bg_samples, kEmBudget);
    }

    std::vector<double> d_fg(n), d_bg(n);
    double finite_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d_fg[i] = -fg_model.log_density(img.data()[i]);
      d_bg[i] = -bg_model.log_density(img.data()[i]);
      finite_total += std::abs(d_fg[i]) + std::abs(d_bg[i]);
    }

    // n-links first so their total feeds the effective infinity.
    std::vector<std::pair<std::pair<int, int>, double>> nlinks;
    nlinks.reserve(2 * n);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int i = y * w + x;
        if (x + 1 < w) {
          const double d = img.data()[i] - img.data()[i + 1];
          nlinks.push_back({{i, i + 1}, params.gamma * std::exp(-beta * d * d)});
        }
        if (y + 1 < h) {
          const double d = img.data()[i] - img.data()[i + w];
          nlinks.push_back({{i, i + w}, params.gamma * std::exp(-beta * d * d)});
        }
      }
    for (const auto& [pq, wgt] : nlinks) finite_total += 2.0 * wgt;
    const double huge = finite_total + 1.0;

    const int source = static_cast<int>(n);
    const int sink = static_cast<int>(n) + 1;
    FlowNetwork net(static_cast<int>(n) + 2, source, sink);
    for (std::size_t i = 0; i < n; ++i) {
      const SeedLabel s = seeds.data()[i];
      if (s == SeedLabel::SureForeground) {
        net.add_edge(source, static_cast<int>(i), huge);
      } else if (s == SeedLabel::SureBackground) {
        net.add_edge(static_cast<int>(i), sink, huge);
      } else {
        // Cutting s->i assigns i to the background, so it carries the
        // background data cost; symmetrically for i->t. Data terms can be
        // negative (densities above 1), so both links are shifted by a
        // per-pixel constant, which leaves the minimizer unchanged.
        const double shift = std::max(0.0, -std::min(d_bg[i], d_fg[i]));
        if (d_bg[i] + shift > 0.0)
          net.add_edge(source, static_cast<int>(i), d_bg[i] + shift);
        if (d_fg[i] + shift > 0.0)
          net.add_edge(static_cast<int>(i), sink, d_fg[i] + shift);
      }
    }
    for (const auto& [pq, wgt] : nlinks)
      net.add_edge(pq.first, pq.second, wgt, wgt);

    const MaxFlowResult cut = max_flow(net);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t side = cut.source_side[i];
      if (side != fg[i]) changed = true;
      fg[i] = side;
    }

    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) energy += fg[i] ? d_fg[i] : d_bg[i];
    for (const auto& [pq, wgt] : nlinks)
      if (fg[pq.first] != fg[pq.second]) energy += wgt;
    if (!energies.empty() &&
        energy > energies.back() + 1e-6 * (1.0 + std::abs(energies.back())))
      throw Error("grabcut_segment: energy increased across an iteration");
    energies.push_back(energy);

    if (!changed) break;
  }

  BinaryMask mask(w, h);
  for (std::size_t i = 0; i < n; ++i) mask.data()[i] = fg[i];
  return {std::move(mask), std::move(energies), std::move(fg_model),
          std::move(bg_model), beta};
}

}  // namespace softseg
