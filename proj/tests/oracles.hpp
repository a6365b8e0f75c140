// Test-only reference implementations, independent of the library's
// computation paths: dense formula evaluation, exhaustive enumeration and
// quadrature-style checks.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "softseg/image.hpp"
#include "softseg/max_flow.hpp"

namespace oracles {

using Dense = std::vector<std::vector<double>>;

// Dense matting Laplacian by direct evaluation: loop over all fully-interior
// windows, accumulate delta_ij - (1/|w|)(1 + (Ii-mu)(Ij-mu)/(var + eps/|w|))
// for every ordered pixel pair of the window. Two-pass mean/variance.
inline Dense dense_matting_laplacian(const softseg::GrayImage& img, int radius,
                                     double eps) {
  const int w = img.width(), h = img.height();
  const int n = w * h;
  Dense L(n, std::vector<double>(n, 0.0));
  const int span = 2 * radius + 1;
  const int count = span * span;

  for (int cy = radius; cy < h - radius; ++cy)
    for (int cx = radius; cx < w - radius; ++cx) {
      std::vector<int> idx;
      std::vector<double> vals;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          idx.push_back((cy + dy) * w + (cx + dx));
          vals.push_back(img.at(cx + dx, cy + dy));
        }
      double mu = 0.0;
      for (double v : vals) mu += v;
      mu /= count;
      double var = 0.0;
      for (double v : vals) var += (v - mu) * (v - mu);
      var /= count;
      const double denom = var + eps / count;
      for (int a = 0; a < count; ++a)
        for (int b = 0; b < count; ++b)
          L[idx[a]][idx[b]] += (a == b ? 1.0 : 0.0) -
                               (1.0 + (vals[a] - mu) * (vals[b] - mu) / denom) /
                                   count;
    }
  return L;
}

// Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(Dense a, std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    const double p = a[col][col];
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r][col] / p;
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

// Minimum s-t cut by enumerating every subset of non-terminal nodes.
inline double brute_force_min_cut(const softseg::FlowNetwork& net) {
  std::vector<int> others;
  for (int v = 0; v < net.node_count; ++v)
    if (v != net.source && v != net.sink) others.push_back(v);

  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t bits = 0; bits < (1ull << others.size()); ++bits) {
    std::vector<char> in_s(net.node_count, 0);
    in_s[net.source] = 1;
    for (std::size_t i = 0; i < others.size(); ++i)
      in_s[others[i]] = (bits >> i) & 1;
    double cut = 0.0;
    for (const auto& e : net.edges) {
      if (in_s[e.from] && !in_s[e.to]) cut += e.capacity;
      if (in_s[e.to] && !in_s[e.from]) cut += e.reverse_capacity;
    }
    best = std::min(best, cut);
  }
  return best;
}

// Segmentation energy of a labeling under explicitly given unary terms and
// 4-neighbor contrast weights; own Gaussian-mixture arithmetic so the
// evaluation does not share the library's density code.
inline double gaussian_mixture_neglog(
    const std::vector<std::array<double, 3>>& comps, double v) {
  double p = 0.0;
  for (const auto& [weight, mean, variance] : comps)
    p += weight * std::exp(-(v - mean) * (v - mean) / (2.0 * variance)) /
         std::sqrt(2.0 * M_PI * variance);
  return -std::log(std::max(p, 1e-300));
}

inline double segmentation_energy(
    const softseg::GrayImage& img, const std::vector<std::uint8_t>& fg,
    const std::vector<std::array<double, 3>>& fg_comps,
    const std::vector<std::array<double, 3>>& bg_comps, double gamma,
    double beta) {
  const int w = img.width(), h = img.height();
  double e = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i)
    e += gaussian_mixture_neglog(fg[i] ? fg_comps : bg_comps, img.data()[i]);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      if (x + 1 < w && fg[i] != fg[i + 1]) {
        const double d = img.data()[i] - img.data()[i + 1];
        e += gamma * std::exp(-beta * d * d);
      }
      if (y + 1 < h && fg[i] != fg[i + w]) {
        const double d = img.data()[i] - img.data()[i + w];
        e += gamma * std::exp(-beta * d * d);
      }
    }
  return e;
}

// Enumerates all seed-respecting labelings and returns the minimum energy.
inline double brute_force_min_energy(
    const softseg::GrayImage& img, const softseg::SeedLabels& seeds,
    const std::vector<std::array<double, 3>>& fg_comps,
    const std::vector<std::array<double, 3>>& bg_comps, double gamma,
    double beta) {
  std::vector<std::size_t> free_idx;
  std::vector<std::uint8_t> fg(img.size(), 0);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (seeds.data()[i] == softseg::SeedLabel::SureForeground) fg[i] = 1;
    else if (seeds.data()[i] == softseg::SeedLabel::Undecided)
      free_idx.push_back(i);
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t bits = 0; bits < (1ull << free_idx.size()); ++bits) {
    for (std::size_t k = 0; k < free_idx.size(); ++k)
      fg[free_idx[k]] = (bits >> k) & 1;
    best = std::min(best, segmentation_energy(img, fg, fg_comps, bg_comps,
                                              gamma, beta));
  }
  return best;
}

// Area under the ROC curve by sweeping every distinct threshold and
// integrating with the trapezoid rule.
inline double trapezoid_auc(const std::vector<double>& scores,
                            const std::vector<int>& labels) {
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  double pos = 0.0, neg = 0.0;
  for (int l : labels) (l ? pos : neg) += 1.0;

  // Points from (0,0) (threshold above max) to (1,1) (threshold below min).
  std::vector<std::pair<double, double>> points{{0.0, 0.0}};
  for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= *it) (labels[i] ? tp : fp) += 1.0;
    points.emplace_back(fp / neg, tp / pos);
  }
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    area += (points[i].first - points[i - 1].first) *
            (points[i].second + points[i - 1].second) / 2.0;
  return area;
}

// Central finite difference of a scalar function of one pixel.
inline double central_difference(const std::function<double(double)>& f,
                                 double x, double step = 1e-6) {
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

inline softseg::GrayImage random_image(int w, int h, std::mt19937_64& rng) {
  softseg::GrayImage img(w, h);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

inline softseg::BinaryMask random_mask(int w, int h, std::mt19937_64& rng,
                                       double p = 0.5) {
  softseg::BinaryMask m(w, h);
  std::bernoulli_distribution b(p);
  for (auto& v : m.data()) v = b(rng) ? 1 : 0;
  return m;
}

}  // namespace oracles
