#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "softseg/grabcut.hpp"
#include "softseg/image.hpp"

namespace softseg {

// Synthetic elliptical lesion with analytic ground truth, so every pipeline
// property can be checked without external data.
struct PhantomSpec {
  int width = 64;
  int height = 64;
  double center_x = 32.0;
  double center_y = 32.0;
  double radius_x = 20.0;  // semi-axes in pixels
  double radius_y = 20.0;
  double fg_intensity = 0.8;
  double bg_intensity = 0.2;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
};

struct Phantom {
  GrayImage image;
  BinaryMask truth;
  RecistAnnotation recist;
};

inline Phantom make_phantom(const PhantomSpec& spec) {
  if (spec.radius_x < 1.0 || spec.radius_y < 1.0)
    throw Error("make_phantom: radii must be >= 1 pixel");
  GrayImage image(spec.width, spec.height);
  BinaryMask truth(spec.width, spec.height);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);

  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      const double nx = (x - spec.center_x) / spec.radius_x;
      const double ny = (y - spec.center_y) / spec.radius_y;
      const bool inside = nx * nx + ny * ny <= 1.0;
      truth.at(x, y) = inside ? 1 : 0;
      double v = inside ? spec.fg_intensity : spec.bg_intensity;
      if (spec.noise_sigma > 0.0) v += noise(rng);
      image.at(x, y) = std::clamp(v, 0.0, 1.0);
    }

  const auto px = [&](double x, double y) -> PixelCoord {
    return {static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y))};
  };
  LineSegment horizontal{px(spec.center_x - spec.radius_x + 1, spec.center_y),
                         px(spec.center_x + spec.radius_x - 1, spec.center_y)};
  LineSegment vertical{px(spec.center_x, spec.center_y - spec.radius_y + 1),
                       px(spec.center_x, spec.center_y + spec.radius_y - 1)};
  RecistAnnotation recist;
  if (spec.radius_x >= spec.radius_y) {
    recist.long_axis = horizontal;
    recist.short_axis = vertical;
  } else {
    recist.long_axis = vertical;
    recist.short_axis = horizontal;
  }
  return {std::move(image), std::move(truth), recist};
}

// Randomized phantom for batch generation: jittered center and radii drawn
// from a master seed. All draws stay well inside the image frame.
inline PhantomSpec random_phantom_spec(int width, int height,
                                       std::uint64_t seed,
                                       double noise_sigma = 0.05) {
  std::mt19937_64 rng(seed);
  PhantomSpec spec;
  spec.width = width;
  spec.height = height;
  const double max_r = 0.35 * std::min(width, height);
  const double min_r = std::max(4.0, 0.18 * std::min(width, height));
  std::uniform_real_distribution<double> radius(min_r, max_r);
  spec.radius_x = radius(rng);
  spec.radius_y = radius(rng);
  std::uniform_real_distribution<double> jitter(-0.05 * width, 0.05 * width);
  spec.center_x = width / 2.0 + jitter(rng);
  spec.center_y = height / 2.0 + jitter(rng);
  spec.noise_sigma = noise_sigma;
  spec.seed = seed;
  return spec;
}

}  // namespace softseg
