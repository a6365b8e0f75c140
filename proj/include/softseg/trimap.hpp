#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "softseg/error.hpp"
#include "softseg/grabcut.hpp"
#include "softseg/image.hpp"

namespace softseg {

struct TrimapParams {
  // Erosion/dilation radius is max(1, round(se_scale * sqrt(mask area))),
  // which keeps the unknown band proportionate across lesion sizes.
  double se_scale = 0.05;
  StructuringElement::Shape se_shape = StructuringElement::Shape::Disk;
};

inline int se_radius_for_area(std::size_t area, double se_scale) {
  return std::max(1, static_cast<int>(std::lround(se_scale * std::sqrt(double(area)))));
}

// Shared morphology step: erode the mask into the sure foreground, dilate it
// and take the complement as the sure background, leave the ring unknown.
inline Trimap trimap_from_mask(const BinaryMask& mask,
                               const TrimapParams& params = {}) {
  const std::size_t area = count_set(mask);
  if (area == 0) throw Error("trimap_from_mask: mask is empty");
  const StructuringElement se{params.se_shape,
                              se_radius_for_area(area, params.se_scale)};

  const BinaryMask fg = erode(mask, se);
  if (count_set(fg) == 0)
    throw Error("empty foreground after erosion; use a smaller se_scale");
  const BinaryMask reach = dilate(mask, se);
  if (count_set(reach) == mask.size())
    throw Error("no background seed: dilated mask covers the whole image");

  Trimap out(mask.width(), mask.height(), TrimapLabel::Unknown);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (fg.data()[i]) out.data()[i] = TrimapLabel::Foreground;
    else if (!reach.data()[i]) out.data()[i] = TrimapLabel::Background;
  }
  return out;
}

// Strategy 1: grabcut from RECIST seeds, then the morphology step.
inline Trimap trimap_from_recist(const GrayImage& img,
                                 const RecistAnnotation& annotation,
                                 const GrabCutParams& grabcut_params = {},
                                 const TrimapParams& trimap_params = {},
                                 int seed_band = 1, int border_frame = 0) {
  const SeedLabels seeds = seeds_from_recist(annotation, img.width(),
                                             img.height(), seed_band,
                                             border_frame);
  const GrabCutResult cut = grabcut_segment(img, seeds, grabcut_params);
  if (count_set(cut.mask) == 0)
    throw Error("trimap_from_recist: grabcut produced an empty foreground");
  return trimap_from_mask(cut.mask, trimap_params);
}

// Strategy 2: inconsistent masks from several raters. The intersection is
// foreground, the complement of the union is background, the rest unknown.
// fg_min_votes = 0 keeps the strict intersection; smaller thresholds widen
// the foreground to pixels with at least that many votes.
inline Trimap trimap_from_multirater(const std::vector<BinaryMask>& masks,
                                     int fg_min_votes = 0) {
  if (masks.size() < 2)
    throw Error("trimap_from_multirater: need at least two rater masks");
  for (const auto& m : masks)
    check_same_dims(masks.front(), m, "trimap_from_multirater");
  const int raters = static_cast<int>(masks.size());
  if (fg_min_votes == 0) fg_min_votes = raters;
  if (fg_min_votes < 1 || fg_min_votes > raters)
    throw Error("trimap_from_multirater: vote threshold out of range");

  Trimap out(masks.front().width(), masks.front().height());
  bool any_fg = false;
  for (std::size_t i = 0; i < out.size(); ++i) {
    int votes = 0;
    for (const auto& m : masks) votes += (m.data()[i] != 0);
    if (votes >= fg_min_votes) {
      out.data()[i] = TrimapLabel::Foreground;
      any_fg = true;
    } else if (votes == 0) {
      out.data()[i] = TrimapLabel::Background;
    } else {
      out.data()[i] = TrimapLabel::Unknown;
    }
  }
  if (!any_fg)
    throw Error("trimap_from_multirater: raters share no common foreground");
  return out;
}

// Strategy 3: a single binary mask, eroded and dilated by an area-scaled
// structuring element.
inline Trimap trimap_from_binary(const BinaryMask& mask,
                                 const TrimapParams& params = {}) {
  return trimap_from_mask(mask, params);
}

}  // namespace softseg
