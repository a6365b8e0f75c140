#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "softseg/error.hpp"
#include "softseg/image.hpp"

namespace softseg {

// ---------------------------------------------------------------------------
// Label-space operators

// Pixelwise max of a soft mask and a binary mask: keeps every detail the
// binary annotation asserts while smoothing its surroundings. Thresholding
// the result close to 1 recovers at least the original binary mask.
inline SoftMask soften_binary(const SoftMask& soft, const BinaryMask& binary) {
  check_same_dims(soft, binary, "soften_binary");
  SoftMask out(soft.width(), soft.height());
  for (std::size_t i = 0; i < soft.size(); ++i)
    out.data()[i] = binary.data()[i] ? 1.0 : soft.data()[i];
  return out;
}

inline BinaryMask binarize(const SoftMask& soft,
                           double threshold = 128.0 / 255.0) {
  BinaryMask out(soft.width(), soft.height());
  for (std::size_t i = 0; i < soft.size(); ++i)
    out.data()[i] = soft.data()[i] >= threshold ? 1 : 0;
  return out;
}

// Mask of pixels marked by at least ceil(fraction * rater count) raters.
inline BinaryMask consensus(const std::vector<BinaryMask>& masks,
                            double fraction) {
  if (masks.empty()) throw Error("consensus: no masks given");
  if (!(fraction > 0.0) || fraction > 1.0)
    throw Error("consensus: fraction must be in (0, 1]");
  for (const auto& m : masks) check_same_dims(masks.front(), m, "consensus");

  const int raters = static_cast<int>(masks.size());
  const int needed = std::max(
      1, static_cast<int>(std::ceil(fraction * raters - 1e-9)));
  BinaryMask out(masks.front().width(), masks.front().height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    int votes = 0;
    for (const auto& m : masks) votes += (m.data()[i] != 0);
    out.data()[i] = votes >= needed ? 1 : 0;
  }
  return out;
}

// Discrete distribution over a class set.
class LabelDistribution {
 public:
  explicit LabelDistribution(std::vector<double> probabilities)
      : p_(std::move(probabilities)) {
    if (p_.empty()) throw Error("label distribution needs at least one class");
    double sum = 0.0;
    for (double v : p_) {
      if (v < 0.0) throw Error("label distribution has a negative probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw Error("label distribution does not sum to 1");
  }

  static LabelDistribution uniform(std::size_t classes) {
    if (classes == 0) throw Error("label distribution needs at least one class");
    return LabelDistribution(std::vector<double>(classes, 1.0 / double(classes)));
  }

  std::size_t classes() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& probabilities() const { return p_; }

 private:
  std::vector<double> p_;
};

// q' = (1 - epsilon) * q + epsilon * u; the label-smoothing mix.
inline LabelDistribution mix_labels(const LabelDistribution& q,
                                    const LabelDistribution& u,
                                    double epsilon) {
  if (q.classes() != u.classes())
    throw Error("mix_labels: class sets differ");
  if (epsilon < 0.0 || epsilon > 1.0)
    throw Error("mix_labels: epsilon must be in [0, 1]");
  std::vector<double> mixed(q.classes());
  for (std::size_t i = 0; i < mixed.size(); ++i)
    mixed[i] = (1.0 - epsilon) * q[i] + epsilon * u[i];
  return LabelDistribution(std::move(mixed));
}

// Mixing partner defaults to the uniform distribution.
inline LabelDistribution mix_labels(const LabelDistribution& q,
                                    double epsilon) {
  return mix_labels(q, LabelDistribution::uniform(q.classes()), epsilon);
}

// ---------------------------------------------------------------------------
// Loss mathematics. The segmentor target and prediction live on the upscaled
// rW x rH grid; r is the amplification factor relative to the original image.

inline void check_upscaled_dims(const SoftMask& m, int r, int width,
                                int height, const char* what) {
  if (r < 1) throw Error(std::string(what) + ": upscale factor must be >= 1");
  if (m.width() != r * width || m.height() != r * height)
    throw Error(std::string(what) +
                ": mask dimensions do not match r*W x r*H");
}

inline double mse_loss(const SoftMask& pred, const SoftMask& target, int r,
                       int width, int height) {
  check_upscaled_dims(pred, r, width, height, "mse_loss");
  check_same_dims(pred, target, "mse_loss");
  const double norm = double(r) * r * width * height;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = target.data()[i] - pred.data()[i];
    sum += d * d;
  }
  return sum / norm;
}

inline Plane<double> grad_mse(const SoftMask& pred, const SoftMask& target,
                              int r, int width, int height) {
  check_upscaled_dims(pred, r, width, height, "grad_mse");
  check_same_dims(pred, target, "grad_mse");
  const double norm = double(r) * r * width * height;
  Plane<double> grad(pred.width(), pred.height());
  for (std::size_t i = 0; i < pred.size(); ++i)
    grad.data()[i] = -2.0 * (target.data()[i] - pred.data()[i]) / norm;
  return grad;
}

inline double l1_loss(const SoftMask& pred, const SoftMask& target) {
  check_same_dims(pred, target, "l1_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    sum += std::abs(pred.data()[i] - target.data()[i]);
  return sum / double(pred.size());
}

// Subgradient of the mean absolute error; 0 at ties for determinism.
inline Plane<double> grad_l1(const SoftMask& pred, const SoftMask& target) {
  check_same_dims(pred, target, "grad_l1");
  Plane<double> grad(pred.width(), pred.height());
  const double inv_n = 1.0 / double(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data()[i] - target.data()[i];
    grad.data()[i] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
  }
  return grad;
}

struct AdversarialLosses {
  double generator = 0.0;
  double discriminator = 0.0;
};

// Least-squares adversarial objective over per-pixel discriminator
// probabilities: the generator drives D(fake) toward 1, the discriminator
// drives D(real) toward 1 and D(fake) toward 0.
inline AdversarialLosses adversarial_losses(const SoftMask& d_on_fake,
                                            const SoftMask& d_on_real) {
  check_same_dims(d_on_fake, d_on_real, "adversarial_losses");
  for (const auto* m : {&d_on_fake, &d_on_real})
    for (double v : m->data())
      if (v < 0.0 || v > 1.0)
        throw Error("adversarial_losses: probabilities must lie in [0, 1]");

  double gen = 0.0, disc_real = 0.0, disc_fake = 0.0;
  for (std::size_t i = 0; i < d_on_fake.size(); ++i) {
    const double f = d_on_fake.data()[i];
    const double r = d_on_real.data()[i];
    gen += (f - 1.0) * (f - 1.0);
    disc_real += (r - 1.0) * (r - 1.0);
    disc_fake += f * f;
  }
  const double n = double(d_on_fake.size());
  return {gen / n, disc_real / n + disc_fake / n};
}

// Combined generator objective: adversarial term plus lambda-weighted L1.
inline double total_objective(double adv_generator, double l1,
                              double lambda = 100.0) {
  if (adv_generator < 0.0 || l1 < 0.0)
    throw Error("total_objective: loss components must be >= 0");
  return adv_generator + lambda * l1;
}

// Distillation combination alpha*L_soft + (1-alpha)*L_hard.
inline double distill_combine(double l_soft, double l_hard, double alpha) {
  if (l_soft < 0.0 || l_hard < 0.0)
    throw Error("distill_combine: losses must be >= 0");
  if (alpha < 0.0 || alpha > 1.0)
    throw Error("distill_combine: alpha must be in [0, 1]");
  return alpha * l_soft + (1.0 - alpha) * l_hard;
}

// Reported loss components. The MSE supervises the segmentor directly and is
// kept separate; total composes the generator-side objective.
struct LossBreakdown {
  double mse = 0.0;
  double l1 = 0.0;
  double adversarial = 0.0;
  double total = 0.0;
  double lambda = 100.0;
  int r = 1;
};

inline LossBreakdown compute_loss_breakdown(const SoftMask& pred,
                                            const SoftMask& target,
                                            const SoftMask& d_on_fake,
                                            const SoftMask& d_on_real,
                                            double lambda, int r, int width,
                                            int height) {
  LossBreakdown out;
  out.mse = mse_loss(pred, target, r, width, height);
  out.l1 = l1_loss(pred, target);
  out.adversarial = adversarial_losses(d_on_fake, d_on_real).generator;
  out.lambda = lambda;
  out.r = r;
  out.total = total_objective(out.adversarial, out.l1, lambda);
  return out;
}

}  // namespace softseg
