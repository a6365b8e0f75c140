#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "softseg/error.hpp"

namespace softseg {

inline constexpr double kGmmVarianceFloor = 1e-6;
inline constexpr double kGmmConvergenceTol = 1e-6;
inline constexpr int kGmmMaxIterations = 300;

struct GmmComponent {
  double weight = 0.0;
  double mean = 0.0;
  double variance = kGmmVarianceFloor;
};

// 1-D Gaussian mixture over pixel intensities.
struct GmmModel {
  std::vector<GmmComponent> components;

  // log sum_k w_k N(v; mu_k, var_k), evaluated with log-sum-exp.
  double log_density(double v) const {
    double best = -std::numeric_limits<double>::infinity();
    thread_local std::vector<double> terms;
    terms.clear();
    for (const auto& c : components) {
      if (c.weight <= 0.0) continue;
      const double d = v - c.mean;
      const double t = std::log(c.weight) -
                       0.5 * std::log(2.0 * M_PI * c.variance) -
                       d * d / (2.0 * c.variance);
      terms.push_back(t);
      best = std::max(best, t);
    }
    if (terms.empty() || !std::isfinite(best)) return -745.0;  // ~log(DBL_MIN)
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - best);
    return best + std::log(sum);
  }

  double density(double v) const { return std::exp(log_density(v)); }
};

namespace detail {

inline std::size_t count_distinct(std::span<const double> samples) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return std::unique(sorted.begin(), sorted.end()) - sorted.begin();
}

// k-means++ seeding: first center uniform, the rest proportional to the
// squared distance to the nearest chosen center.
inline std::vector<double> kmeanspp_centers(std::span<const double> samples,
                                            int k, std::mt19937_64& rng) {
  std::vector<double> centers;
  centers.reserve(k);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  centers.push_back(samples[pick(rng)]);

  std::vector<double> d2(samples.size());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) {
        const double d = samples[i] - c;
        best = std::min(best, d * d);
      }
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      centers.push_back(samples[pick(rng)]);
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    std::size_t chosen = samples.size() - 1;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      target -= d2[i];
      if (target <= 0.0) { chosen = i; break; }
    }
    centers.push_back(samples[chosen]);
  }
  return centers;
}

}  // namespace detail

// One EM pass followed by convergence iterations; returns the mean
// log-likelihood of the refined model. Monotone non-decreasing in the mean
// log-likelihood at every step, which grabcut relies on for its energy check.
inline double em_refine(GmmModel& model, std::span<const double> samples,
                        int max_iterations = kGmmMaxIterations,
                        double tol = kGmmConvergenceTol) {
  if (samples.empty()) throw Error("em_refine: no samples");
  const std::size_t n = samples.size();
  const int k = static_cast<int>(model.components.size());
  std::vector<double> resp(n * k);

  double prev_mean_ll = -std::numeric_limits<double>::infinity();
  double mean_ll = prev_mean_ll;
  for (int iter = 0; iter < max_iterations; ++iter) {
    // E-step.
    double total_ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const auto& comp = model.components[c];
        double t = -std::numeric_limits<double>::infinity();
        if (comp.weight > 0.0) {
          const double d = samples[i] - comp.mean;
          t = std::log(comp.weight) -
              0.5 * std::log(2.0 * M_PI * comp.variance) -
              d * d / (2.0 * comp.variance);
        }
        resp[i * k + c] = t;
        best = std::max(best, t);
      }
      double sum = 0.0;
      for (int c = 0; c < k; ++c) sum += std::exp(resp[i * k + c] - best);
      const double log_norm = best + std::log(sum);
      total_ll += log_norm;
      for (int c = 0; c < k; ++c)
        resp[i * k + c] = std::exp(resp[i * k + c] - log_norm);
    }
    mean_ll = total_ll / double(n);
    if (mean_ll - prev_mean_ll < tol && iter > 0) break;
    prev_mean_ll = mean_ll;

    // M-step, with the variance floor as the constrained maximizer.
    for (int c = 0; c < k; ++c) {
      double mass = 0.0, sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        mass += resp[i * k + c];
        sum += resp[i * k + c] * samples[i];
      }
      auto& comp = model.components[c];
      if (mass <= 1e-12 * double(n)) {
        comp.weight = 0.0;  // starved component; keep its location
        continue;
      }
      comp.weight = mass / double(n);
      comp.mean = sum / mass;
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = samples[i] - comp.mean;
        ss += resp[i * k + c] * d * d;
      }
      comp.variance = std::max(ss / mass, kGmmVarianceFloor);
    }
    double wsum = 0.0;
    for (const auto& comp : model.components) wsum += comp.weight;
    if (wsum <= 0.0) throw Error("em_refine: all components starved");
    for (auto& comp : model.components) comp.weight /= wsum;
  }
  return mean_ll;
}

// Fits a k-component 1-D GMM with k-means++ initialization and EM to
// convergence. Deterministic given (samples, k, seed). k is clamped to the
// number of distinct sample values. Callers with a time budget, like the
// grabcut inner loop, can lower the EM iteration cap.
inline GmmModel fit_gmm(std::span<const double> samples, int k,
                        std::uint64_t seed,
                        int max_iterations = kGmmMaxIterations,
                        double tol = kGmmConvergenceTol) {
  if (samples.empty()) throw Error("fit_gmm: no samples");
  if (k < 1) throw Error("fit_gmm: component count must be >= 1");
  k = static_cast<int>(
      std::min<std::size_t>(k, detail::count_distinct(samples)));

  std::mt19937_64 rng(seed);
  const auto centers = detail::kmeanspp_centers(samples, k, rng);

  // Hard-assign to the nearest center for the initial parameters.
  GmmModel model;
  model.components.resize(k);
  std::vector<double> mass(k, 0.0), sum(k, 0.0), ss(k, 0.0);
  for (double v : samples) {
    int best = 0;
    double bestd = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double d = (v - centers[c]) * (v - centers[c]);
      if (d < bestd) { bestd = d; best = c; }
    }
    mass[best] += 1.0;
    sum[best] += v;
  }
  for (int c = 0; c < k; ++c) {
    auto& comp = model.components[c];
    comp.weight = mass[c] / double(samples.size());
    comp.mean = mass[c] > 0.0 ? sum[c] / mass[c] : centers[c];
  }
  for (double v : samples) {
    int best = 0;
    double bestd = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double d = (v - centers[c]) * (v - centers[c]);
      if (d < bestd) { bestd = d; best = c; }
    }
    const double d = v - model.components[best].mean;
    ss[best] += d * d;
  }
  for (int c = 0; c < k; ++c)
    model.components[c].variance =
        std::max(mass[c] > 0.0 ? ss[c] / mass[c] : kGmmVarianceFloor,
                 kGmmVarianceFloor);

  em_refine(model, samples, max_iterations, tol);
  return model;
}

}  // namespace softseg
