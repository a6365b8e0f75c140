#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "softseg/error.hpp"
#include "softseg/image.hpp"

namespace softseg {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  // Both masks empty: overlap metrics are 1 by convention and callers flag it.
  bool both_empty() const { return tp + fp + fn == 0; }
};

inline ConfusionCounts confusion(const BinaryMask& pred,
                                 const BinaryMask& gt) {
  check_same_dims(pred, gt, "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.data()[i] != 0;
    const bool g = gt.data()[i] != 0;
    if (p && g) ++c.tp;
    else if (p && !g) ++c.fp;
    else if (!p && g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double dice(const ConfusionCounts& c) {
  if (c.both_empty()) return 1.0;
  return 2.0 * double(c.tp) / double(2 * c.tp + c.fp + c.fn);
}

inline double iou(const ConfusionCounts& c) {
  if (c.both_empty()) return 1.0;
  return double(c.tp) / double(c.tp + c.fp + c.fn);
}

inline double acc(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error("acc: empty masks");
  return double(c.tp + c.tn) / double(c.total());
}

// Rank-based (Mann-Whitney) AUC with midrank tie correction; equals the area
// under the ROC curve swept over all thresholds.
inline double auc(const SoftMask& scores, const BinaryMask& gt) {
  check_same_dims(scores, gt, "auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores.data()[a] < scores.data()[b];
  });

  std::uint64_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) positives += (gt.data()[i] != 0);
  const std::uint64_t negatives = n - positives;
  if (positives == 0 || negatives == 0)
    throw Error("auc: ground truth must contain both classes");

  // Midranks over tied score groups.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores.data()[order[j]] == scores.data()[order[i]]) ++j;
    const double midrank = 0.5 * double(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k)
      if (gt.data()[order[k]] != 0) positive_rank_sum += midrank;
    i = j;
  }
  const double u = positive_rank_sum -
                   double(positives) * double(positives + 1) / 2.0;
  return u / (double(positives) * double(negatives));
}

// Mean-Dice matrix between named mask sets aligned over the same case list.
struct NamedMaskSet {
  std::string name;
  std::vector<BinaryMask> masks;
};

struct DiceMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> mean_dice;  // symmetric, unit diagonal

  std::string to_csv() const {
    std::string out = "name";
    for (const auto& n : names) out += "," + n;
    out += "\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
      out += names[i];
      for (std::size_t j = 0; j < names.size(); ++j)
        out += "," + std::to_string(mean_dice[i][j]);
      out += "\n";
    }
    return out;
  }
};

inline DiceMatrix pairwise_dice(const std::vector<NamedMaskSet>& sets) {
  if (sets.empty()) throw Error("pairwise_dice: no mask sets");
  const std::size_t cases = sets.front().masks.size();
  if (cases == 0) throw Error("pairwise_dice: empty case list");
  for (const auto& s : sets) {
    if (s.masks.size() != cases)
      throw Error("pairwise_dice: case lists are misaligned (" + s.name + ")");
    for (std::size_t c = 0; c < cases; ++c)
      check_same_dims(sets.front().masks[c], s.masks[c], "pairwise_dice");
  }

  DiceMatrix out;
  for (const auto& s : sets) out.names.push_back(s.name);
  out.mean_dice.assign(sets.size(), std::vector<double>(sets.size(), 1.0));
  for (std::size_t a = 0; a < sets.size(); ++a)
    for (std::size_t b = a + 1; b < sets.size(); ++b) {
      double sum = 0.0;
      for (std::size_t c = 0; c < cases; ++c)
        sum += dice(confusion(sets[a].masks[c], sets[b].masks[c]));
      const double mean = sum / double(cases);
      out.mean_dice[a][b] = mean;
      out.mean_dice[b][a] = mean;
    }
  return out;
}

}  // namespace softseg
