#pragma once
// Binarization, Dice overlap, voting ensembles and the exhaustive threshold
// grid search. All functions are pure; iteration orders are fixed so repeated
// evaluation is deterministic.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pfm/io.hpp"

namespace pfm {

struct BinaryMask {
  int rows = 0, cols = 0;
  std::vector<char> values;  // 0 or 1, row-major

  bool at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c] != 0; }
  std::size_t count() const {
    std::size_t n = 0;
    for (char v : values) n += (v != 0);
    return n;
  }
};

// Strict inequality: a value exactly at the threshold stays negative.
inline BinaryMask binarize(const FieldGrid& field, double thr) {
  if (!std::isfinite(thr)) throw std::invalid_argument("binarize: threshold must be finite");
  BinaryMask m;
  m.rows = field.rows;
  m.cols = field.cols;
  m.values.resize(field.values.size());
  for (std::size_t i = 0; i < field.values.size(); ++i)
    m.values[i] = field.values[i] > thr ? 1 : 0;
  return m;
}

// 2 |pred AND gt| / (|pred| + |gt|); two empty masks agree perfectly and
// score 1.
inline double dice(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.rows != gt.rows || pred.cols != gt.cols)
    throw std::invalid_argument("dice: shape mismatch");
  std::size_t inter = 0, total = 0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    inter += (pred.values[i] != 0 && gt.values[i] != 0);
    total += (pred.values[i] != 0) + (gt.values[i] != 0);
  }
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

// Pixel true iff strictly more than half of the masks are true; even-count
// ties resolve to false.
inline BinaryMask hard_vote(std::span<const BinaryMask> masks) {
  if (masks.empty()) throw std::invalid_argument("hard_vote: no masks");
  const BinaryMask& first = masks[0];
  for (const BinaryMask& m : masks)
    if (m.rows != first.rows || m.cols != first.cols)
      throw std::invalid_argument("hard_vote: shape mismatch");
  BinaryMask out;
  out.rows = first.rows;
  out.cols = first.cols;
  out.values.assign(first.values.size(), 0);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    std::size_t yes = 0;
    for (const BinaryMask& m : masks) yes += (m.values[i] != 0);
    out.values[i] = (2 * yes > masks.size()) ? 1 : 0;
  }
  return out;
}

// Pixelwise arithmetic mean of continuous fields.
inline FieldGrid soft_vote(std::span<const FieldGrid> fields) {
  if (fields.empty()) throw std::invalid_argument("soft_vote: no fields");
  const FieldGrid& first = fields[0];
  for (const FieldGrid& f : fields)
    if (f.rows != first.rows || f.cols != first.cols)
      throw std::invalid_argument("soft_vote: shape mismatch");
  FieldGrid out = FieldGrid::zeros(first.rows, first.cols);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    double s = 0.0;
    for (const FieldGrid& f : fields) s += f.values[i];
    out.values[i] = s / static_cast<double>(fields.size());
  }
  return out;
}

struct ThresholdPair {
  double thr_pred = 0.0;
  double thr_gt = 0.0;
};

struct ThresholdSearchResult {
  ThresholdPair thresholds;
  double mean_dice = 0.0;
};

inline std::vector<double> threshold_grid(double lo = 0.1, double hi = 0.6,
                                          double step = 0.05) {
  if (!(step > 0.0) || !(hi >= lo))
    throw std::invalid_argument("threshold_grid: bad range");
  const int n = static_cast<int>(std::llround((hi - lo) / step));
  std::vector<double> grid;
  grid.reserve(n + 1);
  for (int k = 0; k <= n; ++k) grid.push_back(lo + k * step);
  return grid;
}

// Exhaustive search over both thresholds for the pair maximizing the mean
// Dice; strict improvement with thr_gt as the outer loop keeps the smallest
// (thr_gt, thr_pred) among maximizers.
inline ThresholdSearchResult threshold_search(std::span<const FieldGrid> preds,
                                              std::span<const FieldGrid> gts,
                                              double step = 0.05, double lo = 0.1,
                                              double hi = 0.6) {
  if (preds.empty() || preds.size() != gts.size())
    throw std::invalid_argument("threshold_search: need equally many preds and gts");
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].rows != gts[i].rows || preds[i].cols != gts[i].cols)
      throw std::invalid_argument("threshold_search: shape mismatch in pair");
  const std::vector<double> grid = threshold_grid(lo, hi, step);
  ThresholdSearchResult best;
  best.mean_dice = -1.0;
  for (double tg : grid) {
    std::vector<BinaryMask> gt_masks;
    gt_masks.reserve(gts.size());
    for (const FieldGrid& g : gts) gt_masks.push_back(binarize(g, tg));
    for (double tp : grid) {
      double sum = 0.0;
      for (std::size_t i = 0; i < preds.size(); ++i)
        sum += dice(binarize(preds[i], tp), gt_masks[i]);
      const double mean = sum / static_cast<double>(preds.size());
      if (mean > best.mean_dice) {
        best.mean_dice = mean;
        best.thresholds = {tp, tg};
      }
    }
  }
  return best;
}

}  // namespace pfm
