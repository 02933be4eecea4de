// SPDX-License-Identifier: Apache-2.0
//
// Per-frame ranking metrics: average precision per class with
// deterministic tie-breaking, its mean over action classes (mAP), and the
// calibrated variants (cAP/mcAP) that weight false positives by the
// negative-to-positive ratio of each class.

#ifndef IEN_METRICS_HPP
#define IEN_METRICS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ien/numerics.hpp"

namespace ien {

// Per-frame predicted probabilities over K+1 classes plus ground truth.
struct EvalSet {
  std::vector<Vec> probs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t num_classes() const { return probs.empty() ? 0 : probs[0].size(); }
  void validate() const;  // throws UsageError / ShapeError
};

struct ApResult {
  std::map<int, double> per_class;   // class -> AP, defined classes only
  double mean = 0.0;                 // over defined (non-skipped) classes
  std::vector<int> skipped_classes;  // classes with zero positive frames
};

// Frame indices sorted by descending probability for class k; ties keep
// ascending frame order.
std::vector<std::size_t> rank_frames(const EvalSet& eval, int k);

// AP over a ranked list of positivity flags: sum of precision at each
// positive cut-off divided by the positive count. nullopt when the list
// has no positives (undefined for that class).
std::optional<double> average_precision(const std::vector<bool>& ranked_positives);

// Calibrated AP with cPrec(i) = TP(i) / (TP(i) + FP(i)/w); w = 1 reduces
// to plain AP bit-for-bit.
std::optional<double> calibrated_average_precision(
    const std::vector<bool>& ranked_positives, double w);

// Means over action classes 1..K; background (class 0) is excluded.
ApResult mean_average_precision(const EvalSet& eval);

// Per class, w = (negative frames) / (positive frames) over the set.
ApResult mean_calibrated_ap(const EvalSet& eval);

// Reads the probability-timeline CSV written by `ien eval`
// (chunk_index,label,p_0..p_K with a header row).
EvalSet read_eval_csv(const std::string& path);

}  // namespace ien

#endif  // IEN_METRICS_HPP
