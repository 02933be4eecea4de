// SPDX-License-Identifier: Apache-2.0

#include "ien/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ien {

void EvalSet::validate() const {
  if (probs.size() != labels.size()) {
    throw ShapeError("eval set: " + std::to_string(probs.size()) +
                     " probability rows vs " + std::to_string(labels.size()) +
                     " labels");
  }
  if (probs.empty()) throw UsageError("eval set: empty");
  const std::size_t nc = probs[0].size();
  if (nc < 2) throw UsageError("eval set: need background plus >= 1 action class");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i].size() != nc) {
      throw ShapeError("eval set: ragged probability row at frame " +
                       std::to_string(i));
    }
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= nc) {
      throw UsageError("eval set: label " + std::to_string(labels[i]) +
                       " out of range at frame " + std::to_string(i));
    }
  }
}

std::vector<std::size_t> rank_frames(const EvalSet& eval, int k) {
  if (k < 0 || static_cast<std::size_t>(k) >= eval.num_classes()) {
    throw UsageError("rank_frames: class " + std::to_string(k) + " out of range");
  }
  std::vector<std::size_t> idx(eval.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t ck = static_cast<std::size_t>(k);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return eval.probs[a][ck] > eval.probs[b][ck];
  });
  return idx;
}

std::optional<double> average_precision(const std::vector<bool>& ranked_positives) {
  std::size_t tp = 0;
  double sum = 0.0;
  for (std::size_t n = 0; n < ranked_positives.size(); ++n) {
    if (ranked_positives[n]) {
      ++tp;
      const double fp = static_cast<double>(n + 1 - tp);
      sum += static_cast<double>(tp) / (static_cast<double>(tp) + fp);
    }
  }
  if (tp == 0) return std::nullopt;
  return sum / static_cast<double>(tp);
}

std::optional<double> calibrated_average_precision(
    const std::vector<bool>& ranked_positives, double w) {
  if (!(w > 0.0)) throw UsageError("calibrated AP: w must be positive");
  std::size_t tp = 0;
  double sum = 0.0;
  for (std::size_t n = 0; n < ranked_positives.size(); ++n) {
    if (ranked_positives[n]) {
      ++tp;
      const double fp = static_cast<double>(n + 1 - tp);
      sum += static_cast<double>(tp) / (static_cast<double>(tp) + fp / w);
    }
  }
  if (tp == 0) return std::nullopt;
  return sum / static_cast<double>(tp);
}

namespace {

// Shared driver for mAP/mcAP; `calibrated` switches the per-class scorer.
ApResult mean_over_classes(const EvalSet& eval, bool calibrated) {
  eval.validate();
  ApResult result;
  const std::size_t nc = eval.num_classes();
  double total = 0.0;
  for (int k = 1; k < static_cast<int>(nc); ++k) {
    const std::vector<std::size_t> order = rank_frames(eval, k);
    std::vector<bool> flags(order.size());
    std::size_t positives = 0;
    for (std::size_t n = 0; n < order.size(); ++n) {
      flags[n] = eval.labels[order[n]] == k;
      if (flags[n]) ++positives;
    }
    std::optional<double> ap;
    if (calibrated && positives > 0) {
      const std::size_t negatives = order.size() - positives;
      if (negatives == 0) {
        // No false positive at any cut-off, so calibration is moot.
        ap = 1.0;
      } else {
        const double w = static_cast<double>(negatives) /
                         static_cast<double>(positives);
        ap = calibrated_average_precision(flags, w);
      }
    } else {
      ap = average_precision(flags);
    }
    if (ap.has_value()) {
      result.per_class[k] = *ap;
      total += *ap;
    } else {
      result.skipped_classes.push_back(k);
    }
  }
  if (result.per_class.empty()) {
    throw UsageError("metric undefined: no action class has positive frames");
  }
  result.mean = total / static_cast<double>(result.per_class.size());
  return result;
}

}  // namespace

ApResult mean_average_precision(const EvalSet& eval) {
  return mean_over_classes(eval, false);
}

ApResult mean_calibrated_ap(const EvalSet& eval) {
  return mean_over_classes(eval, true);
}

EvalSet read_eval_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  EvalSet eval;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) continue;  // header
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() < 4) {
      throw FormatError("timeline CSV line " + std::to_string(lineno) +
                        ": expected chunk_index,label,p_0..p_K");
    }
    try {
      eval.labels.push_back(std::stoi(fields[1]));
      Vec p;
      for (std::size_t i = 2; i < fields.size(); ++i) {
        p.push_back(std::stod(fields[i]));
      }
      eval.probs.push_back(std::move(p));
    } catch (const std::exception&) {
      throw FormatError("timeline CSV line " + std::to_string(lineno) +
                        ": unparsable number");
    }
  }
  eval.validate();
  return eval;
}

}  // namespace ien
