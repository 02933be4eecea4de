// SPDX-License-Identifier: Apache-2.0
//
// The full network: early embedding -> unrolled recurrent cell -> one
// shared classifier applied independently per timestep, with sequence
// cross-entropy loss, hand-derived backpropagation through time, an Adam
// training loop, and sliding-window streaming inference.

#ifndef IEN_NETWORK_HPP
#define IEN_NETWORK_HPP

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "ien/cells.hpp"
#include "ien/embedding.hpp"
#include "ien/numerics.hpp"

namespace ien {

struct IenConfig {
  std::size_t T_plus_1 = 8;  // window length in chunks
  std::size_t d_v = 2048;    // raw feature width
  std::size_t d_e = 512;     // embedding width
  std::size_t d_h = 512;     // hidden width
  std::size_t K = 0;         // action classes; background is class 0
  CellVariant cell_variant = CellVariant::Ieu;
  MergeMode merge_mode = MergeMode::Concat;

  std::size_t num_classes() const { return K + 1; }
  void validate() const;  // throws ConfigError
};

struct IenModel {
  IenConfig config;
  EmbeddingParams embed;
  CellParams cell;
  Parameter W_cls;  // (K+1) x d_h

  // Fixed order: embedding weight, cell weights, classifier weight.
  // Adam updates, gradient checks, and checkpoints all follow it.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

IenModel init_model(const IenConfig& config, std::uint64_t seed);

// One training window: T_plus_1 raw chunk features with per-chunk labels.
struct LabeledSegment {
  std::vector<Vec> feats;
  std::vector<int> labels;
};

// One probability row per chunk, each over K+1 classes.
using ProbSequence = std::vector<Vec>;

struct IenTrace {
  std::vector<EmbedTrace> embed_traces;
  std::vector<Vec> xs;  // embedded chunks; xs.back() is x_0
  Unrolled unrolled;
  ProbSequence probs;
};

// Embeds every chunk, fixes x_0 to the last embedding, unrolls the cell,
// and applies softmax(W_cls . h_t) at each timestep.
ProbSequence ien_forward(const IenModel& model, const std::vector<Vec>& feats,
                         IenTrace* trace = nullptr);

// Unnormalized sum of per-chunk cross-entropies over the window.
double ien_loss(const ProbSequence& probs, const std::vector<int>& labels);

// Accumulates gradients for every parameter into Parameter::grad.
void ien_backward(IenModel& model, const IenTrace& trace,
                  const std::vector<int>& labels);

struct TrainOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
};

// Mini-batch Adam over shuffled segments; batch gradients are averaged.
// Deterministic under the seed: fixed shuffle and accumulation order.
// Returns the mean per-segment loss of each epoch.
std::vector<double> train(IenModel& model, const std::vector<LabeledSegment>& data,
                          const TrainOptions& opts);

// Probability row of the window's last chunk (the current action).
Vec predict_current(const IenModel& model, const std::vector<Vec>& feats);

// Streaming inference session: keeps the last T_plus_1 raw features,
// zero-padding the prefix until the window fills, and emits exactly one
// probability row per pushed chunk.
class StreamSession {
 public:
  explicit StreamSession(const IenModel& model);

  Vec push(const Vec& feat);

 private:
  const IenModel* model_;
  std::deque<Vec> window_;
};

// Checkpoint I/O. Layout (little-endian): magic "IENM", u32 version,
// u32 T_plus_1, d_v, d_e, d_h, K, cell_variant, merge_mode, then each
// parameter in parameters() order as u32 rows, u32 cols, rows*cols f64.
void save_model(const std::string& path, const IenModel& model);
IenModel load_model(const std::string& path);

}  // namespace ien

#endif  // IEN_NETWORK_HPP
