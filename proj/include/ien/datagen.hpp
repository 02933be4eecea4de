// SPDX-License-Identifier: Apache-2.0
//
// Synthetic streaming-action generator and the binary feature-file
// format. Streams are built from episodes: each episode is either
// background or one action class, with class-conditional Gaussian
// features around fixed per-class prototypes. In `early_only` mode the
// class prototype appears only in the first quarter of an episode's
// chunks while every chunk keeps the class label, so the current action
// is recoverable only by retaining early evidence.

#ifndef IEN_DATAGEN_HPP
#define IEN_DATAGEN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ien/network.hpp"
#include "ien/numerics.hpp"

namespace ien {

enum class EvidenceMode { Persistent, EarlyOnly };

const char* to_string(EvidenceMode m);
EvidenceMode evidence_mode_from_string(const std::string& s);

struct StreamSpec {
  std::size_t K = 3;
  std::size_t d_v = 16;
  std::size_t stream_len = 0;
  std::size_t episode_len_min = 4;
  std::size_t episode_len_max = 8;
  double background_rate = 0.5;
  EvidenceMode evidence_mode = EvidenceMode::Persistent;
  double noise_sigma = 0.25;
  std::uint64_t seed = 0;

  // min_len lets callers require room for at least one inference window.
  void validate(std::size_t min_len = 1) const;  // throws UsageError
};

struct LabeledStream {
  std::size_t K = 0;
  std::vector<Vec> feats;   // each d_v wide; values are f32-representable
  std::vector<int> labels;  // in [0, K]

  std::size_t size() const { return labels.size(); }
  std::size_t d_v() const { return feats.empty() ? 0 : feats[0].size(); }
};

// Deterministic under spec.seed. Features are quantized through float so
// the on-disk 32-bit round trip is bit-exact.
LabeledStream generate_stream(const StreamSpec& spec);

// Same class prototypes as generate_stream(spec) but episodes drawn from
// an independent stream, so train/test splits share one task definition.
LabeledStream generate_stream_with_episodes(const StreamSpec& spec,
                                            std::uint64_t episode_seed);

// Sliding windows of stride 1: stream_len - T_plus_1 + 1 segments.
std::vector<LabeledSegment> segment_windows(const LabeledStream& stream,
                                            std::size_t T_plus_1);

// Feature file layout (little-endian): magic "IENF", u32 version,
// u32 stream_len, u32 d_v, u32 K, then per chunk a u32 label followed by
// d_v f32 values.
void write_features(const std::string& path, const LabeledStream& stream);
LabeledStream read_features(const std::string& path);

}  // namespace ien

#endif  // IEN_DATAGEN_HPP
