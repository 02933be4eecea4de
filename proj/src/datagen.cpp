// SPDX-License-Identifier: Apache-2.0

#include "ien/datagen.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace ien {

const char* to_string(EvidenceMode m) {
  return m == EvidenceMode::Persistent ? "persistent" : "early_only";
}

EvidenceMode evidence_mode_from_string(const std::string& s) {
  if (s == "persistent") return EvidenceMode::Persistent;
  if (s == "early_only") return EvidenceMode::EarlyOnly;
  throw UsageError("unknown evidence mode '" + s +
                   "' (expected persistent|early_only)");
}

void StreamSpec::validate(std::size_t min_len) const {
  if (K < 1) throw UsageError("stream spec: need at least one action class");
  if (d_v < 1) throw UsageError("stream spec: d_v must be >= 1");
  if (stream_len < min_len) {
    throw UsageError("stream spec: stream length " + std::to_string(stream_len) +
                     " is shorter than the required minimum " +
                     std::to_string(min_len));
  }
  if (episode_len_min < 1 || episode_len_max < episode_len_min) {
    throw UsageError("stream spec: invalid episode length range");
  }
  if (background_rate < 0.0 || background_rate > 1.0) {
    throw UsageError("stream spec: background rate must lie in [0, 1]");
  }
  if (noise_sigma < 0.0) throw UsageError("stream spec: noise sigma must be >= 0");
}

namespace {

inline double through_f32(double v) {
  return static_cast<double>(static_cast<float>(v));
}

}  // namespace

LabeledStream generate_stream(const StreamSpec& spec) {
  return generate_stream_with_episodes(spec, spec.seed);
}

LabeledStream generate_stream_with_episodes(const StreamSpec& spec,
                                            std::uint64_t episode_seed) {
  spec.validate();

  // Prototype 0 is background; 1..K are the action classes. Prototypes
  // depend only on spec.seed and are quantized to float up front so
  // noiseless chunks equal them bitwise. Episode draws come from their
  // own offset-seeded stream so they stay decorrelated from the
  // prototype draws even when episode_seed == spec.seed.
  Rng proto_rng(spec.seed);
  std::vector<Vec> prototypes(spec.K + 1, Vec(spec.d_v));
  for (Vec& proto : prototypes) {
    for (double& v : proto) v = through_f32(proto_rng.normal());
  }
  Rng rng(episode_seed + 0x9E3779B97F4A7C15ULL);

  LabeledStream stream;
  stream.K = spec.K;
  stream.feats.reserve(spec.stream_len);
  stream.labels.reserve(spec.stream_len);

  while (stream.size() < spec.stream_len) {
    const std::size_t span = spec.episode_len_max - spec.episode_len_min + 1;
    std::size_t len = spec.episode_len_min + rng.index(span);
    len = std::min(len, spec.stream_len - stream.size());

    const bool background = rng.next_unit() < spec.background_rate;
    const int label = background ? 0 : 1 + static_cast<int>(rng.index(spec.K));

    // In early_only mode only the leading quarter of an action episode
    // carries the class prototype; later chunks look like background.
    std::size_t evidence = len;
    if (!background && spec.evidence_mode == EvidenceMode::EarlyOnly) {
      evidence = static_cast<std::size_t>(
          std::ceil(0.25 * static_cast<double>(len)));
    }

    for (std::size_t i = 0; i < len; ++i) {
      const Vec& proto = (i < evidence) ? prototypes[static_cast<std::size_t>(label)]
                                        : prototypes[0];
      Vec feat(spec.d_v);
      for (std::size_t j = 0; j < spec.d_v; ++j) {
        feat[j] = through_f32(proto[j] + spec.noise_sigma * rng.normal());
      }
      stream.feats.push_back(std::move(feat));
      stream.labels.push_back(label);
    }
  }
  return stream;
}

std::vector<LabeledSegment> segment_windows(const LabeledStream& stream,
                                            std::size_t T_plus_1) {
  if (T_plus_1 < 1) throw UsageError("segment_windows: window must be >= 1");
  if (stream.size() < T_plus_1) {
    throw UsageError("segment_windows: stream of " + std::to_string(stream.size()) +
                     " chunks is shorter than the window " +
                     std::to_string(T_plus_1));
  }
  std::vector<LabeledSegment> out;
  out.reserve(stream.size() - T_plus_1 + 1);
  for (std::size_t start = 0; start + T_plus_1 <= stream.size(); ++start) {
    LabeledSegment seg;
    seg.feats.assign(stream.feats.begin() + static_cast<std::ptrdiff_t>(start),
                     stream.feats.begin() + static_cast<std::ptrdiff_t>(start + T_plus_1));
    seg.labels.assign(stream.labels.begin() + static_cast<std::ptrdiff_t>(start),
                      stream.labels.begin() + static_cast<std::ptrdiff_t>(start + T_plus_1));
    out.push_back(std::move(seg));
  }
  return out;
}

namespace {

constexpr char kFeatureMagic[4] = {'I', 'E', 'N', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;

}  // namespace

void write_features(const std::string& path, const LabeledStream& stream) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  out.write(kFeatureMagic, 4);
  put_u32(kFeatureVersion);
  put_u32(static_cast<std::uint32_t>(stream.size()));
  put_u32(static_cast<std::uint32_t>(stream.d_v()));
  put_u32(static_cast<std::uint32_t>(stream.K));
  std::vector<float> row(stream.d_v());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    put_u32(static_cast<std::uint32_t>(stream.labels[t]));
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = static_cast<float>(stream.feats[t][j]);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

LabeledStream read_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  std::size_t offset = 0;
  auto need = [&](void* dst, std::size_t n, const char* what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
      throw FormatError(std::string("truncated feature file: expected ") + what +
                        " at byte offset " + std::to_string(offset));
    }
    offset += n;
  };
  auto need_u32 = [&](const char* what) {
    std::uint32_t v = 0;
    need(&v, 4, what);
    return v;
  };

  char magic[4];
  need(magic, 4, "magic");
  if (std::memcmp(magic, kFeatureMagic, 4) != 0) {
    throw FormatError("bad magic at byte offset 0: not a feature file");
  }
  const std::uint32_t version = need_u32("version");
  if (version != kFeatureVersion) {
    throw FormatError("unsupported feature file version " +
                      std::to_string(version) + " at byte offset 4");
  }
  const std::uint32_t stream_len = need_u32("stream length");
  const std::uint32_t d_v = need_u32("d_v");
  const std::uint32_t k = need_u32("K");
  if (d_v == 0) throw FormatError("feature file declares d_v = 0 at byte offset 12");

  LabeledStream stream;
  stream.K = k;
  stream.feats.reserve(stream_len);
  stream.labels.reserve(stream_len);
  std::vector<float> row(d_v);
  for (std::uint32_t t = 0; t < stream_len; ++t) {
    const std::size_t label_at = offset;
    const std::uint32_t label = need_u32("chunk label");
    if (label > k) {
      throw FormatError("label " + std::to_string(label) + " exceeds K=" +
                        std::to_string(k) + " at byte offset " +
                        std::to_string(label_at));
    }
    need(row.data(), row.size() * sizeof(float), "chunk features");
    Vec feat(d_v);
    for (std::size_t j = 0; j < feat.size(); ++j) {
      feat[j] = static_cast<double>(row[j]);
    }
    stream.feats.push_back(std::move(feat));
    stream.labels.push_back(static_cast<int>(label));
  }
  return stream;
}

}  // namespace ien
