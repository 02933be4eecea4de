// SPDX-License-Identifier: Apache-2.0
//
// Forward-only throughput measurement of the recurrent core. Counts
// cell steps (one per chunk) per second for the plain LSTM and the IEU
// at matching widths, excluding embedding and file I/O.

#ifndef IEN_BENCH_HPP
#define IEN_BENCH_HPP

#include <cstdint>

#include "ien/cells.hpp"

namespace ien {

struct BenchConfig {
  std::size_t d_e = 512;
  std::size_t d_h = 512;
  std::size_t window = 8;     // steps per simulated video segment
  double seconds = 10.0;      // measured steady-state duration per unit
  double warmup_seconds = 1.0;
  bool use_f32 = false;       // 64-bit is the default precision
  std::uint64_t seed = 1;
};

struct BenchUnitResult {
  double chunks_per_sec = 0.0;
  std::size_t chunks = 0;
  double seconds = 0.0;
};

struct BenchResult {
  BenchUnitResult lstm_plain;
  BenchUnitResult ieu;
  double rel_delta = 0.0;  // (ieu - lstm_plain) / lstm_plain
};

BenchUnitResult bench_cell_forward(CellVariant variant, const BenchConfig& config);
BenchResult run_forward_bench(const BenchConfig& config);

}  // namespace ien

#endif  // IEN_BENCH_HPP
