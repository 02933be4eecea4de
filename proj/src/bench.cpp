// SPDX-License-Identifier: Apache-2.0

#include "ien/bench.hpp"

#include <chrono>
#include <cmath>

namespace ien {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Keeps the accumulated checksum observable so the step loop cannot be
// optimized away.
inline void keep(double& v) { asm volatile("" : "+m,r"(v) : : ); }

template <typename Scalar>
Matrix<Scalar> to_scalar(const Mat& m) {
  Matrix<Scalar> out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    out.data[i] = static_cast<Scalar>(m.data[i]);
  }
  return out;
}

template <typename Scalar>
BenchUnitResult bench_variant(CellVariant variant, const BenchConfig& config) {
  Rng rng(config.seed);
  CellParams params = init_cell(variant, MergeMode::Concat, config.d_h,
                                config.d_e, rng);

  Matrix<Scalar> W_f = to_scalar<Scalar>(params.W_f.value);
  Matrix<Scalar> W_e = to_scalar<Scalar>(params.W_e.value);
  Matrix<Scalar> W_r = to_scalar<Scalar>(params.W_r.value);
  Matrix<Scalar> W_cand = to_scalar<Scalar>(params.W_cand.value);
  Matrix<Scalar> W_i = to_scalar<Scalar>(params.W_i.value);
  Matrix<Scalar> W_o = to_scalar<Scalar>(params.W_o.value);
  CellWeightsView<Scalar> view{&W_f, &W_e, &W_r, &W_cand, &W_i, &W_o};

  // One simulated segment of embedded inputs; the last entry plays x_0.
  std::vector<std::vector<Scalar>> xs(config.window,
                                      std::vector<Scalar>(config.d_e));
  for (auto& x : xs) {
    for (Scalar& v : x) v = static_cast<Scalar>(rng.uniform(-1.0, 1.0));
  }

  std::vector<Scalar> h(config.d_h, Scalar(0)), C(config.d_h, Scalar(0));
  std::vector<Scalar> h_next, scratch;
  CellGates<Scalar> gates;
  double sink = 0.0;

  auto run_window = [&]() {
    std::fill(h.begin(), h.end(), Scalar(0));
    std::fill(C.begin(), C.end(), Scalar(0));
    for (const auto& x : xs) {
      cell_step(variant, MergeMode::Concat, view, h, C, x, xs.back(), gates,
                h_next, scratch);
      h.swap(h_next);
      C = gates.C;
    }
    sink += static_cast<double>(h[0]);
    keep(sink);
  };

  const auto warmup_start = Clock::now();
  do {
    run_window();
  } while (seconds_since(warmup_start) < config.warmup_seconds);

  BenchUnitResult result;
  const auto start = Clock::now();
  do {
    run_window();
    result.chunks += config.window;
  } while (seconds_since(start) < config.seconds);
  result.seconds = seconds_since(start);
  result.chunks_per_sec = static_cast<double>(result.chunks) / result.seconds;

  if (!std::isfinite(sink)) {
    throw NumericError("bench: forward pass produced non-finite state");
  }
  return result;
}

}  // namespace

BenchUnitResult bench_cell_forward(CellVariant variant, const BenchConfig& config) {
  return config.use_f32 ? bench_variant<float>(variant, config)
                        : bench_variant<double>(variant, config);
}

BenchResult run_forward_bench(const BenchConfig& config) {
  BenchResult result;
  result.lstm_plain = bench_cell_forward(CellVariant::LstmPlain, config);
  result.ieu = bench_cell_forward(CellVariant::Ieu, config);
  result.rel_delta = (result.ieu.chunks_per_sec - result.lstm_plain.chunks_per_sec) /
                     result.lstm_plain.chunks_per_sec;
  return result;
}

}  // namespace ien
