// SPDX-License-Identifier: Apache-2.0
//
// Minimal dense linear algebra and training primitives: row-major
// matrices, activations, softmax/cross-entropy, Adam, deterministic
// initialization, and a central-difference gradient oracle. Everything
// else in the library is built on top of this header.

#ifndef IEN_NUMERICS_HPP
#define IEN_NUMERICS_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ien/errors.hpp"

namespace ien {

// Row-major dense matrix. double is the working precision throughout the
// library; float instantiations exist only for the forward-only benchmark.
template <typename Scalar>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Scalar> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, Scalar fill = Scalar(0))
      : rows(r), cols(c), data(r * c, fill) {}

  Scalar& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  Scalar operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
};

using Mat = Matrix<double>;
using Vec = std::vector<double>;

// out = W * v
template <typename Scalar>
void affine_into(const Matrix<Scalar>& W, const std::vector<Scalar>& v,
                 std::vector<Scalar>& out) {
  if (v.size() != W.cols) {
    throw ShapeError("affine: expected input of length " + std::to_string(W.cols) +
                     ", got " + std::to_string(v.size()));
  }
  out.assign(W.rows, Scalar(0));
  const Scalar* row = W.data.data();
  for (std::size_t r = 0; r < W.rows; ++r, row += W.cols) {
    Scalar acc = 0;
    for (std::size_t c = 0; c < W.cols; ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
}

template <typename Scalar>
std::vector<Scalar> affine(const Matrix<Scalar>& W, const std::vector<Scalar>& v) {
  std::vector<Scalar> out;
  affine_into(W, v, out);
  return out;
}

// out = W * [a; b] without materializing the concatenation.
template <typename Scalar>
void affine_concat2_into(const Matrix<Scalar>& W, const std::vector<Scalar>& a,
                         const std::vector<Scalar>& b, std::vector<Scalar>& out) {
  if (a.size() + b.size() != W.cols) {
    throw ShapeError("affine: expected concatenated input of length " +
                     std::to_string(W.cols) + ", got " +
                     std::to_string(a.size() + b.size()));
  }
  out.assign(W.rows, Scalar(0));
  const Scalar* row = W.data.data();
  const std::size_t na = a.size(), nb = b.size();
  for (std::size_t r = 0; r < W.rows; ++r, row += W.cols) {
    Scalar acc = 0;
    for (std::size_t c = 0; c < na; ++c) acc += row[c] * a[c];
    for (std::size_t c = 0; c < nb; ++c) acc += row[na + c] * b[c];
    out[r] = acc;
  }
}

// out = W * [a; b; c]
template <typename Scalar>
void affine_concat3_into(const Matrix<Scalar>& W, const std::vector<Scalar>& a,
                         const std::vector<Scalar>& b, const std::vector<Scalar>& c,
                         std::vector<Scalar>& out) {
  if (a.size() + b.size() + c.size() != W.cols) {
    throw ShapeError("affine: expected concatenated input of length " +
                     std::to_string(W.cols) + ", got " +
                     std::to_string(a.size() + b.size() + c.size()));
  }
  out.assign(W.rows, Scalar(0));
  const Scalar* row = W.data.data();
  const std::size_t na = a.size(), nb = b.size(), nc = c.size();
  for (std::size_t r = 0; r < W.rows; ++r, row += W.cols) {
    Scalar acc = 0;
    for (std::size_t j = 0; j < na; ++j) acc += row[j] * a[j];
    for (std::size_t j = 0; j < nb; ++j) acc += row[na + j] * b[j];
    for (std::size_t j = 0; j < nc; ++j) acc += row[na + nb + j] * c[j];
    out[r] = acc;
  }
}

// Numerically stable logistic function; never produces NaN on finite input.
template <typename Scalar>
inline Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

// ELU with alpha = 1: identity for x >= 0, expm1(x) below.
template <typename Scalar>
inline Scalar elu(Scalar x) {
  return x >= Scalar(0) ? x : std::expm1(x);
}

enum class Activation { Sigmoid, Tanh, Elu };

Vec activate(Activation kind, const Vec& v);

// Max-subtracted softmax; output entries are positive and sum to 1.
Vec softmax(const Vec& v);

// Probabilities are clamped below at this floor before taking the log.
inline constexpr double kProbFloor = 1e-12;

// -sum_k y_k log(max(p_k, floor)); y is one-hot.
double cross_entropy(const Vec& p, const Vec& y_one_hot);

// Trainable matrix with its gradient and Adam moment estimates. The
// gradient accumulates across calls and is zeroed by adam_step.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m;
  Mat adam_v;

  Parameter() = default;
  Parameter(std::string n, Mat v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.rows, value.cols),
        adam_m(value.rows, value.cols),
        adam_v(value.rows, value.cols) {}

  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

// One bias-corrected Adam update; t is the 1-based global step count.
// Throws NumericError naming the parameter if the gradient is non-finite.
void adam_step(Parameter& p, double lr, double beta1, double beta2, double eps,
               long t);

struct RngSeed {
  std::uint64_t value = 0;
};

// Deterministic random source. The generator is std::mt19937_64, which the
// standard pins bit-exactly; all derived draws below use fixed mappings
// (no std::*_distribution, whose sequences are implementation-defined):
//   next_unit : (next_u64() >> 11) * 2^-53, uniform in [0, 1)
//   uniform   : lo + next_unit() * (hi - lo)
//   normal    : Box-Muller on two next_unit draws, second value cached
//   index     : 128-bit multiply-shift of next_u64 into [0, n)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  explicit Rng(RngSeed seed) : engine_(seed.value) {}

  std::uint64_t next_u64() { return engine_(); }

  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + next_unit() * (hi - lo); }

  double normal();

  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class InitScheme { XavierUniform, Zeros };

// Xavier-uniform draws entries from +-sqrt(6 / (rows + cols)).
Mat init_matrix(std::size_t rows, std::size_t cols, InitScheme scheme, Rng& rng);
Mat init_matrix(std::size_t rows, std::size_t cols, InitScheme scheme, RngSeed seed);

// Central-difference gradient estimate of a scalar function, one
// coordinate at a time: (f(x + h e_i) - f(x - h e_i)) / (2h).
std::vector<double> finite_diff_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h = 1e-5);

}  // namespace ien

#endif  // IEN_NUMERICS_HPP
