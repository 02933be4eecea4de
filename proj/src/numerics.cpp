// SPDX-License-Identifier: Apache-2.0

#include "ien/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace ien {

Vec activate(Activation kind, const Vec& v) {
  Vec out(v.size());
  switch (kind) {
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
      break;
    case Activation::Elu:
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = elu(v[i]);
      break;
  }
  return out;
}

Vec softmax(const Vec& v) {
  if (v.empty()) throw ShapeError("softmax: empty input");
  const double m = *std::max_element(v.begin(), v.end());
  Vec out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

double cross_entropy(const Vec& p, const Vec& y_one_hot) {
  if (p.size() != y_one_hot.size()) {
    throw ShapeError("cross_entropy: probability vector of length " +
                     std::to_string(p.size()) + " vs one-hot of length " +
                     std::to_string(y_one_hot.size()));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y_one_hot[i] != 0.0) {
      loss -= y_one_hot[i] * std::log(std::max(p[i], kProbFloor));
    }
  }
  return loss;
}

void adam_step(Parameter& p, double lr, double beta1, double beta2, double eps,
               long t) {
  if (t < 1) throw UsageError("adam_step: step count must be >= 1");
  for (double g : p.grad.data) {
    if (!std::isfinite(g)) {
      throw NumericError("adam_step: non-finite gradient in parameter '" +
                         p.name + "'");
    }
  }
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < p.value.data.size(); ++i) {
    const double g = p.grad.data[i];
    double& m = p.adam_m.data[i];
    double& v = p.adam_v.data[i];
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    p.value.data[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
  p.zero_grad();
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = next_unit();
  while (u1 <= 0.0) u1 = next_unit();
  const double u2 = next_unit();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw UsageError("Rng::index: empty range");
  const unsigned __int128 wide =
      static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
  return static_cast<std::size_t>(wide >> 64);
}

Mat init_matrix(std::size_t rows, std::size_t cols, InitScheme scheme, Rng& rng) {
  if (rows < 1 || cols < 1) throw UsageError("init_matrix: zero-sized shape");
  Mat m(rows, cols);
  if (scheme == InitScheme::XavierUniform) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (double& x : m.data) x = rng.uniform(-bound, bound);
  }
  return m;
}

Mat init_matrix(std::size_t rows, std::size_t cols, InitScheme scheme, RngSeed seed) {
  Rng rng(seed);
  return init_matrix(rows, cols, scheme, rng);
}

std::vector<double> finite_diff_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h) {
  if (h <= 0.0) throw UsageError("finite_diff_gradient: h must be positive");
  std::vector<double> point = x;
  std::vector<double> grad(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double up = f(point);
    point[i] = saved - h;
    const double down = f(point);
    point[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_gradient: non-finite evaluation at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace ien
