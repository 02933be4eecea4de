// SPDX-License-Identifier: Apache-2.0

#include "ien/embedding.hpp"

namespace ien {

EmbeddingParams init_embedding(std::size_t d_e, std::size_t d_v, Rng& rng) {
  EmbeddingParams p;
  p.W = Parameter("embed.W", init_matrix(d_e, d_v, InitScheme::XavierUniform, rng));
  return p;
}

EmbedStep embed_forward(const EmbeddingParams& params, const Vec& feat) {
  if (feat.size() != params.W.value.cols) {
    throw ShapeError("embed_forward: feature width " + std::to_string(feat.size()) +
                     " vs d_v=" + std::to_string(params.W.value.cols));
  }
  EmbedStep step;
  affine_into(params.W.value, feat, step.x);
  for (double& v : step.x) v = elu(v);
  step.trace.feat = feat;
  step.trace.x = step.x;
  return step;
}

Vec embed_backward(EmbeddingParams& params, const EmbedTrace& trace,
                   const Vec& grad_x) {
  const Mat& W = params.W.value;
  if (grad_x.size() != W.rows || trace.x.size() != W.rows ||
      trace.feat.size() != W.cols) {
    throw UsageError("embed_backward: trace/gradient width mismatch");
  }
  Vec grad_feat(W.cols, 0.0);
  for (std::size_t r = 0; r < W.rows; ++r) {
    const double dpre =
        grad_x[r] * (trace.x[r] >= 0.0 ? 1.0 : trace.x[r] + 1.0);
    const double* wv = &W.data[r * W.cols];
    double* wg = &params.W.grad.data[r * W.cols];
    for (std::size_t c = 0; c < W.cols; ++c) {
      wg[c] += dpre * trace.feat[c];
      grad_feat[c] += wv[c] * dpre;
    }
  }
  return grad_feat;
}

}  // namespace ien
