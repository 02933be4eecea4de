// SPDX-License-Identifier: Apache-2.0
//
// Early embedding: maps a raw per-chunk feature (width d_v) to the
// cell input x = elu(W . feature) of width d_e. No bias term.

#ifndef IEN_EMBEDDING_HPP
#define IEN_EMBEDDING_HPP

#include "ien/numerics.hpp"

namespace ien {

struct EmbeddingParams {
  Parameter W;  // d_e x d_v
};

EmbeddingParams init_embedding(std::size_t d_e, std::size_t d_v, Rng& rng);

// The ELU derivative is recoverable from the activation alone
// (1 where x >= 0, x + 1 below), so the trace caches just input and output.
struct EmbedTrace {
  Vec feat;
  Vec x;
};

struct EmbedStep {
  Vec x;
  EmbedTrace trace;
};

EmbedStep embed_forward(const EmbeddingParams& params, const Vec& feat);

// Returns the gradient with respect to the raw feature; the weight
// gradient accumulates into params.W.grad.
Vec embed_backward(EmbeddingParams& params, const EmbedTrace& trace,
                   const Vec& grad_x);

}  // namespace ien

#endif  // IEN_EMBEDDING_HPP
