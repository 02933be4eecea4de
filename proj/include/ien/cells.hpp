// SPDX-License-Identifier: Apache-2.0
//
// The information elevation unit (IEU) and the three LSTM ablation
// variants. The IEU extends an LSTM with an elevation pathway that
// re-injects previous-hidden-state information gated on the current
// chunk's embedding x_0:
//
//   f_t    = sigmoid(W_f    . [h_{t-1}; x_t])     forget
//   e_t    = sigmoid(W_e    . [h_{t-1}; x_0])     elevation
//   r_t    = tanh   (W_r    . [h_{t-1}; x_t])     elevation relevance
//   i_t    = sigmoid(W_i    . [x_t; x_0])         input
//   cand_t = tanh   (W_cand . [h_{t-1}; x_t])     candidate
//   C_t    = C_{t-1} * f_t + r_t * e_t + cand_t * i_t
//   o_t    = sigmoid(W_o    . [x_t; x_0])         output
//   h_t    = o_t * tanh(C_t)
//
// Variants:
//   lstm_plain         standard LSTM on [h_{t-1}; x_t]; x_0 unused
//   lstm_bundle        standard LSTM gates on [h_{t-1}; x_t; x_0]
//   lstm_sophisticated IEU without the elevation term (no W_e, W_r)
//
// Merge mode selects how each gate combines its inputs: `concat`
// concatenates them (the default; matches the stated weight shapes),
// `addition` sums them elementwise and requires d_h == d_e.

#ifndef IEN_CELLS_HPP
#define IEN_CELLS_HPP

#include <string>
#include <vector>

#include "ien/numerics.hpp"

namespace ien {

enum class CellVariant { Ieu, LstmPlain, LstmBundle, LstmSophisticated };
enum class MergeMode { Concat, Addition };

const char* to_string(CellVariant v);
const char* to_string(MergeMode m);
CellVariant cell_variant_from_string(const std::string& s);
MergeMode merge_mode_from_string(const std::string& s);

inline bool has_elevation(CellVariant v) { return v == CellVariant::Ieu; }
inline bool reads_current_input(CellVariant v) { return v != CellVariant::LstmPlain; }

struct CellState {
  Vec h;
  Vec C;
};

inline CellState zero_state(std::size_t d_h) {
  return CellState{Vec(d_h, 0.0), Vec(d_h, 0.0)};
}

// Weight set for one cell. Gates absent from a variant hold empty
// matrices. parameters() enumerates the present subset in the fixed
// order W_f, W_e, W_r, W_cand, W_i, W_o; checkpoints rely on it.
struct CellParams {
  CellVariant variant = CellVariant::Ieu;
  MergeMode merge = MergeMode::Concat;
  std::size_t d_h = 0;
  std::size_t d_e = 0;
  Parameter W_f, W_e, W_r, W_cand, W_i, W_o;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

CellParams init_cell(CellVariant variant, MergeMode merge, std::size_t d_h,
                     std::size_t d_e, Rng& rng);

// Gate activations and cell-state values of one forward step.
template <typename Scalar>
struct CellGates {
  std::vector<Scalar> f, e, r, i, cand, o;
  std::vector<Scalar> C;       // updated cell state
  std::vector<Scalar> tanh_C;  // tanh of the updated cell state
};

// Pointer view over the weight matrices, parameterized on precision so
// the forward-only benchmark can run the same kernel in float.
template <typename Scalar>
struct CellWeightsView {
  const Matrix<Scalar>* W_f = nullptr;
  const Matrix<Scalar>* W_e = nullptr;
  const Matrix<Scalar>* W_r = nullptr;
  const Matrix<Scalar>* W_cand = nullptr;
  const Matrix<Scalar>* W_i = nullptr;
  const Matrix<Scalar>* W_o = nullptr;
};

namespace detail {

// z = W . merge(a, b); merge is concatenation or elementwise addition.
template <typename Scalar>
void gate_pre2(MergeMode merge, const Matrix<Scalar>& W,
               const std::vector<Scalar>& a, const std::vector<Scalar>& b,
               std::vector<Scalar>& z, std::vector<Scalar>& scratch) {
  if (merge == MergeMode::Concat) {
    affine_concat2_into(W, a, b, z);
    return;
  }
  if (a.size() != b.size()) {
    throw ShapeError("addition merge: operand lengths " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
  }
  scratch.resize(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) scratch[j] = a[j] + b[j];
  affine_into(W, scratch, z);
}

template <typename Scalar>
void gate_pre3(MergeMode merge, const Matrix<Scalar>& W,
               const std::vector<Scalar>& a, const std::vector<Scalar>& b,
               const std::vector<Scalar>& c, std::vector<Scalar>& z,
               std::vector<Scalar>& scratch) {
  if (merge == MergeMode::Concat) {
    affine_concat3_into(W, a, b, c, z);
    return;
  }
  if (a.size() != b.size() || b.size() != c.size()) {
    throw ShapeError("addition merge: operand lengths differ");
  }
  scratch.resize(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) scratch[j] = a[j] + b[j] + c[j];
  affine_into(W, scratch, z);
}

template <typename Scalar>
inline void sigmoid_inplace(std::vector<Scalar>& v) {
  for (Scalar& x : v) x = sigmoid(x);
}

template <typename Scalar>
inline void tanh_inplace(std::vector<Scalar>& v) {
  for (Scalar& x : v) x = std::tanh(x);
}

}  // namespace detail

// One forward step shared by all variants and precisions. Fills `g` with
// gate activations and the updated cell state, and `h_out` with the new
// hidden state. `scratch` is reused for addition-mode merges.
template <typename Scalar>
void cell_step(CellVariant variant, MergeMode merge, const CellWeightsView<Scalar>& w,
               const std::vector<Scalar>& h_prev, const std::vector<Scalar>& C_prev,
               const std::vector<Scalar>& x_t, const std::vector<Scalar>& x_0,
               CellGates<Scalar>& g, std::vector<Scalar>& h_out,
               std::vector<Scalar>& scratch) {
  using detail::gate_pre2;
  using detail::gate_pre3;
  const std::size_t d_h = h_prev.size();

  switch (variant) {
    case CellVariant::Ieu:
      gate_pre2(merge, *w.W_f, h_prev, x_t, g.f, scratch);
      gate_pre2(merge, *w.W_e, h_prev, x_0, g.e, scratch);
      gate_pre2(merge, *w.W_r, h_prev, x_t, g.r, scratch);
      gate_pre2(merge, *w.W_i, x_t, x_0, g.i, scratch);
      gate_pre2(merge, *w.W_cand, h_prev, x_t, g.cand, scratch);
      gate_pre2(merge, *w.W_o, x_t, x_0, g.o, scratch);
      break;
    case CellVariant::LstmPlain:
      gate_pre2(merge, *w.W_f, h_prev, x_t, g.f, scratch);
      gate_pre2(merge, *w.W_i, h_prev, x_t, g.i, scratch);
      gate_pre2(merge, *w.W_cand, h_prev, x_t, g.cand, scratch);
      gate_pre2(merge, *w.W_o, h_prev, x_t, g.o, scratch);
      g.e.clear();
      g.r.clear();
      break;
    case CellVariant::LstmBundle:
      gate_pre3(merge, *w.W_f, h_prev, x_t, x_0, g.f, scratch);
      gate_pre3(merge, *w.W_i, h_prev, x_t, x_0, g.i, scratch);
      gate_pre3(merge, *w.W_cand, h_prev, x_t, x_0, g.cand, scratch);
      gate_pre3(merge, *w.W_o, h_prev, x_t, x_0, g.o, scratch);
      g.e.clear();
      g.r.clear();
      break;
    case CellVariant::LstmSophisticated:
      gate_pre2(merge, *w.W_f, h_prev, x_t, g.f, scratch);
      gate_pre2(merge, *w.W_i, x_t, x_0, g.i, scratch);
      gate_pre2(merge, *w.W_cand, h_prev, x_t, g.cand, scratch);
      gate_pre2(merge, *w.W_o, x_t, x_0, g.o, scratch);
      g.e.clear();
      g.r.clear();
      break;
  }

  detail::sigmoid_inplace(g.f);
  detail::sigmoid_inplace(g.i);
  detail::sigmoid_inplace(g.o);
  detail::tanh_inplace(g.cand);
  if (has_elevation(variant)) {
    detail::sigmoid_inplace(g.e);
    detail::tanh_inplace(g.r);
  }

  g.C.resize(d_h);
  g.tanh_C.resize(d_h);
  h_out.resize(d_h);
  for (std::size_t j = 0; j < d_h; ++j) {
    Scalar c = C_prev[j] * g.f[j] + g.cand[j] * g.i[j];
    if (has_elevation(variant)) c += g.r[j] * g.e[j];
    g.C[j] = c;
    g.tanh_C[j] = std::tanh(c);
    h_out[j] = g.o[j] * g.tanh_C[j];
  }
}

// Cached forward intermediates of one timestep; sufficient for an exact
// backward pass without recomputation.
struct CellTrace {
  CellVariant variant = CellVariant::Ieu;
  MergeMode merge = MergeMode::Concat;
  Vec h_prev, C_prev, x_t, x_0;
  CellGates<double> g;
};

struct CellStep {
  CellState state;
  CellTrace trace;
};

CellStep cell_forward(const CellParams& params, const CellState& prev,
                      const Vec& x_t, const Vec& x_0);

// Gradients with respect to the step's inputs. Weight gradients are
// accumulated into the CellParams' Parameter::grad members.
struct CellGrads {
  Vec h_prev, C_prev, x_t, x_0;
};

CellGrads cell_backward(CellParams& params, const CellTrace& trace,
                        const Vec& grad_h, const Vec& grad_C);

struct Unrolled {
  std::vector<CellState> states;
  std::vector<CellTrace> traces;
};

// Runs the cell left to right over xs starting from the zero state, with
// x_0 fixed to xs.back(). states[t] is the state after consuming xs[t].
Unrolled unroll(const CellParams& params, const std::vector<Vec>& xs);

}  // namespace ien

#endif  // IEN_CELLS_HPP
