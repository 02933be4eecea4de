// SPDX-License-Identifier: Apache-2.0

#include "ien/cells.hpp"

#include <cmath>
#include <utility>

namespace ien {

const char* to_string(CellVariant v) {
  switch (v) {
    case CellVariant::Ieu: return "ieu";
    case CellVariant::LstmPlain: return "lstm_plain";
    case CellVariant::LstmBundle: return "lstm_bundle";
    case CellVariant::LstmSophisticated: return "lstm_sophisticated";
  }
  return "?";
}

const char* to_string(MergeMode m) {
  return m == MergeMode::Concat ? "concat" : "addition";
}

CellVariant cell_variant_from_string(const std::string& s) {
  if (s == "ieu") return CellVariant::Ieu;
  if (s == "lstm_plain") return CellVariant::LstmPlain;
  if (s == "lstm_bundle") return CellVariant::LstmBundle;
  if (s == "lstm_sophisticated") return CellVariant::LstmSophisticated;
  throw UsageError("unknown cell variant '" + s +
                   "' (expected ieu|lstm_plain|lstm_bundle|lstm_sophisticated)");
}

MergeMode merge_mode_from_string(const std::string& s) {
  if (s == "concat") return MergeMode::Concat;
  if (s == "addition") return MergeMode::Addition;
  throw UsageError("unknown merge mode '" + s + "' (expected concat|addition)");
}

std::vector<Parameter*> CellParams::parameters() {
  std::vector<Parameter*> out;
  for (Parameter* p : {&W_f, &W_e, &W_r, &W_cand, &W_i, &W_o}) {
    if (!p->value.empty()) out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> CellParams::parameters() const {
  std::vector<const Parameter*> out;
  for (const Parameter* p : {&W_f, &W_e, &W_r, &W_cand, &W_i, &W_o}) {
    if (!p->value.empty()) out.push_back(p);
  }
  return out;
}

CellParams init_cell(CellVariant variant, MergeMode merge, std::size_t d_h,
                     std::size_t d_e, Rng& rng) {
  if (d_h < 1 || d_e < 1) throw ConfigError("init_cell: widths must be >= 1");
  if (merge == MergeMode::Addition && d_h != d_e) {
    throw ConfigError("addition merge requires d_h == d_e, got d_h=" +
                      std::to_string(d_h) + " d_e=" + std::to_string(d_e));
  }
  CellParams p;
  p.variant = variant;
  p.merge = merge;
  p.d_h = d_h;
  p.d_e = d_e;

  const bool add = merge == MergeMode::Addition;
  const std::size_t cols_hx = add ? d_e : d_h + d_e;    // gates on (h_prev, x)
  const std::size_t cols_xx = add ? d_e : d_e + d_e;    // gates on (x_t, x_0)
  const std::size_t cols_hxx = add ? d_e : d_h + 2 * d_e;  // bundle gates

  auto make = [&](const char* name, std::size_t cols) {
    return Parameter(name, init_matrix(d_h, cols, InitScheme::XavierUniform, rng));
  };

  // Creation order matches parameters(); keeps seeded init reproducible.
  switch (variant) {
    case CellVariant::Ieu:
      p.W_f = make("cell.W_f", cols_hx);
      p.W_e = make("cell.W_e", cols_hx);
      p.W_r = make("cell.W_r", cols_hx);
      p.W_cand = make("cell.W_cand", cols_hx);
      p.W_i = make("cell.W_i", cols_xx);
      p.W_o = make("cell.W_o", cols_xx);
      break;
    case CellVariant::LstmPlain:
      p.W_f = make("cell.W_f", cols_hx);
      p.W_cand = make("cell.W_cand", cols_hx);
      p.W_i = make("cell.W_i", cols_hx);
      p.W_o = make("cell.W_o", cols_hx);
      break;
    case CellVariant::LstmBundle:
      p.W_f = make("cell.W_f", cols_hxx);
      p.W_cand = make("cell.W_cand", cols_hxx);
      p.W_i = make("cell.W_i", cols_hxx);
      p.W_o = make("cell.W_o", cols_hxx);
      break;
    case CellVariant::LstmSophisticated:
      p.W_f = make("cell.W_f", cols_hx);
      p.W_cand = make("cell.W_cand", cols_hx);
      p.W_i = make("cell.W_i", cols_xx);
      p.W_o = make("cell.W_o", cols_xx);
      break;
  }
  return p;
}

namespace {

CellWeightsView<double> view_of(const CellParams& p) {
  return CellWeightsView<double>{&p.W_f.value, &p.W_e.value,    &p.W_r.value,
                                 &p.W_cand.value, &p.W_i.value, &p.W_o.value};
}

void require_finite(const Vec& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string("cell_forward: non-finite ") + what);
    }
  }
}

}  // namespace

CellStep cell_forward(const CellParams& params, const CellState& prev,
                      const Vec& x_t, const Vec& x_0) {
  if (prev.h.size() != params.d_h || prev.C.size() != params.d_h) {
    throw ShapeError("cell_forward: state width " + std::to_string(prev.h.size()) +
                     " vs d_h=" + std::to_string(params.d_h));
  }
  if (x_t.size() != params.d_e || x_0.size() != params.d_e) {
    throw ShapeError("cell_forward: input width " + std::to_string(x_t.size()) +
                     " vs d_e=" + std::to_string(params.d_e));
  }
  require_finite(prev.h, "h_prev");
  require_finite(prev.C, "C_prev");
  require_finite(x_t, "x_t");
  require_finite(x_0, "x_0");

  CellStep step;
  CellTrace& tr = step.trace;
  tr.variant = params.variant;
  tr.merge = params.merge;
  tr.h_prev = prev.h;
  tr.C_prev = prev.C;
  tr.x_t = x_t;
  tr.x_0 = x_0;

  Vec scratch;
  cell_step(params.variant, params.merge, view_of(params), tr.h_prev, tr.C_prev,
            tr.x_t, tr.x_0, tr.g, step.state.h, scratch);
  step.state.C = tr.g.C;
  return step;
}

namespace {

using Part = std::pair<const Vec*, Vec*>;  // input vector, gradient sink

// Accumulates dW += dz (x) merged_input into W.grad and routes W^T dz back
// into each input part's gradient.
void backprop_gate(MergeMode merge, Parameter& W, const Vec& dz,
                   std::initializer_list<Part> parts) {
  const std::size_t rows = W.value.rows;
  const std::size_t cols = W.value.cols;
  if (merge == MergeMode::Concat) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = dz[r];
      double* wg = &W.grad.data[r * cols];
      const double* wv = &W.value.data[r * cols];
      std::size_t off = 0;
      for (const Part& part : parts) {
        const Vec& in = *part.first;
        Vec& gin = *part.second;
        for (std::size_t j = 0; j < in.size(); ++j) {
          wg[off + j] += d * in[j];
          gin[j] += wv[off + j] * d;
        }
        off += in.size();
      }
    }
    return;
  }

  // Addition merge: the gate reads the elementwise sum, so every part
  // receives the same back-routed gradient.
  Vec merged(cols, 0.0);
  for (const Part& part : parts) {
    for (std::size_t j = 0; j < cols; ++j) merged[j] += (*part.first)[j];
  }
  Vec back(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double d = dz[r];
    double* wg = &W.grad.data[r * cols];
    const double* wv = &W.value.data[r * cols];
    for (std::size_t j = 0; j < cols; ++j) {
      wg[j] += d * merged[j];
      back[j] += wv[j] * d;
    }
  }
  for (const Part& part : parts) {
    Vec& gin = *part.second;
    for (std::size_t j = 0; j < cols; ++j) gin[j] += back[j];
  }
}

}  // namespace

CellGrads cell_backward(CellParams& params, const CellTrace& trace,
                        const Vec& grad_h, const Vec& grad_C) {
  if (trace.variant != params.variant || trace.merge != params.merge) {
    throw UsageError("cell_backward: trace variant/merge does not match params");
  }
  const std::size_t d_h = params.d_h;
  if (grad_h.size() != d_h || grad_C.size() != d_h || trace.h_prev.size() != d_h) {
    throw ShapeError("cell_backward: gradient width mismatch");
  }

  const CellGates<double>& g = trace.g;

  // Through h_t = o * tanh(C_t) into the total cell-state gradient.
  Vec gC(d_h), d_out_gate(d_h);
  for (std::size_t j = 0; j < d_h; ++j) {
    d_out_gate[j] = grad_h[j] * g.tanh_C[j];
    gC[j] = grad_C[j] + grad_h[j] * g.o[j] * (1.0 - g.tanh_C[j] * g.tanh_C[j]);
  }

  CellGrads out;
  out.h_prev.assign(d_h, 0.0);
  out.C_prev.assign(d_h, 0.0);
  out.x_t.assign(trace.x_t.size(), 0.0);
  out.x_0.assign(trace.x_0.size(), 0.0);

  Vec dz_f(d_h), dz_i(d_h), dz_o(d_h), dz_cand(d_h);
  for (std::size_t j = 0; j < d_h; ++j) {
    out.C_prev[j] = gC[j] * g.f[j];
    dz_f[j] = gC[j] * trace.C_prev[j] * g.f[j] * (1.0 - g.f[j]);
    dz_i[j] = gC[j] * g.cand[j] * g.i[j] * (1.0 - g.i[j]);
    dz_cand[j] = gC[j] * g.i[j] * (1.0 - g.cand[j] * g.cand[j]);
    dz_o[j] = d_out_gate[j] * g.o[j] * (1.0 - g.o[j]);
  }

  const MergeMode merge = params.merge;
  const Part h_part{&trace.h_prev, &out.h_prev};
  const Part xt_part{&trace.x_t, &out.x_t};
  const Part x0_part{&trace.x_0, &out.x_0};

  switch (params.variant) {
    case CellVariant::Ieu: {
      Vec dz_e(d_h), dz_r(d_h);
      for (std::size_t j = 0; j < d_h; ++j) {
        dz_e[j] = gC[j] * g.r[j] * g.e[j] * (1.0 - g.e[j]);
        dz_r[j] = gC[j] * g.e[j] * (1.0 - g.r[j] * g.r[j]);
      }
      backprop_gate(merge, params.W_f, dz_f, {h_part, xt_part});
      backprop_gate(merge, params.W_e, dz_e, {h_part, x0_part});
      backprop_gate(merge, params.W_r, dz_r, {h_part, xt_part});
      backprop_gate(merge, params.W_cand, dz_cand, {h_part, xt_part});
      backprop_gate(merge, params.W_i, dz_i, {xt_part, x0_part});
      backprop_gate(merge, params.W_o, dz_o, {xt_part, x0_part});
      break;
    }
    case CellVariant::LstmPlain:
      backprop_gate(merge, params.W_f, dz_f, {h_part, xt_part});
      backprop_gate(merge, params.W_cand, dz_cand, {h_part, xt_part});
      backprop_gate(merge, params.W_i, dz_i, {h_part, xt_part});
      backprop_gate(merge, params.W_o, dz_o, {h_part, xt_part});
      break;
    case CellVariant::LstmBundle:
      backprop_gate(merge, params.W_f, dz_f, {h_part, xt_part, x0_part});
      backprop_gate(merge, params.W_cand, dz_cand, {h_part, xt_part, x0_part});
      backprop_gate(merge, params.W_i, dz_i, {h_part, xt_part, x0_part});
      backprop_gate(merge, params.W_o, dz_o, {h_part, xt_part, x0_part});
      break;
    case CellVariant::LstmSophisticated:
      backprop_gate(merge, params.W_f, dz_f, {h_part, xt_part});
      backprop_gate(merge, params.W_cand, dz_cand, {h_part, xt_part});
      backprop_gate(merge, params.W_i, dz_i, {xt_part, x0_part});
      backprop_gate(merge, params.W_o, dz_o, {xt_part, x0_part});
      break;
  }
  return out;
}

Unrolled unroll(const CellParams& params, const std::vector<Vec>& xs) {
  if (xs.empty()) throw UsageError("unroll: empty input sequence");
  const Vec x_0 = xs.back();
  Unrolled out;
  out.states.reserve(xs.size());
  out.traces.reserve(xs.size());
  CellState state = zero_state(params.d_h);
  for (const Vec& x : xs) {
    CellStep step = cell_forward(params, state, x, x_0);
    state = step.state;
    out.traces.push_back(std::move(step.trace));
    out.states.push_back(std::move(step.state));
  }
  return out;
}

}  // namespace ien
