// SPDX-License-Identifier: Apache-2.0

#include "ien/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <utility>

static_assert(std::endian::native == std::endian::little,
              "checkpoint and feature files are little-endian");

namespace ien {

void IenConfig::validate() const {
  if (T_plus_1 < 1) throw ConfigError("config: window length must be >= 1");
  if (d_v < 1 || d_e < 1 || d_h < 1) throw ConfigError("config: widths must be >= 1");
  if (K < 1) throw ConfigError("config: need at least one action class");
  if (merge_mode == MergeMode::Addition && d_h != d_e) {
    throw ConfigError("config: addition merge requires d_h == d_e");
  }
}

std::vector<Parameter*> IenModel::parameters() {
  std::vector<Parameter*> out;
  out.push_back(&embed.W);
  for (Parameter* p : cell.parameters()) out.push_back(p);
  out.push_back(&W_cls);
  return out;
}

std::vector<const Parameter*> IenModel::parameters() const {
  std::vector<const Parameter*> out;
  out.push_back(&embed.W);
  for (const Parameter* p : cell.parameters()) out.push_back(p);
  out.push_back(&W_cls);
  return out;
}

namespace {

IenModel build_model(const IenConfig& config, InitScheme scheme, Rng& rng) {
  config.validate();
  IenModel m;
  m.config = config;
  if (scheme == InitScheme::XavierUniform) {
    m.embed = init_embedding(config.d_e, config.d_v, rng);
    m.cell = init_cell(config.cell_variant, config.merge_mode, config.d_h,
                       config.d_e, rng);
    m.W_cls = Parameter("W_cls", init_matrix(config.num_classes(), config.d_h,
                                             InitScheme::XavierUniform, rng));
  } else {
    m.embed.W = Parameter("embed.W", Mat(config.d_e, config.d_v));
    m.cell = init_cell(config.cell_variant, config.merge_mode, config.d_h,
                       config.d_e, rng);
    for (Parameter* p : m.cell.parameters()) {
      std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
    }
    m.W_cls = Parameter("W_cls", Mat(config.num_classes(), config.d_h));
  }
  return m;
}

}  // namespace

IenModel init_model(const IenConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  return build_model(config, InitScheme::XavierUniform, rng);
}

ProbSequence ien_forward(const IenModel& model, const std::vector<Vec>& feats,
                         IenTrace* trace) {
  const IenConfig& cfg = model.config;
  if (feats.size() != cfg.T_plus_1) {
    throw ShapeError("ien_forward: expected " + std::to_string(cfg.T_plus_1) +
                     " chunks, got " + std::to_string(feats.size()));
  }
  IenTrace local;
  IenTrace& tr = trace ? *trace : local;
  tr = IenTrace{};

  tr.xs.reserve(feats.size());
  tr.embed_traces.reserve(feats.size());
  for (const Vec& feat : feats) {
    EmbedStep step = embed_forward(model.embed, feat);
    tr.xs.push_back(std::move(step.x));
    tr.embed_traces.push_back(std::move(step.trace));
  }

  tr.unrolled = unroll(model.cell, tr.xs);

  tr.probs.reserve(feats.size());
  Vec logits;
  for (const CellState& st : tr.unrolled.states) {
    affine_into(model.W_cls.value, st.h, logits);
    tr.probs.push_back(softmax(logits));
  }
  return tr.probs;
}

double ien_loss(const ProbSequence& probs, const std::vector<int>& labels) {
  if (probs.size() != labels.size()) {
    throw ShapeError("ien_loss: " + std::to_string(probs.size()) +
                     " probability rows vs " + std::to_string(labels.size()) +
                     " labels");
  }
  if (probs.empty()) throw UsageError("ien_loss: empty sequence");
  double total = 0.0;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    const int y = labels[t];
    if (y < 0 || static_cast<std::size_t>(y) >= probs[t].size()) {
      throw UsageError("ien_loss: label " + std::to_string(y) +
                       " out of range at chunk " + std::to_string(t));
    }
    total -= std::log(std::max(probs[t][static_cast<std::size_t>(y)], kProbFloor));
  }
  return total;
}

void ien_backward(IenModel& model, const IenTrace& trace,
                  const std::vector<int>& labels) {
  const IenConfig& cfg = model.config;
  const std::size_t T = cfg.T_plus_1;
  if (trace.probs.size() != T || trace.unrolled.states.size() != T ||
      trace.embed_traces.size() != T) {
    throw UsageError("ien_backward: trace does not match model window length");
  }
  if (labels.size() != T) {
    throw UsageError("ien_backward: expected " + std::to_string(T) + " labels");
  }
  const std::size_t nc = cfg.num_classes();
  const std::size_t d_h = cfg.d_h;
  const std::size_t d_e = cfg.d_e;

  // Shared classifier: softmax + cross-entropy collapse to p - y per chunk.
  std::vector<Vec> grad_h(T, Vec(d_h, 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    const int y = labels[t];
    if (y < 0 || static_cast<std::size_t>(y) >= nc) {
      throw UsageError("ien_backward: label " + std::to_string(y) +
                       " out of range at chunk " + std::to_string(t));
    }
    Vec dz = trace.probs[t];
    dz[static_cast<std::size_t>(y)] -= 1.0;
    const Vec& h = trace.unrolled.states[t].h;
    for (std::size_t r = 0; r < nc; ++r) {
      const double d = dz[r];
      double* wg = &model.W_cls.grad.data[r * d_h];
      const double* wv = &model.W_cls.value.data[r * d_h];
      for (std::size_t c = 0; c < d_h; ++c) {
        wg[c] += d * h[c];
        grad_h[t][c] += wv[c] * d;
      }
    }
  }

  // Backpropagation through time. x_0 fans out into every timestep, so
  // its gradient aggregates across the whole window before being added
  // to the last chunk's embedding gradient.
  std::vector<Vec> grad_x(T, Vec(d_e, 0.0));
  Vec grad_x0_total(d_e, 0.0);
  Vec gh(d_h, 0.0), gC(d_h, 0.0);
  for (std::size_t ti = T; ti-- > 0;) {
    for (std::size_t j = 0; j < d_h; ++j) gh[j] += grad_h[ti][j];
    CellGrads grads =
        cell_backward(model.cell, trace.unrolled.traces[ti], gh, gC);
    for (std::size_t j = 0; j < d_e; ++j) {
      grad_x[ti][j] += grads.x_t[j];
      grad_x0_total[j] += grads.x_0[j];
    }
    gh = std::move(grads.h_prev);
    gC = std::move(grads.C_prev);
  }
  for (std::size_t j = 0; j < d_e; ++j) grad_x[T - 1][j] += grad_x0_total[j];

  for (std::size_t t = 0; t < T; ++t) {
    embed_backward(model.embed, trace.embed_traces[t], grad_x[t]);
  }
}

std::vector<double> train(IenModel& model, const std::vector<LabeledSegment>& data,
                          const TrainOptions& opts) {
  if (data.empty()) throw UsageError("train: empty dataset");
  if (opts.batch_size < 1) throw UsageError("train: batch size must be >= 1");

  std::vector<Parameter*> params = model.parameters();
  for (Parameter* p : params) p->zero_grad();

  Rng rng(opts.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> epoch_losses;
  epoch_losses.reserve(opts.epochs);
  long step = 0;
  IenTrace tr;

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    // Fisher-Yates with our own index draws, for a pinned shuffle order.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.index(i)]);
    }

    double total = 0.0;
    std::size_t done = 0;
    while (done < order.size()) {
      const std::size_t n = std::min(opts.batch_size, order.size() - done);
      for (std::size_t b = 0; b < n; ++b) {
        const LabeledSegment& seg = data[order[done + b]];
        ien_forward(model, seg.feats, &tr);
        total += ien_loss(tr.probs, seg.labels);
        ien_backward(model, tr, seg.labels);
      }
      done += n;
      ++step;
      const double inv = 1.0 / static_cast<double>(n);
      for (Parameter* p : params) {
        for (double& g : p->grad.data) g *= inv;
        adam_step(*p, opts.lr, opts.beta1, opts.beta2, opts.eps, step);
      }
    }
    epoch_losses.push_back(total / static_cast<double>(data.size()));
  }
  return epoch_losses;
}

Vec predict_current(const IenModel& model, const std::vector<Vec>& feats) {
  return ien_forward(model, feats).back();
}

StreamSession::StreamSession(const IenModel& model) : model_(&model) {
  for (std::size_t t = 0; t < model.config.T_plus_1; ++t) {
    window_.emplace_back(model.config.d_v, 0.0);
  }
}

Vec StreamSession::push(const Vec& feat) {
  if (feat.size() != model_->config.d_v) {
    throw ShapeError("stream_infer: feature width " + std::to_string(feat.size()) +
                     " vs d_v=" + std::to_string(model_->config.d_v));
  }
  window_.pop_front();
  window_.push_back(feat);
  return predict_current(*model_, std::vector<Vec>(window_.begin(), window_.end()));
}

namespace {

constexpr char kModelMagic[4] = {'I', 'E', 'N', 'M'};
constexpr std::uint32_t kModelVersion = 1;

void put_bytes(std::ostream& out, const void* src, std::size_t n) {
  out.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
}

void put_u32(std::ostream& out, std::uint32_t v) { put_bytes(out, &v, 4); }

class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  void bytes(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(std::string("truncated file: expected ") + what +
                        " at byte offset " + std::to_string(offset_));
    }
    offset_ += n;
  }

  std::uint32_t u32(const char* what) {
    std::uint32_t v = 0;
    bytes(&v, 4, what);
    return v;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace

void save_model(const std::string& path, const IenModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  put_bytes(out, kModelMagic, 4);
  put_u32(out, kModelVersion);
  const IenConfig& c = model.config;
  put_u32(out, static_cast<std::uint32_t>(c.T_plus_1));
  put_u32(out, static_cast<std::uint32_t>(c.d_v));
  put_u32(out, static_cast<std::uint32_t>(c.d_e));
  put_u32(out, static_cast<std::uint32_t>(c.d_h));
  put_u32(out, static_cast<std::uint32_t>(c.K));
  put_u32(out, static_cast<std::uint32_t>(c.cell_variant));
  put_u32(out, static_cast<std::uint32_t>(c.merge_mode));
  for (const Parameter* p : model.parameters()) {
    put_u32(out, static_cast<std::uint32_t>(p->value.rows));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols));
    put_bytes(out, p->value.data.data(), p->value.data.size() * sizeof(double));
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

IenModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  ByteReader rd(in);

  char magic[4];
  rd.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kModelMagic, 4) != 0) {
    throw FormatError("bad magic at byte offset 0: not a model checkpoint");
  }
  const std::uint32_t version = rd.u32("version");
  if (version != kModelVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " at byte offset 4");
  }

  IenConfig c;
  c.T_plus_1 = rd.u32("window length");
  c.d_v = rd.u32("d_v");
  c.d_e = rd.u32("d_e");
  c.d_h = rd.u32("d_h");
  c.K = rd.u32("K");
  const std::uint32_t variant = rd.u32("cell variant");
  if (variant > 3) {
    throw FormatError("invalid cell variant tag " + std::to_string(variant) +
                      " at byte offset 28");
  }
  c.cell_variant = static_cast<CellVariant>(variant);
  const std::uint32_t merge = rd.u32("merge mode");
  if (merge > 1) {
    throw FormatError("invalid merge mode tag " + std::to_string(merge) +
                      " at byte offset 32");
  }
  c.merge_mode = static_cast<MergeMode>(merge);

  Rng rng(0);
  IenModel model = build_model(c, InitScheme::Zeros, rng);
  for (Parameter* p : model.parameters()) {
    const std::size_t at = rd.offset();
    const std::uint32_t rows = rd.u32("matrix rows");
    const std::uint32_t cols = rd.u32("matrix cols");
    if (rows != p->value.rows || cols != p->value.cols) {
      throw FormatError("shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " for parameter '" + p->name + "' at byte offset " +
                        std::to_string(at) + ", expected " +
                        std::to_string(p->value.rows) + "x" +
                        std::to_string(p->value.cols));
    }
    rd.bytes(p->value.data.data(), p->value.data.size() * sizeof(double),
             p->name.c_str());
  }
  return model;
}

}  // namespace ien
