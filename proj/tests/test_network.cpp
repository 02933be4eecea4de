// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gradcheck.hpp"
#include "ien/datagen.hpp"
#include "ien/network.hpp"
#include "reference_values.h"

using namespace ien;

namespace {

const CellVariant kAllVariants[] = {
    CellVariant::Ieu, CellVariant::LstmPlain, CellVariant::LstmBundle,
    CellVariant::LstmSophisticated};

IenConfig tiny_config(CellVariant v, MergeMode m = MergeMode::Concat) {
  IenConfig c;
  c.T_plus_1 = 3;
  c.d_v = 3;
  c.d_e = 2;
  c.d_h = 2;
  c.K = 1;
  c.cell_variant = v;
  c.merge_mode = m;
  return c;
}

std::vector<Vec> random_feats(Rng& rng, std::size_t count, std::size_t d_v) {
  std::vector<Vec> out(count, Vec(d_v));
  for (Vec& f : out) {
    for (double& x : f) x = rng.uniform(-1.0, 1.0);
  }
  return out;
}

void zero_all(IenModel& model) {
  for (Parameter* p : model.parameters()) {
    std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
  }
}

bool models_bit_equal(const IenModel& a, const IenModel& b) {
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->value.data != pb[i]->value.data) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("zero weights give uniform probabilities at every chunk") {
  IenConfig c = tiny_config(CellVariant::Ieu);
  c.K = 2;
  IenModel model = init_model(c, 1);

  zero_all(model);
  Rng rng(40);
  ProbSequence probs = ien_forward(model, random_feats(rng, c.T_plus_1, c.d_v));
  REQUIRE(probs.size() == c.T_plus_1);
  for (const Vec& row : probs) {
    for (double p : row) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
}

TEST_CASE("probability rows sum to one") {
  Rng rng(41);
  for (CellVariant v : kAllVariants) {
    IenModel model = init_model(tiny_config(v), 7);
    ProbSequence probs = ien_forward(model, random_feats(rng, 3, 3));
    for (const Vec& row : probs) {
      double sum = 0.0;
      for (double p : row) sum += p;
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("forward rejects the wrong number of chunks") {
  IenModel model = init_model(tiny_config(CellVariant::Ieu), 2);
  Rng rng(42);
  CHECK_THROWS_AS(ien_forward(model, random_feats(rng, 2, 3)), ShapeError);
}

TEST_CASE("permuting classifier rows permutes probability columns") {
  IenConfig c = tiny_config(CellVariant::Ieu);
  c.K = 2;
  IenModel model = init_model(c, 3);
  IenModel permuted = init_model(c, 3);
  // Cycle the three classifier rows: 0 -> 1 -> 2 -> 0.
  for (std::size_t col = 0; col < c.d_h; ++col) {
    permuted.W_cls.value(1, col) = model.W_cls.value(0, col);
    permuted.W_cls.value(2, col) = model.W_cls.value(1, col);
    permuted.W_cls.value(0, col) = model.W_cls.value(2, col);
  }
  Rng rng(43);
  std::vector<Vec> feats = random_feats(rng, c.T_plus_1, c.d_v);
  ProbSequence base = ien_forward(model, feats);
  ProbSequence cycled = ien_forward(permuted, feats);
  for (std::size_t t = 0; t < base.size(); ++t) {
    CHECK(cycled[t][1] == doctest::Approx(base[t][0]).epsilon(1e-14));
    CHECK(cycled[t][2] == doctest::Approx(base[t][1]).epsilon(1e-14));
    CHECK(cycled[t][0] == doctest::Approx(base[t][2]).epsilon(1e-14));
  }
}

TEST_CASE("single-step scalar network matches the composed hand trace") {
  // d_v = d_e = d_h = 1, unit embedding and cell weights, x_t = x_0:
  // the embedding maps feat 1 to elu(1) = 1, the cell reproduces the
  // frozen scalar trace, and the classifier sees its hidden value.
  IenConfig c;
  c.T_plus_1 = 1;
  c.d_v = 1;
  c.d_e = 1;
  c.d_h = 1;
  c.K = 1;
  IenModel model = init_model(c, 0);
  model.embed.W.value.data = {1.0};
  for (Parameter* p : model.cell.parameters()) {
    std::fill(p->value.data.begin(), p->value.data.end(), 1.0);
  }
  model.W_cls.value.data = {1.0, 0.5};

  ProbSequence probs = ien_forward(model, {Vec{1.0}});
  REQUIRE(probs.size() == 1);
  const double h = kScalarIeuHidden;
  const Vec expected = softmax(Vec{1.0 * h, 0.5 * h});
  CHECK(probs[0][0] == doctest::Approx(expected[0]).epsilon(1e-15));
  CHECK(probs[0][1] == doctest::Approx(expected[1]).epsilon(1e-15));
}

TEST_CASE("single-chunk lstm_plain gradients flow through one cell step") {
  // With a window of one chunk the only input path is the single
  // timestep, which the finite-difference oracle pins down exactly.
  Rng rng(52);
  IenConfig c;
  c.T_plus_1 = 1;
  c.d_v = 3;
  c.d_e = 2;
  c.d_h = 2;
  c.K = 1;
  c.cell_variant = CellVariant::LstmPlain;
  for (int inst = 0; inst < 5; ++inst) {
    IenModel model = init_model(c, rng.next_u64());
    std::vector<Vec> feats = random_feats(rng, 1, 3);
    std::vector<int> labels{static_cast<int>(rng.index(2))};
    IenTrace trace;
    ien_forward(model, feats, &trace);
    ien_backward(model, trace, labels);
    const std::vector<Parameter*> plist = model.parameters();
    const std::vector<double> analytic = gradcheck::flatten_grads(
        std::vector<const Parameter*>(plist.begin(), plist.end()));
    const std::vector<double> point = gradcheck::flatten_values(
        std::vector<const Parameter*>(plist.begin(), plist.end()));
    IenModel probe = init_model(c, 0);
    auto objective = [&](const std::vector<double>& x) {
      gradcheck::unflatten_values(x, probe.parameters());
      return ien_loss(ien_forward(probe, feats), labels);
    };
    const std::vector<double> numeric = finite_diff_gradient(objective, point);
    CHECK(gradcheck::max_rel_err(analytic, numeric) <= 1e-4);
  }
}

TEST_CASE("loss closed forms") {
  ProbSequence uniform(8, Vec{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1};
  CHECK(ien_loss(uniform, labels) ==
        doctest::Approx(8.0 * std::log(3.0)).epsilon(1e-15));

  ProbSequence perfect;
  std::vector<int> ys;
  for (int t = 0; t < 8; ++t) {
    Vec row(3, 0.0);
    row[t % 3] = 1.0;
    perfect.push_back(row);
    ys.push_back(t % 3);
  }
  CHECK(ien_loss(perfect, ys) <= 8e-12);

  ProbSequence pair{{0.7, 0.3}, {0.4, 0.6}};
  CHECK(ien_loss(pair, {0, 1}) ==
        doctest::Approx(0.86750056770472317).epsilon(1e-15));
}

TEST_CASE("loss validates labels") {
  ProbSequence probs{{0.5, 0.5}};
  CHECK_THROWS_AS(ien_loss(probs, {2}), UsageError);
  CHECK_THROWS_AS(ien_loss(probs, {-1}), UsageError);
  CHECK_THROWS_AS(ien_loss(probs, {0, 1}), ShapeError);
}

TEST_CASE("full-model gradients match finite differences") {
  Rng rng(44);
  for (CellVariant v : kAllVariants) {
    for (int inst = 0; inst < 20; ++inst) {
      IenModel model = init_model(tiny_config(v), rng.next_u64());
      std::vector<Vec> feats = random_feats(rng, 3, 3);
      std::vector<int> labels{static_cast<int>(rng.index(2)),
                              static_cast<int>(rng.index(2)),
                              static_cast<int>(rng.index(2))};

      IenTrace trace;
      ien_forward(model, feats, &trace);
      ien_backward(model, trace, labels);
      const std::vector<Parameter*> plist = model.parameters();
      const std::vector<double> analytic = gradcheck::flatten_grads(
          std::vector<const Parameter*>(plist.begin(), plist.end()));
      const std::vector<double> point = gradcheck::flatten_values(
          std::vector<const Parameter*>(plist.begin(), plist.end()));

      IenModel probe = init_model(tiny_config(v), 0);
      auto objective = [&](const std::vector<double>& x) {
        gradcheck::unflatten_values(x, probe.parameters());
        return ien_loss(ien_forward(probe, feats), labels);
      };
      const std::vector<double> numeric = finite_diff_gradient(objective, point);

      const double worst = gradcheck::max_rel_err(analytic, numeric);
      INFO("variant=" << to_string(v) << " err=" << worst);
      CHECK(worst <= 1e-4);
    }
  }
}

TEST_CASE("full-model gradients also hold in addition merge") {
  Rng rng(45);
  for (CellVariant v : kAllVariants) {
    for (int inst = 0; inst < 5; ++inst) {
      IenModel model = init_model(tiny_config(v, MergeMode::Addition),
                                  rng.next_u64());
      std::vector<Vec> feats = random_feats(rng, 3, 3);
      std::vector<int> labels{0, 1, 0};

      IenTrace trace;
      ien_forward(model, feats, &trace);
      ien_backward(model, trace, labels);
      const std::vector<Parameter*> plist = model.parameters();
      const std::vector<double> analytic = gradcheck::flatten_grads(
          std::vector<const Parameter*>(plist.begin(), plist.end()));
      const std::vector<double> point = gradcheck::flatten_values(
          std::vector<const Parameter*>(plist.begin(), plist.end()));

      IenModel probe = init_model(tiny_config(v, MergeMode::Addition), 0);
      auto objective = [&](const std::vector<double>& x) {
        gradcheck::unflatten_values(x, probe.parameters());
        return ien_loss(ien_forward(probe, feats), labels);
      };
      const std::vector<double> numeric = finite_diff_gradient(objective, point);
      CHECK(gradcheck::max_rel_err(analytic, numeric) <= 1e-4);
    }
  }
}

TEST_CASE("near-perfect predictions produce near-zero gradients") {
  // Scale the classifier until every chunk's top probability saturates,
  // then label with the argmax and check the whole gradient is tiny.
  IenConfig c = tiny_config(CellVariant::LstmPlain);
  IenModel model = init_model(c, 5);
  Rng rng(46);
  std::vector<Vec> feats = random_feats(rng, c.T_plus_1, c.d_v);

  IenTrace trace;
  double worst_top = 0.0;
  for (int attempt = 0; attempt < 8 && worst_top < 1.0 - 1e-9; ++attempt) {
    for (double& wv : model.W_cls.value.data) wv *= 10.0;
    worst_top = 1.0;
    for (const Vec& row : ien_forward(model, feats, &trace)) {
      worst_top = std::min(worst_top, *std::max_element(row.begin(), row.end()));
    }
  }
  REQUIRE(worst_top >= 1.0 - 1e-9);

  std::vector<int> labels;
  for (const Vec& row : trace.probs) {
    labels.push_back(row[0] >= row[1] ? 0 : 1);
  }
  ien_backward(model, trace, labels);
  for (const Parameter* p : model.parameters()) {
    for (double g : p->grad.data) CHECK(std::abs(g) <= 1e-6);
  }
}

TEST_CASE("training for zero epochs leaves the model bit-identical") {
  IenConfig c = tiny_config(CellVariant::Ieu);
  IenModel model = init_model(c, 11);
  IenModel before = init_model(c, 11);
  Rng rng(47);
  std::vector<LabeledSegment> data{{random_feats(rng, 3, 3), {0, 1, 0}}};
  TrainOptions opts;
  opts.epochs = 0;
  const std::vector<double> losses = train(model, data, opts);
  CHECK(losses.empty());
  CHECK(models_bit_equal(model, before));
}

TEST_CASE("training rejects an empty dataset") {
  IenModel model = init_model(tiny_config(CellVariant::Ieu), 11);
  TrainOptions opts;
  CHECK_THROWS_AS(train(model, {}, opts), UsageError);
}

TEST_CASE("training is bit-deterministic under a fixed seed") {
  StreamSpec spec;
  spec.K = 2;
  spec.d_v = 6;
  spec.stream_len = 60;
  spec.seed = 99;
  LabeledStream stream = generate_stream(spec);
  std::vector<LabeledSegment> data = segment_windows(stream, 4);

  IenConfig c;
  c.T_plus_1 = 4;
  c.d_v = 6;
  c.d_e = 8;
  c.d_h = 8;
  c.K = 2;
  TrainOptions opts;
  opts.epochs = 3;
  opts.seed = 123;

  IenModel a = init_model(c, 5);
  IenModel b = init_model(c, 5);
  const std::vector<double> la = train(a, data, opts);
  const std::vector<double> lb = train(b, data, opts);
  CHECK(la == lb);
  CHECK(models_bit_equal(a, b));

  // Epoch indices in the loss log are implicitly monotone; the trace has
  // exactly one entry per epoch.
  CHECK(la.size() == opts.epochs);
}

TEST_CASE("separable data trains to high accuracy within 50 epochs") {
  StreamSpec spec;
  spec.K = 2;
  spec.d_v = 8;
  spec.stream_len = 240;
  spec.evidence_mode = EvidenceMode::Persistent;
  spec.noise_sigma = 0.15;
  spec.background_rate = 0.34;
  spec.seed = 7;
  LabeledStream stream = generate_stream(spec);

  IenConfig c;
  c.T_plus_1 = 4;
  c.d_v = 8;
  c.d_e = 12;
  c.d_h = 12;
  c.K = 2;
  IenModel model = init_model(c, 21);

  std::vector<LabeledSegment> data = segment_windows(stream, c.T_plus_1);
  TrainOptions opts;
  opts.epochs = 50;
  opts.batch_size = 32;
  opts.lr = 1e-2;
  opts.seed = 2;
  const std::vector<double> losses = train(model, data, opts);
  CHECK(losses.back() < losses.front());

  // Fresh episodes over the same class prototypes.
  LabeledStream test_stream = generate_stream_with_episodes(spec, spec.seed + 1);
  std::vector<LabeledSegment> test = segment_windows(test_stream, c.T_plus_1);
  std::size_t hits = 0;
  for (const LabeledSegment& seg : test) {
    const Vec p = predict_current(model, seg.feats);
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.size(); ++k) {
      if (p[k] > p[best]) best = k;
    }
    if (static_cast<int>(best) == seg.labels.back()) ++hits;
  }
  const double accuracy = static_cast<double>(hits) / test.size();
  INFO("held-out accuracy " << accuracy);
  CHECK(accuracy >= 0.99);
}

TEST_CASE("predict_current is the last probability row") {
  IenModel model = init_model(tiny_config(CellVariant::LstmBundle), 31);
  Rng rng(48);
  std::vector<Vec> feats = random_feats(rng, 3, 3);
  CHECK(predict_current(model, feats) == ien_forward(model, feats).back());
}

TEST_CASE("stream inference matches offline windows bit for bit") {
  IenConfig c;
  c.T_plus_1 = 4;
  c.d_v = 5;
  c.d_e = 6;
  c.d_h = 6;
  c.K = 2;
  IenModel model = init_model(c, 77);

  Rng rng(49);
  std::vector<Vec> chunks = random_feats(rng, 20, c.d_v);

  StreamSession session(model);
  for (std::size_t n = 0; n < chunks.size(); ++n) {
    const Vec online = session.push(chunks[n]);

    // Zero-padded window ending at chunk n, built independently.
    std::vector<Vec> window;
    for (std::size_t t = 0; t < c.T_plus_1; ++t) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(n + 1 + t) -
                                 static_cast<std::ptrdiff_t>(c.T_plus_1);
      window.push_back(src < 0 ? Vec(c.d_v, 0.0)
                               : chunks[static_cast<std::size_t>(src)]);
    }
    CHECK(online == predict_current(model, window));
  }
}

TEST_CASE("stream inference rejects a misshapen chunk") {
  IenModel model = init_model(tiny_config(CellVariant::Ieu), 7);
  StreamSession session(model);
  CHECK_THROWS_AS(session.push(Vec{1.0}), ShapeError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  namespace fs = std::filesystem;
  for (CellVariant v : kAllVariants) {
    IenConfig c = tiny_config(v);
    c.K = 3;
    IenModel model = init_model(c, 1234);
    const fs::path path = fs::temp_directory_path() / "ien_test_model.ienm";
    save_model(path.string(), model);
    IenModel loaded = load_model(path.string());
    CHECK(loaded.config.K == c.K);
    CHECK(loaded.config.cell_variant == v);
    CHECK(models_bit_equal(model, loaded));
    fs::remove(path);
  }
}

TEST_CASE("checkpoint loading rejects malformed files") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "ien_test_model_bad.ienm";

  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE";
  }
  CHECK_THROWS_WITH_AS(load_model(path.string()),
                       doctest::Contains("byte offset 0"), FormatError);

  IenModel model = init_model(tiny_config(CellVariant::Ieu), 4);
  save_model(path.string(), model);
  const auto full = fs::file_size(path);
  fs::resize_file(path, full - 9);
  CHECK_THROWS_AS(load_model(path.string()), FormatError);
  fs::remove(path);

  CHECK_THROWS_AS(load_model("/nonexistent/model.ienm"), IoError);
}

TEST_CASE("label permutation equivariance on a trained model") {
  StreamSpec spec;
  spec.K = 2;
  spec.d_v = 6;
  spec.stream_len = 80;
  spec.seed = 55;
  LabeledStream stream = generate_stream(spec);

  IenConfig c;
  c.T_plus_1 = 4;
  c.d_v = 6;
  c.d_e = 8;
  c.d_h = 8;
  c.K = 2;
  IenModel model = init_model(c, 66);
  TrainOptions opts;
  opts.epochs = 4;
  opts.seed = 3;
  std::vector<LabeledSegment> data = segment_windows(stream, c.T_plus_1);
  train(model, data, opts);

  // Swap classes 1 and 2 in the classifier.
  IenModel swapped = model;
  for (std::size_t col = 0; col < c.d_h; ++col) {
    swapped.W_cls.value(1, col) = model.W_cls.value(2, col);
    swapped.W_cls.value(2, col) = model.W_cls.value(1, col);
  }
  Rng rng(50);
  std::vector<Vec> feats = random_feats(rng, c.T_plus_1, c.d_v);
  const Vec base = predict_current(model, feats);
  const Vec perm = predict_current(swapped, feats);
  CHECK(perm[0] == doctest::Approx(base[0]).epsilon(1e-14));
  CHECK(perm[1] == doctest::Approx(base[2]).epsilon(1e-14));
  CHECK(perm[2] == doctest::Approx(base[1]).epsilon(1e-14));
}
