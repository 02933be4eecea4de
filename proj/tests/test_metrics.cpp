// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ien/metrics.hpp"
#include "metrics_oracle.hpp"

using namespace ien;

namespace {

// Random evaluation set with at least one positive action frame; an
// optional quantization step forces score ties.
EvalSet random_eval_set(Rng& rng, std::size_t max_n, std::size_t max_k,
                        bool quantize) {
  EvalSet eval;
  const std::size_t n = 1 + rng.index(max_n);
  const std::size_t k = 1 + rng.index(max_k);
  for (std::size_t i = 0; i < n; ++i) {
    Vec logits(k + 1);
    for (double& x : logits) x = rng.uniform(-2.0, 2.0);
    Vec p = softmax(logits);
    if (quantize) {
      double sum = 0.0;
      for (double& q : p) {
        q = std::round(q * 10.0) / 10.0;
        sum += q;
      }
      if (sum <= 0.0) sum = 1.0;
      for (double& q : p) q /= sum;
    }
    eval.probs.push_back(std::move(p));
    eval.labels.push_back(static_cast<int>(rng.index(k + 1)));
  }
  eval.labels[rng.index(n)] = 1;  // guarantee a defined class
  return eval;
}

}  // namespace

TEST_CASE("rank_frames orders by score with index tie-breaks") {
  EvalSet eval;
  eval.probs = {{0.5, 0.5}, {0.1, 0.9}, {0.5, 0.5}};
  eval.labels = {1, 1, 0};
  CHECK(rank_frames(eval, 1) == std::vector<std::size_t>{1, 0, 2});

  EvalSet equal;
  equal.probs = {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
  equal.labels = {0, 1, 0};
  CHECK(rank_frames(equal, 1) == std::vector<std::size_t>{0, 1, 2});

  EvalSet distinct;
  distinct.probs = {{0.7, 0.3}, {0.2, 0.8}, {0.6, 0.4}};
  distinct.labels = {0, 1, 0};
  CHECK(rank_frames(distinct, 1) == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("average precision closed forms") {
  CHECK(*average_precision({true, false, true}) ==
        doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(*average_precision({true, true, false, false}) == 1.0);
  CHECK(*average_precision({true}) == 1.0);
  CHECK(!average_precision({false, false}).has_value());
  CHECK(!average_precision({}).has_value());
}

TEST_CASE("calibrated average precision closed forms") {
  // w = 2 on [pos, neg, pos]: 1/1 and 2/(2 + 1/2) averaged.
  CHECK(*calibrated_average_precision({true, false, true}, 2.0) ==
        doctest::Approx(0.9).epsilon(1e-15));
  CHECK(*calibrated_average_precision({true, true, false}, 7.5) == 1.0);
  CHECK(!calibrated_average_precision({false}, 2.0).has_value());
  CHECK_THROWS_AS(calibrated_average_precision({true}, 0.0), UsageError);
  CHECK_THROWS_AS(calibrated_average_precision({true}, -1.0), UsageError);
}

TEST_CASE("calibrated AP at w = 1 is bitwise AP") {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<bool> flags(1 + rng.index(40));
    bool any = false;
    for (std::size_t i = 0; i < flags.size(); ++i) {
      flags[i] = rng.next_unit() < 0.4;
      any = any || flags[i];
    }
    if (!any) flags[rng.index(flags.size())] = true;
    CHECK(*calibrated_average_precision(flags, 1.0) == *average_precision(flags));
  }
}

TEST_CASE("mean average precision over classes") {
  // Class 1 perfectly ranked (AP 1); class 2's lone positive sits below
  // one negative (AP 1/2).
  EvalSet eval;
  eval.probs = {
      {0.0, 0.9, 0.1}, {0.2, 0.8, 0.0}, {0.1, 0.0, 0.9}, {0.2, 0.0, 0.8}};
  eval.labels = {1, 1, 0, 2};
  ApResult r = mean_average_precision(eval);
  CHECK(r.per_class.at(1) == 1.0);
  CHECK(r.per_class.at(2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.mean == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(r.skipped_classes.empty());
}

TEST_CASE("classes without positives are skipped, not averaged") {
  EvalSet eval;
  eval.probs = {{0.1, 0.6, 0.3}, {0.2, 0.7, 0.1}, {0.8, 0.1, 0.1}};
  eval.labels = {1, 1, 0};  // class 2 never occurs
  ApResult r = mean_average_precision(eval);
  CHECK(r.per_class.count(2) == 0);
  CHECK(r.skipped_classes == std::vector<int>{2});
  CHECK(r.mean == r.per_class.at(1));

  EvalSet empty;
  empty.probs = {{0.9, 0.05, 0.05}};
  empty.labels = {0};
  CHECK_THROWS_AS(mean_average_precision(empty), UsageError);
}

TEST_CASE("balanced classes make mcAP coincide with mAP") {
  EvalSet eval;
  eval.probs = {{0.1, 0.9}, {0.3, 0.7}, {0.8, 0.2}, {0.6, 0.4}};
  eval.labels = {1, 1, 0, 0};  // two positives, two negatives: w = 1
  ApResult ap = mean_average_precision(eval);
  ApResult cap = mean_calibrated_ap(eval);
  CHECK(cap.mean == ap.mean);
}

TEST_CASE("single positive among three negatives uses w = 3") {
  EvalSet eval;
  eval.probs = {{0.2, 0.8}, {0.4, 0.6}, {0.9, 0.1}, {0.7, 0.3}};
  eval.labels = {0, 1, 0, 0};
  // Ranked for class 1: frame 0 (0.8), frame 1 (0.6), ... the positive
  // lands at cut-off 2 with one false positive above it.
  const double expected = 1.0 / (1.0 + 1.0 / 3.0);
  ApResult r = mean_calibrated_ap(eval);
  CHECK(r.per_class.at(1) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("AP stays within [0,1] and hits 1 exactly for perfect rankings") {
  Rng rng(32);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<bool> flags(1 + rng.index(30));
    std::size_t positives = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
      flags[i] = rng.next_unit() < 0.5;
      if (flags[i]) ++positives;
    }
    if (positives == 0) continue;
    const double ap = *average_precision(flags);
    CHECK(ap >= 0.0);
    CHECK(ap <= 1.0);

    // AP == 1 exactly when every positive precedes every negative.
    bool seen_negative = false;
    bool perfect = true;
    for (bool f : flags) {
      if (f && seen_negative) perfect = false;
      if (!f) seen_negative = true;
    }
    CHECK((ap == 1.0) == perfect);
  }
}

TEST_CASE("promoting a positive past an adjacent negative never lowers AP") {
  Rng rng(33);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<bool> flags(2 + rng.index(30));
    std::size_t positives = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
      flags[i] = rng.next_unit() < 0.5;
      if (flags[i]) ++positives;
    }
    if (positives == 0) flags[flags.size() - 1] = true;
    for (std::size_t i = 0; i + 1 < flags.size(); ++i) {
      if (!flags[i] && flags[i + 1]) {
        std::vector<bool> promoted = flags;
        promoted[i] = true;
        promoted[i + 1] = false;
        CHECK(*average_precision(promoted) >= *average_precision(flags));
        break;
      }
    }
  }
}

TEST_CASE("library metrics equal the brute-force oracle") {
  Rng rng(34);
  for (int trial = 0; trial < 1000; ++trial) {
    EvalSet eval = random_eval_set(rng, 50, 5, trial % 3 == 0);

    ApResult ap = mean_average_precision(eval);
    auto oracle_ap = metrics_oracle::mean_ap(eval, false);
    REQUIRE(oracle_ap.has_value());
    CHECK(std::abs(ap.mean - oracle_ap->mean) <= 1e-12);
    CHECK(ap.per_class.size() == oracle_ap->defined_classes);

    ApResult cap = mean_calibrated_ap(eval);
    auto oracle_cap = metrics_oracle::mean_ap(eval, true);
    REQUIRE(oracle_cap.has_value());
    CHECK(std::abs(cap.mean - oracle_cap->mean) <= 1e-12);

    // Spot-check one class end to end, including the ranking.
    const int k = 1;
    auto lib_rank = rank_frames(eval, k);
    CHECK(lib_rank == metrics_oracle::rank(eval, k));
    if (ap.per_class.count(k)) {
      CHECK(std::abs(ap.per_class.at(k) - *metrics_oracle::ap(eval, k)) <= 1e-12);
    }
  }
}

TEST_CASE("timeline CSV round-trips through read_eval_csv") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "ien_test_timeline.csv";
  {
    std::ofstream out(path);
    out << "chunk_index,label,p_0,p_1,p_2\n";
    out << "0,1,0.25,0.5,0.25\n";
    out << "1,0,0.9,0.05,0.05\n";
  }
  EvalSet eval = read_eval_csv(path.string());
  REQUIRE(eval.size() == 2);
  CHECK(eval.labels == std::vector<int>{1, 0});
  CHECK(eval.probs[0] == Vec{0.25, 0.5, 0.25});
  fs::remove(path);

  CHECK_THROWS_AS(read_eval_csv("/nonexistent/timeline.csv"), IoError);
}

TEST_CASE("malformed timeline rows are format errors") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "ien_test_timeline_bad.csv";
  {
    std::ofstream out(path);
    out << "chunk_index,label,p_0,p_1\n";
    out << "0,zero,0.5,0.5\n";
  }
  CHECK_THROWS_AS(read_eval_csv(path.string()), FormatError);
  fs::remove(path);
}
