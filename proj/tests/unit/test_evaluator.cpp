#include <doctest.h>

#include <algorithm>

#include "oracle.hpp"
#include "stutterkit/error.hpp"
#include "stutterkit/evaluator.hpp"
#include "stutterkit/model.hpp"
#include "stutterkit/random.hpp"

using namespace stutterkit;

namespace {

LabelVector bits(std::initializer_list<int> b) {
  LabelVector v;
  std::size_t i = 0;
  for (int x : b) v.set(i++, x != 0);
  return v;
}

std::vector<LabelVector> random_set(Rng& rng, std::size_t n, double p) {
  std::vector<LabelVector> out(n);
  for (auto& v : out) {
    for (std::size_t c = 0; c < kNumClasses; ++c) v.set(c, rng.uniform() < p);
  }
  return out;
}

}  // namespace

TEST_CASE("predict thresholds sigmoid probabilities") {
  Logits zeros{};
  CHECK(predict(zeros, 0.5).count() == 6);
  Logits neg{{-10, -10, -10, -10, -10, -10}};
  CHECK(predict(neg, 0.5).count() == 0);
  Logits mixed{{2, -2, 0, 0, 0, 0}};
  const auto p = predict(mixed, 0.5);
  CHECK(p[0]);
  CHECK_FALSE(p[1]);
  CHECK_FALSE(predict(mixed, 0.89)[0]);  // sigmoid(2) ~ 0.8808
  CHECK(predict(mixed, 0.88)[0]);
  CHECK_THROWS_AS(predict(mixed, 0.0), Error);
  CHECK_THROWS_AS(predict(mixed, 1.0), Error);
}

TEST_CASE("hand case on three classes") {
  const std::vector<LabelVector> targets = {bits({1, 0, 1}), bits({0, 1, 0})};
  const std::vector<LabelVector> preds = {bits({1, 0, 0}), bits({0, 1, 0})};
  const auto r = f1_report(preds, targets, 0.5, 3);
  REQUIRE(r.per_class_f1.size() == 3);
  CHECK(r.per_class_f1[0] == 1.0);
  CHECK(r.per_class_f1[1] == 1.0);
  CHECK(r.per_class_f1[2] == 0.0);
  CHECK(r.macro_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.micro_f1 == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.weighted_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("identity and complement") {
  Rng rng(1);
  const auto t = random_set(rng, 20, 0.4);
  const auto same = f1_report(t, t);
  CHECK(same.micro_f1 == 1.0);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (same.per_class_counts[c].support > 0) CHECK(same.per_class_f1[c] == 1.0);
  }
  std::vector<LabelVector> inv;
  for (const auto& v : t) {
    LabelVector w;
    for (std::size_t c = 0; c < kNumClasses; ++c) w.set(c, !v[c]);
    inv.push_back(w);
  }
  CHECK(f1_report(inv, t).micro_f1 == 0.0);
}

TEST_CASE("matches brute-force counting") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(32);
    const auto t = random_set(rng, n, rng.uniform());
    const auto p = random_set(rng, n, rng.uniform());
    const auto r = f1_report(p, t);
    const auto b = oracle::brute_f1(p, t, kNumClasses);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      CHECK(r.per_class_counts[c].tp == b.tp[c]);
      CHECK(r.per_class_counts[c].fp == b.fp[c]);
      CHECK(r.per_class_counts[c].fn == b.fn[c]);
      CHECK(r.per_class_counts[c].support == b.support[c]);
      CHECK(r.per_class_f1[c] == doctest::Approx(b.f1[c]).epsilon(1e-12));
    }
    CHECK(r.micro_f1 == doctest::Approx(b.micro).epsilon(1e-12));
    CHECK(r.macro_f1 == doctest::Approx(b.macro).epsilon(1e-12));
    CHECK(r.weighted_f1 == doctest::Approx(b.weighted).epsilon(1e-12));
  }
}

TEST_CASE("order invariance, relabeling and monotonicity") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    auto t = random_set(rng, n, 0.5);
    auto p = random_set(rng, n, 0.5);
    const auto base = f1_report(p, t);

    std::vector<std::size_t> perm = {0};
    perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<LabelVector> tp, pp;
    for (auto i : perm) {
      tp.push_back(t[i]);
      pp.push_back(p[i]);
    }
    const auto shuffled = f1_report(pp, tp);
    CHECK(shuffled.micro_f1 == base.micro_f1);
    CHECK(shuffled.macro_f1 == base.macro_f1);
    CHECK(shuffled.weighted_f1 == base.weighted_f1);

    // Rotating class indices leaves micro and macro unchanged.
    const auto rotate = [](const LabelVector& v) {
      LabelVector w;
      for (std::size_t c = 0; c < kNumClasses; ++c) w.set((c + 1) % kNumClasses, v[c]);
      return w;
    };
    std::vector<LabelVector> tr, pr;
    for (std::size_t i = 0; i < n; ++i) {
      tr.push_back(rotate(t[i]));
      pr.push_back(rotate(p[i]));
    }
    const auto relabeled = f1_report(pr, tr);
    CHECK(relabeled.micro_f1 == doctest::Approx(base.micro_f1).epsilon(1e-15));
    CHECK(relabeled.macro_f1 == doctest::Approx(base.macro_f1).epsilon(1e-12));

    // Turning one false negative into a true positive never lowers micro F1.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (t[i][c] && !p[i][c]) {
          auto fixed = p;
          fixed[i].set(c, true);
          CHECK(f1_report(fixed, t).micro_f1 >= base.micro_f1);
          goto next_trial;
        }
      }
    }
  next_trial:;
  }
}

TEST_CASE("weighted equals macro under equal supports") {
  // Every class has support 2.
  std::vector<LabelVector> t(2), p(2);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    t[0].set(c);
    t[1].set(c);
    p[0].set(c, c % 2 == 0);
    p[1].set(c, c % 3 == 0);
  }
  const auto r = f1_report(p, t);
  CHECK(r.weighted_f1 == doctest::Approx(r.macro_f1).epsilon(1e-15));
}

TEST_CASE("zero support and errors") {
  const std::vector<LabelVector> none(3);
  const auto r = f1_report(none, none);
  CHECK(r.micro_f1 == 0.0);
  CHECK(r.macro_f1 == 0.0);
  CHECK(r.weighted_f1 == 0.0);
  try {
    f1_report(std::vector<LabelVector>(2), std::vector<LabelVector>(3));
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::length_mismatch);
  }
  try {
    f1_report(std::vector<LabelVector>{}, std::vector<LabelVector>{});
    FAIL("expected EmptySet");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_set);
  }
}

TEST_CASE("report rendering") {
  const std::vector<LabelVector> t = {bits({1, 0, 0, 0, 0, 0}), bits({0, 0, 0, 0, 0, 1})};
  const auto r = f1_report(t, t, 0.3);
  const auto json = r.to_json();
  for (const char* key : {"micro_f1", "macro_f1", "weighted_f1", "per_class", "threshold", "n_examples"}) {
    CHECK(json.find(key) != std::string::npos);
  }
  const auto table = r.to_table();
  CHECK(table.find("Micro") < table.find("Macro"));
  CHECK(table.find("Macro") < table.find("Weighted"));
  CHECK(table.find("Weighted") < table.find("Block"));
  CHECK(table.find("NoStutteredWords") != std::string::npos);
}
