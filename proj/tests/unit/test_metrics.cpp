#include "doctest.h"

#include "hicom/metrics.hpp"
#include "hicom/rng.hpp"

#include <vector>

using namespace hicom;

namespace {

// Brute-force recount from scratch, structured nothing like the implementation.
EvalReport oracle(const std::vector<std::vector<int>>& truth,
                  const std::vector<std::vector<int>>& pred, int num_classes) {
  EvalReport r;
  r.per_class.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      bool in_t = false, in_p = false;
      for (int x : truth[i]) in_t = in_t || x == c;
      for (int x : pred[i]) in_p = in_p || x == c;
      if (in_t && in_p) ++tp;
      if (!in_t && in_p) ++fp;
      if (in_t && !in_p) ++fn;
    }
    r.per_class[c] = {tp, fp, fn};
  }
  double macro = 0.0;
  long tps = 0, fps = 0, fns = 0;
  for (const ClassCounts& c : r.per_class) {
    const long den = 2 * c.tp + c.fp + c.fn;
    macro += den == 0 ? 0.0 : 2.0 * c.tp / den;
    tps += c.tp;
    fps += c.fp;
    fns += c.fn;
  }
  r.f1_macro = macro / num_classes;
  const long den = 2 * tps + fps + fns;
  r.f1_micro = den == 0 ? 0.0 : 2.0 * tps / den;
  return r;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("hand-computed two-class macro F1") {
    // Class 0 ends at tp=1 fp=1 fn=1 -> f1 = 0.5; class 1 at tp=2 fp=0 fn=2
    // -> f1 = 2/3.
    std::vector<std::vector<int>> truth = {{0}, {0}, {}, {1}, {1}, {1}, {1}};
    std::vector<std::vector<int>> pred = {{0}, {}, {0}, {1}, {1}, {}, {}};
    EvalReport r = compute_metrics(truth, pred, 2);
    CHECK(r.per_class[0].tp == 1);
    CHECK(r.per_class[0].fp == 1);
    CHECK(r.per_class[0].fn == 1);
    CHECK(r.per_class[1].tp == 2);
    CHECK(r.per_class[1].fp == 0);
    CHECK(r.per_class[1].fn == 2);
    CHECK(r.f1_macro == doctest::Approx((0.5 + 2.0 / 3.0) / 2).epsilon(1e-12));
  }

  TEST_CASE("perfect and disjoint predictions") {
    std::vector<std::vector<int>> truth = {{0, 2}, {1}, {2}};
    CHECK(compute_metrics(truth, truth, 3).f1_macro == doctest::Approx(1.0));
    CHECK(compute_metrics(truth, truth, 3).f1_micro == doctest::Approx(1.0));
    std::vector<std::vector<int>> pred = {{1}, {0}, {1}};
    CHECK(compute_metrics(truth, pred, 3).f1_macro == doctest::Approx(0.0));
    CHECK(compute_metrics(truth, pred, 3).f1_micro == doctest::Approx(0.0));
  }

  TEST_CASE("absent classes count as zero in the macro average") {
    std::vector<std::vector<int>> truth = {{0}};
    std::vector<std::vector<int>> pred = {{0}};
    EvalReport r = compute_metrics(truth, pred, 4);
    CHECK(r.f1_macro == doctest::Approx(0.25));
    CHECK(r.f1_micro == doctest::Approx(1.0));
  }

  TEST_CASE("duplicates and order are ignored") {
    std::vector<std::vector<int>> truth = {{2, 0, 2}};
    std::vector<std::vector<int>> pred = {{0, 2}};
    EvalReport a = compute_metrics(truth, pred, 3);
    std::vector<std::vector<int>> truth2 = {{0, 2}};
    std::vector<std::vector<int>> pred2 = {{2, 2, 0}};
    EvalReport b = compute_metrics(truth2, pred2, 3);
    CHECK(a.f1_macro == doctest::Approx(b.f1_macro));
    CHECK(a.f1_micro == doctest::Approx(b.f1_micro));
  }

  TEST_CASE("matches the brute-force oracle on random instances") {
    Rng rng(404);
    for (int it = 0; it < 200; ++it) {
      const int classes = 1 + static_cast<int>(rng.uniform_int(0, 4));
      const int nodes = 1 + static_cast<int>(rng.uniform_int(0, 49));
      std::vector<std::vector<int>> truth(nodes), pred(nodes);
      for (int i = 0; i < nodes; ++i) {
        for (int c = 0; c < classes; ++c) {
          if (rng.uniform_real() < 0.3) truth[i].push_back(c);
          if (rng.uniform_real() < 0.3) pred[i].push_back(c);
        }
      }
      EvalReport got = compute_metrics(truth, pred, classes);
      EvalReport want = oracle(truth, pred, classes);
      REQUIRE(got.f1_macro == doctest::Approx(want.f1_macro).epsilon(1e-12));
      REQUIRE(got.f1_micro == doctest::Approx(want.f1_micro).epsilon(1e-12));
      for (int c = 0; c < classes; ++c) {
        REQUIRE(got.per_class[c].tp == want.per_class[c].tp);
        REQUIRE(got.per_class[c].fp == want.per_class[c].fp);
        REQUIRE(got.per_class[c].fn == want.per_class[c].fn);
      }
    }
  }

  TEST_CASE("json serialization is key-ordered and complete") {
    std::vector<std::vector<int>> truth = {{0}, {1}};
    std::vector<std::vector<int>> pred = {{0}, {0}};
    EvalReport r = compute_metrics(truth, pred, 2);
    r.split_sizes["test"] = 2;
    auto j = r.to_json();
    CHECK(j.contains("f1_macro"));
    CHECK(j.contains("f1_micro"));
    CHECK(j.contains("per_class"));
    CHECK(j.contains("split_sizes"));
    CHECK(j["per_class"].size() == 2);
    // Byte-stable dump: serializing twice gives identical text.
    CHECK(j.dump() == r.to_json().dump());
  }
}
