#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "glot/error.hpp"
#include "glot/metrics.hpp"
#include "glot/random.hpp"
#include "support/metric_refs.hpp"

using namespace glot;
using namespace glot::testing;

TEST_CASE("metric examples") {
  const PredictionDump perfect{{1, 0, 1, 1, 0}, {1, 0, 1, 1, 0}};
  CHECK(accuracy(perfect) == 1.0);
  CHECK(f1_binary(perfect) == 1.0);
  CHECK(mcc(perfect) == doctest::Approx(1.0));
  CHECK(spearman(PredictionDump{{3, 2, 1}, {1, 2, 3}}) == doctest::Approx(-1.0));
  CHECK(mcc(PredictionDump{{1, 0, 1, 0}, {1, 0, 0, 1}}) == 0.0);
  CHECK(spearman(PredictionDump{{1, 2, 3}, {10, 20, 30}}) == doctest::Approx(1.0));
  CHECK(f1_binary(PredictionDump{{0, 0}, {1, 0}}) == 0.0);
  CHECK(mcc(PredictionDump{{1, 1, 1}, {1, 0, 1}}) == 0.0);
  CHECK(accuracy(PredictionDump{{2, 1, 0}, {2, 2, 0}}) == doctest::Approx(2.0 / 3));
}

TEST_CASE("average ranks") {
  const std::vector<double> v{10, 20, 20, 5, 20};
  CHECK(average_ranks(v) == std::vector<double>{2, 4, 4, 1, 4});
  const std::vector<double> one{7};
  CHECK(average_ranks(one) == std::vector<double>{1});
}

TEST_CASE("metric errors") {
  CHECK_THROWS_AS(accuracy(PredictionDump{{}, {}}), InvalidArgument);
  CHECK_THROWS_AS(accuracy(PredictionDump{{1}, {1, 0}}), InvalidArgument);
  CHECK_THROWS_AS(f1_binary(PredictionDump{{2}, {1}}), InvalidArgument);
  CHECK_THROWS_AS(mcc(PredictionDump{{0.5}, {1}}), InvalidArgument);
  CHECK_THROWS_AS(spearman(PredictionDump{{1, 2, 3}, {4, 4, 4}}), InvalidArgument);
  CHECK_THROWS_AS(spearman(PredictionDump{{1}, {2}}), InvalidArgument);
  CHECK_THROWS_AS(compute_metric("ndcg", PredictionDump{{1}, {1}}), InvalidArgument);
  CHECK(is_known_metric("mcc"));
  CHECK(!is_known_metric("map"));
}

TEST_CASE("metrics match brute-force references") {
  CounterRng rng(1, "metrics.ref");
  for (int trial = 0; trial < 1000; ++trial) {
    const PredictionDump d = random_binary_dump(rng);
    CHECK(std::abs(accuracy(d) - ref_accuracy(d)) < 1e-9);
    CHECK(std::abs(f1_binary(d) - ref_f1(d)) < 1e-9);
    CHECK(std::abs(mcc(d) - ref_mcc(d)) < 1e-9);
    CHECK(compute_metric("accuracy", d) == accuracy(d));
    CHECK(compute_metric("f1", d) == f1_binary(d));
    CHECK(compute_metric("mcc", d) == mcc(d));
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const PredictionDump d = random_ranked_dump(rng);
    CHECK(std::abs(spearman(d) - ref_spearman(d)) < 1e-9);
    CHECK(compute_metric("spearman", d) == spearman(d));
  }
}

TEST_CASE("accuracy and f1 ignore item order") {
  CounterRng rng(2, "metrics.order");
  for (int trial = 0; trial < 100; ++trial) {
    PredictionDump d = random_binary_dump(rng);
    const double acc = accuracy(d), f1 = f1_binary(d);
    for (std::size_t k = d.gold.size(); k-- > 1;) {
      const std::size_t j = rng.below(k + 1);
      std::swap(d.gold[k], d.gold[j]);
      std::swap(d.predicted[k], d.predicted[j]);
    }
    CHECK(accuracy(d) == doctest::Approx(acc).epsilon(1e-15));
    CHECK(f1_binary(d) == doctest::Approx(f1).epsilon(1e-15));
  }
}
