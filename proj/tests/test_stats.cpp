#include <algorithm>
#include <cmath>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "rae/errors.hpp"
#include "rae/rng.hpp"
#include "rae/stats.hpp"

using rae::Normalizer;

namespace {

// independent two-pass oracle
struct Batch {
  double mean = 0.0;
  double variance = 0.0;
};

Batch batch_stats(const std::vector<double>& values) {
  Batch b;
  for (const double v : values) b.mean += v;
  b.mean /= static_cast<double>(values.size());
  for (const double v : values) b.variance += (v - b.mean) * (v - b.mean);
  b.variance /= static_cast<double>(values.size());
  return b;
}

}  // namespace

TEST_CASE("hand-computed normalization") {
  Normalizer n;
  n.update(1.0);
  n.update(3.0);
  CHECK(n.mean() == Catch::Approx(2.0).margin(1e-15));
  CHECK(n.variance() == Catch::Approx(1.0).margin(1e-15));
  // (3 - 2) / (1 * 0.8)
  CHECK(n.normalize(3.0) == Catch::Approx(1.25).margin(1e-12));
  CHECK(n.coefficient == 0.8);
}

TEST_CASE("incremental stats match the batch formulas in any insertion order") {
  std::vector<double> values(10000);
  rae::Rng rng(2024);
  for (double& v : values) v = rng.uniform(0.0, 10.0);
  const Batch oracle = batch_stats(values);

  std::vector<std::vector<double>> orders;
  orders.push_back(values);
  std::sort(orders.back().begin(), orders.back().end());
  orders.push_back(orders.back());
  std::reverse(orders.back().begin(), orders.back().end());
  orders.push_back(values);
  rng.shuffle(orders.back());

  for (const auto& order : orders) {
    Normalizer n;
    for (const double v : order) n.update(v);
    CHECK(std::abs(n.mean() - oracle.mean) < 1e-9);
    CHECK(std::abs(n.variance() - oracle.variance) < 1e-9);
  }
}

TEST_CASE("update rejects invalid values") {
  Normalizer n;
  CHECK_THROWS_AS(n.update(-1.0), rae::InvalidInput);
  CHECK_THROWS_AS(n.update(std::nan("")), rae::InvalidInput);
  CHECK(n.count == 0);
}

TEST_CASE("degenerate normalizers throw on normalize and floor on the pipeline path") {
  Normalizer n;
  CHECK(n.degenerate());
  CHECK_THROWS_AS(n.normalize(1.0), rae::DegenerateNormalizer);
  n.update(2.0);
  CHECK_THROWS_AS(n.normalize(1.0), rae::DegenerateNormalizer);
  n.update(2.0);  // two identical samples: sigma == 0
  CHECK(n.degenerate());
  CHECK_THROWS_AS(n.normalize(1.0), rae::DegenerateNormalizer);
  const double floored = n.normalize_or_floor(2.0 + rae::kDegenerateSigma);
  CHECK(floored == Catch::Approx(1.0 / n.coefficient).margin(1e-6));
}

TEST_CASE("coefficient scales the normalized score") {
  Normalizer n;
  n.coefficient = 0.5;
  n.update(0.0);
  n.update(2.0);
  // sigma = 1, so (3 - 1) / (1 * 0.5) = 4
  CHECK(n.normalize(3.0) == Catch::Approx(4.0).margin(1e-12));
}

TEST_CASE("variance clamps tiny negative rounding") {
  Normalizer n;
  for (int i = 0; i < 1000; ++i) n.update(1e8 + 1e-8);
  CHECK(n.variance() >= 0.0);
}
