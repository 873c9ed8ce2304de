#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "rae/errors.hpp"

namespace rae {

constexpr double kDefaultNormalizerCoefficient = 0.8;

// Sigma floor substituted when a normalizer is degenerate (fewer than two
// samples, or zero spread).
constexpr double kDegenerateSigma = 1e-6;

// Incremental error-score normalizer. Keeps raw power sums so the running
// mean/variance equal the batch formulas over everything seen:
//   mu = N^-1 * sum(V_i),  sigma^2 = N^-1 * sum(V_i^2) - mu^2.
// Scores are z-normalized with an extra coefficient c (default 0.8).
struct Normalizer {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double coefficient = kDefaultNormalizerCoefficient;

  void update(double v) {
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidInput("Normalizer::update: value must be finite and nonnegative, got " +
                         std::to_string(v));
    count += 1;
    sum += v;
    sum_sq += v * v;
  }

  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }

  double variance() const {
    if (count == 0) return 0.0;
    const double m = mean();
    const double var = sum_sq / static_cast<double>(count) - m * m;
    return var > 0.0 ? var : 0.0;  // clamp the rounding underflow
  }

  double sigma() const { return std::sqrt(variance()); }

  bool degenerate() const { return count < 2 || sigma() == 0.0; }

  // (v - mu) / (sigma * c). Throws on a degenerate normalizer.
  double normalize(double v) const {
    if (count < 2) throw DegenerateNormalizer("normalize: need at least 2 samples, have " + std::to_string(count));
    const double s = sigma();
    if (s == 0.0) throw DegenerateNormalizer("normalize: zero standard deviation");
    return (v - mean()) / (s * coefficient);
  }

  // Pipeline variant: degenerate normalizers fall back to a fixed sigma so
  // scores stay bounded on pathological clusters of identical images.
  double normalize_or_floor(double v) const {
    const double s = degenerate() ? kDegenerateSigma : sigma();
    return (v - mean()) / (s * coefficient);
  }
};

}  // namespace rae
