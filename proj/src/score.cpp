#include "aesthete/score.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aesthete/error.hpp"

namespace aesthete {

ScoreDistribution uniform_distribution() noexcept {
  ScoreDistribution d;
  d.p.fill(1.0 / kBucketCount);
  return d;
}

ScoreDistribution one_hot(int bucket) {
  if (bucket < 1 || bucket > static_cast<int>(kBucketCount)) {
    throw Error(ErrorKind::InvalidArgument, "bucket must be in 1..10");
  }
  ScoreDistribution d;
  d.p[static_cast<std::size_t>(bucket - 1)] = 1.0;
  return d;
}

bool is_valid(const ScoreDistribution& d) noexcept {
  double sum = 0.0;
  for (double v : d.p) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::fabs(sum - 1.0) <= 1e-6;
}

void validate(const ScoreDistribution& d) {
  if (!is_valid(d)) throw Error(ErrorKind::InvalidArgument, "invalid score distribution");
}

double mean_score(const ScoreDistribution& d) noexcept {
  double acc = 0.0;
  for (std::size_t j = 0; j < kBucketCount; ++j) acc += static_cast<double>(j + 1) * d.p[j];
  return acc;
}

double emd(const ScoreDistribution& p, const ScoreDistribution& q) noexcept {
  double cp = 0.0;
  double cq = 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < kBucketCount; ++j) {
    cp += p.p[j];
    cq += q.p[j];
    const double gap = cp - cq;
    acc += gap * gap;
  }
  return std::sqrt(acc / kBucketCount);
}

std::array<double, kBucketCount> emd_gradient(const ScoreDistribution& p, const ScoreDistribution& q) noexcept {
  std::array<double, kBucketCount> grad{};
  const double distance = emd(p, q);
  if (distance <= 1e-12) return grad;
  // dE/dCDF_j = gap_j / (N E); p_i feeds every CDF_j with j >= i.
  std::array<double, kBucketCount> d_cdf{};
  double cp = 0.0;
  double cq = 0.0;
  for (std::size_t j = 0; j < kBucketCount; ++j) {
    cp += p.p[j];
    cq += q.p[j];
    d_cdf[j] = (cp - cq) / (kBucketCount * distance);
  }
  double suffix = 0.0;
  for (std::size_t i = kBucketCount; i-- > 0;) {
    suffix += d_cdf[i];
    grad[i] = suffix;
  }
  return grad;
}

ScoreDistribution softmax(const std::array<double, kBucketCount>& logits) noexcept {
  const double peak = *std::max_element(logits.begin(), logits.end());
  ScoreDistribution d;
  double sum = 0.0;
  for (std::size_t j = 0; j < kBucketCount; ++j) {
    d.p[j] = std::exp(logits[j] - peak);
    sum += d.p[j];
  }
  for (double& v : d.p) v /= sum;
  return d;
}

}  // namespace aesthete
