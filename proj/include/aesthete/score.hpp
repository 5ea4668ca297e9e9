#pragma once

#include <array>
#include <cstddef>

namespace aesthete {

inline constexpr std::size_t kBucketCount = 10;

/// Probability per aesthetic rating bucket 1..10.
struct ScoreDistribution {
  std::array<double, kBucketCount> p{};

  bool operator==(const ScoreDistribution&) const = default;
};

/// Realistic high-aesthetic reference the loss pulls predictions toward.
inline constexpr ScoreDistribution kTargetDistribution{{0.0, 0.0, 0.0, 0.0, 0.0, 0.01, 0.09, 0.15, 0.55, 0.20}};

ScoreDistribution uniform_distribution() noexcept;
ScoreDistribution one_hot(int bucket);

/// Non-negative entries summing to 1 within 1e-6.
bool is_valid(const ScoreDistribution& d) noexcept;

/// Throws Error(InvalidArgument) unless `is_valid`.
void validate(const ScoreDistribution& d);

/// Expected rating, sum_j j * p_j with j = 1..10.
double mean_score(const ScoreDistribution& d) noexcept;

/// Earth mover's distance on cumulative distributions with exponent 2:
/// sqrt(mean_j (CDF_p(j) - CDF_q(j))^2).
double emd(const ScoreDistribution& p, const ScoreDistribution& q) noexcept;

/// d emd(p, q) / d p_i. Zero when p == q, where the distance is not
/// differentiable.
std::array<double, kBucketCount> emd_gradient(const ScoreDistribution& p, const ScoreDistribution& q) noexcept;

/// Numerically stable softmax of raw logits.
ScoreDistribution softmax(const std::array<double, kBucketCount>& logits) noexcept;

}  // namespace aesthete
