#pragma once

#include <cstdint>
#include <string_view>
#include <utility>

#include "aesthete/image.hpp"

namespace aesthete {

enum class AbnAction { None, ClipStretch, Brighten, SkippedBackground };

std::string_view to_string(AbnAction action) noexcept;
AbnAction parse_abn_action(std::string_view text);

struct AbnOptions {
  std::uint64_t seed = 0;
  /// Reduce the brightening shift while PSNR(corrected, original) is *below*
  /// the threshold instead of above it.
  bool invert_psnr_condition = false;
};

struct AbnReport {
  double p_before = 0.0;
  double p_after = 0.0;
  AbnAction action = AbnAction::None;
  double clip_percent_used = 0.0;  ///< per side, percent
  double shift_used = 0.0;         ///< V shift of the last brightening pass, 0..255 units
  int iterations = 0;              ///< stretch attempts or brightening passes
  bool exhausted = false;          ///< a retry schedule ran out before its goal was met
  std::uint64_t seed = 0;

  bool operator==(const AbnReport&) const = default;
};

namespace abn_limits {
inline constexpr double kTargetCentre = 128.0;
inline constexpr double kTargetLow = 98.0;
inline constexpr double kTargetHigh = 158.0;
inline constexpr double kSampleFraction = 0.05;
inline constexpr double kBackgroundFraction = 0.60;
inline constexpr float kBlackLevel = 0.04f;
inline constexpr float kWhiteLevel = 0.96f;
inline constexpr double kMaxClipPercent = 5.0;
inline constexpr double kMinClipPercent = 0.5;
inline constexpr double kMinSsim = 0.8;
inline constexpr double kMaxShift = 20.0;
inline constexpr double kShiftStep = 4.0;
inline constexpr double kMinShift = 4.0;
inline constexpr double kPsnrThreshold = 30.0;
inline constexpr int kMaxRetries = 4;
inline constexpr int kMaxBrightenPasses = 8;
}  // namespace abn_limits

/// Fraction of a seeded 5% pixel sample that is near-black or near-white.
double background_fraction(const ImageBuffer& img, std::uint64_t seed);

/// Adaptive brightness normalisation toward perceived brightness 128 +- 30.
std::pair<ImageBuffer, AbnReport> abn(const ImageBuffer& img, const AbnOptions& options = {});

/// Global linear stretch driven by luminance percentiles: values at or below
/// the clip_low percentile map to 0, at or above 100 - clip_high to 1.
/// Returns the input unchanged when the two percentiles coincide.
ImageBuffer histogram_stretch(const ImageBuffer& img, double clip_low, double clip_high);

/// Adds `shift` (0..1 units) to the HSV value channel, capped at 1.
ImageBuffer shift_value(const ImageBuffer& img, double shift);

}  // namespace aesthete
