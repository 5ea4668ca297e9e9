#include "aesthete/normalization.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace aesthete {

namespace {

bool moved_toward_centre(double before, double after) {
  return std::fabs(after - abn_limits::kTargetCentre) < std::fabs(before - abn_limits::kTargetCentre);
}

struct StretchOutcome {
  ImageBuffer image;
  double clip = 0.0;
  int attempts = 0;
  bool exhausted = false;
};

StretchOutcome stretch_with_ssim_guard(const ImageBuffer& img) {
  using namespace abn_limits;
  StretchOutcome out;
  out.clip = kMaxClipPercent;
  for (int retry = 0;; ++retry) {
    out.image = histogram_stretch(img, out.clip, out.clip);
    ++out.attempts;
    if (ssim(out.image, img) >= kMinSsim) break;
    if (retry == kMaxRetries) {
      out.exhausted = true;
      break;
    }
    out.clip = std::max(out.clip / 2.0, kMinClipPercent);
  }
  return out;
}

struct BrightenOutcome {
  ImageBuffer image;
  double shift = 0.0;
  int passes = 0;
  bool exhausted = false;
};

BrightenOutcome brighten_with_psnr_guard(const ImageBuffer& img, bool invert_condition) {
  using namespace abn_limits;
  BrightenOutcome out;
  out.image = img;
  while (perceived_brightness(out.image) < kTargetLow) {
    if (out.passes == kMaxBrightenPasses) {
      out.exhausted = true;
      break;
    }
    double shift = kMaxShift;
    ImageBuffer candidate;
    for (int retry = 0;; ++retry) {
      candidate = shift_value(out.image, shift / 255.0);
      const double quality = psnr(candidate, img);
      const bool reduce = invert_condition ? quality < kPsnrThreshold : quality > kPsnrThreshold;
      if (!reduce) break;
      if (retry == kMaxRetries) {
        out.exhausted = true;
        break;
      }
      shift = std::max(shift - kShiftStep, kMinShift);
    }
    if (candidate == out.image) break;  // every pixel already at V = 1
    out.image = std::move(candidate);
    out.shift = shift;
    ++out.passes;
  }
  return out;
}

}  // namespace

std::string_view to_string(AbnAction action) noexcept {
  switch (action) {
    case AbnAction::None: return "none";
    case AbnAction::ClipStretch: return "clip_stretch";
    case AbnAction::Brighten: return "brighten";
    case AbnAction::SkippedBackground: return "skipped_background";
  }
  return "none";
}

AbnAction parse_abn_action(std::string_view text) {
  for (auto a : {AbnAction::None, AbnAction::ClipStretch, AbnAction::Brighten, AbnAction::SkippedBackground}) {
    if (to_string(a) == text) return a;
  }
  throw Error(ErrorKind::Schema, "unknown abn action: " + std::string(text));
}

double background_fraction(const ImageBuffer& img, std::uint64_t seed) {
  if (img.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  const std::size_t n = img.pixel_count();
  const auto samples = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(abn_limits::kSampleFraction * static_cast<double>(n))));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const float* p = img.pixel(pick(rng));
    const bool black = p[0] < abn_limits::kBlackLevel && p[1] < abn_limits::kBlackLevel &&
                       p[2] < abn_limits::kBlackLevel;
    const bool white = p[0] > abn_limits::kWhiteLevel && p[1] > abn_limits::kWhiteLevel &&
                       p[2] > abn_limits::kWhiteLevel;
    if (black || white) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

ImageBuffer histogram_stretch(const ImageBuffer& img, double clip_low, double clip_high) {
  if (!(clip_low >= 0.0 && clip_low < 50.0 && clip_high >= 0.0 && clip_high < 50.0)) {
    throw Error(ErrorKind::InvalidArgument, "clip percentage must be in [0, 50)");
  }
  if (img.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  auto luma = luminance_plane(img);
  const double lo = percentile(luma, clip_low);
  const double hi = percentile(luma, 100.0 - clip_high);
  if (!(hi - lo > 1e-9)) return img;

  ImageBuffer out(img.width(), img.height());
  auto src = img.data();
  auto dst = out.data();
  const double scale = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = static_cast<float>(std::clamp((src[i] - lo) * scale, 0.0, 1.0));
  }
  return out;
}

ImageBuffer shift_value(const ImageBuffer& img, double shift) {
  HsvImage hsv = rgb_to_hsv(img);
  for (auto& px : hsv.pixels) px.v = std::min(px.v + shift, 1.0);
  return hsv_to_rgb(hsv);
}

std::pair<ImageBuffer, AbnReport> abn(const ImageBuffer& img, const AbnOptions& options) {
  using namespace abn_limits;
  AbnReport report;
  report.seed = options.seed;
  report.p_before = perceived_brightness(img);
  report.p_after = report.p_before;

  if (background_fraction(img, options.seed) > kBackgroundFraction) {
    report.action = AbnAction::SkippedBackground;
    return {img, report};
  }

  if (report.p_before > kTargetHigh) {
    auto outcome = stretch_with_ssim_guard(img);
    report.iterations = outcome.attempts;
    report.exhausted = outcome.exhausted;
    const double p_after = perceived_brightness(outcome.image);
    if (moved_toward_centre(report.p_before, p_after)) {
      report.action = AbnAction::ClipStretch;
      report.clip_percent_used = outcome.clip;
      report.p_after = p_after;
      return {std::move(outcome.image), report};
    }
    return {img, report};
  }

  if (report.p_before < kTargetLow) {
    auto outcome = brighten_with_psnr_guard(img, options.invert_psnr_condition);
    report.iterations = outcome.passes;
    report.exhausted = outcome.exhausted;
    const double p_after = perceived_brightness(outcome.image);
    if (outcome.passes > 0 && moved_toward_centre(report.p_before, p_after)) {
      report.action = AbnAction::Brighten;
      report.shift_used = outcome.shift;
      report.p_after = p_after;
      return {std::move(outcome.image), report};
    }
    return {img, report};
  }

  return {img, report};
}

}  // namespace aesthete
