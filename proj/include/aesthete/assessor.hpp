#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "aesthete/filters.hpp"
#include "aesthete/image.hpp"
#include "aesthete/score.hpp"

namespace aesthete {

/// Side length of the square raster every assessor scores.
inline constexpr int kAssessmentSize = 224;

/// Decomposition of the enhancement loss:
/// total = EMD(predicted, target) + gamma * sum_i k_i^2.
struct LossTerms {
  double total = 0.0;
  double l_qa = 0.0;
  double l_im = 0.0;
  ScoreDistribution distribution;
};

struct LossGradient {
  LossTerms terms;
  ParamArray grad{};  ///< d total / d k_i; exactly 0 for fixed filters
};

/// Maps an image to a ten-bucket score distribution. Implementations must be
/// deterministic. Instances are not thread-safe; use `clone()` to get an
/// independent inference context per session.
class Assessor {
 public:
  virtual ~Assessor() = default;

  virtual std::string name() const = 0;

  /// Resizes to kAssessmentSize x kAssessmentSize (if needed) and scores.
  ScoreDistribution score(const ImageBuffer& img);

  /// Scores the raster as given. The optimizer calls this on the working
  /// image, which is already at assessment resolution.
  virtual ScoreDistribution assess(const ImageBuffer& img) = 0;

  LossTerms loss(const ImageBuffer& img, const ParamVector& params, const ImageContext& ctx, double gamma,
                 const ScoreDistribution& target);

  /// Loss value and gradient w.r.t. the eight intensities. The default
  /// implementation takes central differences in parameter space (step
  /// kParamFiniteDifferenceStep, two evaluations per free filter) for models
  /// that expose no input gradient.
  virtual LossGradient loss_gradient(const ImageBuffer& img, const ParamVector& params, const ImageContext& ctx,
                                     double gamma, const ScoreDistribution& target);

  virtual std::unique_ptr<Assessor> clone() const = 0;
};

inline constexpr double kParamFiniteDifferenceStep = 1e-2;

/// Free-function spelling of Assessor::loss_gradient.
LossGradient loss_gradient_wrt_params(Assessor& assessor, const ImageBuffer& img, const ParamVector& params,
                                      const ImageContext& ctx, double gamma,
                                      const ScoreDistribution& target = kTargetDistribution);

// --- Proxy scorer ------------------------------------------------------------
//
// Hand-built, differentiable stand-in for a learned aesthetic model. It rates
// global contrast, colourfulness, exposure centring and clipping; it makes no
// claim to agree with human judgement.

namespace proxy {
inline constexpr double kContrastWeight = 0.35;
inline constexpr double kContrastRef = 0.25;
inline constexpr double kSaturationWeight = 0.25;
inline constexpr double kSaturationRef = 0.5;
inline constexpr double kSaturationFloor = 0.02;
inline constexpr double kExposureWeight = 0.40;
inline constexpr double kExposureWidth = 0.08;
inline constexpr double kClipWeight = 0.5;
inline constexpr double kClipLow = 0.02;
inline constexpr double kClipHigh = 0.98;
inline constexpr double kClipSoftness = 0.01;
inline constexpr double kSpread = 1.5;
}  // namespace proxy

struct ProxyFeatures {
  double mean_luma = 0.0;
  double contrast = 0.0;    ///< RMS luminance contrast
  /// Mean per-pixel (max - min) / hypot(max, 0.02) over the channels. Within
  /// 0.5% of HSV saturation for max >= 0.2; smooth and bounded near black.
  double saturation = 0.0;
  double exposure = 0.0;    ///< exp(-(mean_luma - 0.5)^2 / 0.08)
  double clipping = 0.0;    ///< soft fraction of pixels with a channel outside [0.02, 0.98]
  double aesthetic = 0.0;   ///< composite in [0,1]
};

template <typename T>
ProxyFeatures proxy_features(const Image<T>& img);

/// Discretised Gaussian over buckets 1..10 centred at 1 + 9a, sd 1.5.
ScoreDistribution proxy_distribution(double aesthetic) noexcept;

template <typename T>
struct ProxyEvaluation {
  ScoreDistribution distribution;
  ProxyFeatures features;
  double loss = 0.0;  ///< EMD(distribution, target)
  Image<T> gradient;  ///< d loss / d channel, same shape as the input
};

template <typename T>
ProxyEvaluation<T> proxy_score_and_image_gradient(const Image<T>& img,
                                                  const ScoreDistribution& target = kTargetDistribution);

/// Exact chain rule through the filter Jacobian; available at either precision
/// so it can be checked against finite differences in 64-bit.
template <typename T>
LossGradient proxy_loss_gradient(const Image<T>& img, const ParamVector& params, const ImageContext& ctx,
                                 double gamma, const ScoreDistribution& target);

class ProxyAssessor final : public Assessor {
 public:
  std::string name() const override { return "proxy"; }
  ScoreDistribution assess(const ImageBuffer& img) override;
  LossGradient loss_gradient(const ImageBuffer& img, const ParamVector& params, const ImageContext& ctx,
                             double gamma, const ScoreDistribution& target) override;
  std::unique_ptr<Assessor> clone() const override { return std::make_unique<ProxyAssessor>(); }
};

// --- External model ------------------------------------------------------------

/// Per-channel input normalisation applied before inference: (v - mean) / std.
struct ModelNormalization {
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> stddev{0.229, 0.224, 0.225};
};

/// ONNX model taking one 1x3x224x224 float tensor and producing ten logits,
/// which are softmax-normalised. Construction fails with
/// Error(AssessorLoad, "assessor load failure: ...") when the file is missing,
/// unparsable, or has the wrong output size.
class OnnxAssessor final : public Assessor {
 public:
  explicit OnnxAssessor(std::filesystem::path model, ModelNormalization normalization = {});
  ~OnnxAssessor() override;
  OnnxAssessor(const OnnxAssessor&) = delete;
  OnnxAssessor& operator=(const OnnxAssessor&) = delete;

  std::string name() const override;
  ScoreDistribution assess(const ImageBuffer& img) override;
  std::unique_ptr<Assessor> clone() const override;

  /// Raw logits for an image already at assessment resolution.
  std::array<double, kBucketCount> logits(const ImageBuffer& img);

 private:
  struct Impl;
  std::filesystem::path path_;
  ModelNormalization normalization_;
  std::unique_ptr<Impl> impl_;
};

/// "proxy" or "model:<path>".
std::unique_ptr<Assessor> make_assessor(std::string_view spec, const ModelNormalization& normalization = {});

}  // namespace aesthete
