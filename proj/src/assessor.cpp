#include "aesthete/assessor.hpp"

#include <algorithm>
#include <cmath>

namespace aesthete {

namespace {

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

// Per-pixel terms shared by the forward and backward proxy passes.
struct PixelTerms {
  double luma;
  double saturation;
  double clip;
};

template <typename T>
PixelTerms pixel_terms(const T* p) noexcept {
  const double r = p[0], g = p[1], b = p[2];
  PixelTerms t{};
  t.luma = luminance(r, g, b);
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  t.saturation = (mx - mn) / std::hypot(mx, proxy::kSaturationFloor);
  double inside = 1.0;
  for (double c : {r, g, b}) {
    const double out = sigmoid((proxy::kClipLow - c) / proxy::kClipSoftness) +
                       sigmoid((c - proxy::kClipHigh) / proxy::kClipSoftness);
    inside *= 1.0 - out;
  }
  t.clip = 1.0 - inside;
  return t;
}

struct Composite {
  double raw;
  double value;
};

Composite composite(const ProxyFeatures& f) noexcept {
  const double raw = proxy::kContrastWeight * std::min(f.contrast / proxy::kContrastRef, 1.0) +
                     proxy::kSaturationWeight * std::min(f.saturation / proxy::kSaturationRef, 1.0) +
                     proxy::kExposureWeight * f.exposure - proxy::kClipWeight * f.clipping;
  return {raw, std::clamp(raw, 0.0, 1.0)};
}

}  // namespace

// --- Assessor ------------------------------------------------------------------

ScoreDistribution Assessor::score(const ImageBuffer& img) {
  if (img.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  if (img.width() == kAssessmentSize && img.height() == kAssessmentSize) return assess(img);
  return assess(resize(img, kAssessmentSize, kAssessmentSize));
}

LossTerms Assessor::loss(const ImageBuffer& img, const ParamVector& params, const ImageContext& ctx, double gamma,
                         const ScoreDistribution& target) {
  LossTerms t;
  t.distribution = assess(apply(img, params, ctx));
  t.l_qa = emd(t.distribution, target);
  t.l_im = gamma * params.squared_norm();
  t.total = t.l_qa + t.l_im;
  return t;
}

LossGradient Assessor::loss_gradient(const ImageBuffer& img, const ParamVector& params, const ImageContext& ctx,
                                     double gamma, const ScoreDistribution& target) {
  LossGradient out;
  out.terms = loss(img, params, ctx, gamma, target);
  for (FilterId id : kAllFilters) {
    if (params.is_fixed(id)) continue;
    ParamVector plus = params;
    ParamVector minus = params;
    plus[id] = project(id, params[id] + kParamFiniteDifferenceStep);
    minus[id] = project(id, params[id] - kParamFiniteDifferenceStep);
    const double span = plus[id] - minus[id];
    if (span <= 0.0) continue;
    const double lp = loss(img, plus, ctx, gamma, target).total;
    const double lm = loss(img, minus, ctx, gamma, target).total;
    out.grad[index_of(id)] = (lp - lm) / span;
  }
  return out;
}

LossGradient loss_gradient_wrt_params(Assessor& assessor, const ImageBuffer& img, const ParamVector& params,
                                      const ImageContext& ctx, double gamma, const ScoreDistribution& target) {
  return assessor.loss_gradient(img, params, ctx, gamma, target);
}

// --- Proxy ---------------------------------------------------------------------

template <typename T>
ProxyFeatures proxy_features(const Image<T>& img) {
  if (img.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  const std::size_t n = img.pixel_count();
  double sum_luma = 0.0, sum_sat = 0.0, sum_clip = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = pixel_terms(img.pixel(i));
    sum_luma += t.luma;
    sum_sat += t.saturation;
    sum_clip += t.clip;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  ProxyFeatures f;
  f.mean_luma = sum_luma * inv_n;
  // Second pass for the variance keeps the contrast term accurate on
  // near-uniform images.
  double sum_dev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const T* p = img.pixel(i);
    const double d = luminance<double>(p[0], p[1], p[2]) - f.mean_luma;
    sum_dev += d * d;
  }
  f.contrast = std::sqrt(sum_dev * inv_n);
  f.saturation = sum_sat * inv_n;
  f.clipping = sum_clip * inv_n;
  const double off = f.mean_luma - 0.5;
  f.exposure = std::exp(-off * off / proxy::kExposureWidth);
  f.aesthetic = composite(f).value;
  return f;
}

ScoreDistribution proxy_distribution(double aesthetic) noexcept {
  const double centre = 1.0 + 9.0 * aesthetic;
  ScoreDistribution d;
  double sum = 0.0;
  for (std::size_t j = 0; j < kBucketCount; ++j) {
    const double z = (static_cast<double>(j + 1) - centre) / proxy::kSpread;
    d.p[j] = std::exp(-0.5 * z * z);
    sum += d.p[j];
  }
  for (double& v : d.p) v /= sum;
  return d;
}

template <typename T>
ProxyEvaluation<T> proxy_score_and_image_gradient(const Image<T>& img, const ScoreDistribution& target) {
  ProxyEvaluation<T> ev;
  ev.features = proxy_features(img);
  const ProxyFeatures& f = ev.features;
  const Composite a = composite(f);
  ev.distribution = proxy_distribution(a.value);
  ev.loss = emd(ev.distribution, target);
  ev.gradient = Image<T>(img.width(), img.height());

  // d loss / d aesthetic through the bucket Gaussian.
  const auto d_p = emd_gradient(ev.distribution, target);
  const double mean = mean_score(ev.distribution);
  double g_a = 0.0;
  for (std::size_t j = 0; j < kBucketCount; ++j) {
    const double dp_dcentre = ev.distribution.p[j] * (static_cast<double>(j + 1) - mean) /
                              (proxy::kSpread * proxy::kSpread);
    g_a += d_p[j] * dp_dcentre;
  }
  g_a *= 9.0;
  if (!(a.raw > 0.0 && a.raw < 1.0)) g_a = 0.0;
  if (g_a == 0.0) return ev;

  const double g_contrast =
      f.contrast < proxy::kContrastRef ? g_a * proxy::kContrastWeight / proxy::kContrastRef : 0.0;
  const double g_sat =
      f.saturation < proxy::kSaturationRef ? g_a * proxy::kSaturationWeight / proxy::kSaturationRef : 0.0;
  const double g_exposure = g_a * proxy::kExposureWeight;
  const double g_clip = -g_a * proxy::kClipWeight;
  const double g_mean_luma = g_exposure * f.exposure * (-2.0 * (f.mean_luma - 0.5) / proxy::kExposureWidth);

  const double n = static_cast<double>(img.pixel_count());
  const double contrast_scale = f.contrast > 1e-12 ? g_contrast / (n * f.contrast) : 0.0;
  constexpr double kW[3] = {kLumaR, kLumaG, kLumaB};

  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const T* p = img.pixel(i);
    const double c[3] = {p[0], p[1], p[2]};
    double grad[3] = {0.0, 0.0, 0.0};

    const double y = luminance(c[0], c[1], c[2]);
    const double g_y = contrast_scale * (y - f.mean_luma) + g_mean_luma / n;
    for (int ch = 0; ch < 3; ++ch) grad[ch] += g_y * kW[ch];

    // Saturation (max - min) / hypot(max, floor); ties resolve to the first channel.
    const int hi = static_cast<int>(std::max_element(c, c + 3) - c);
    const int lo = static_cast<int>(std::min_element(c, c + 3) - c);
    if (hi != lo) {
      const double mx = c[hi];
      const double mn = c[lo];
      const double d = std::hypot(mx, proxy::kSaturationFloor);
      grad[hi] += g_sat / n * (1.0 / d - (mx - mn) * mx / (d * d * d));
      grad[lo] += g_sat / n * (-1.0 / d);
    }

    // Soft "any channel clipped" = 1 - prod(1 - out_c).
    double out[3], d_out[3];
    for (int ch = 0; ch < 3; ++ch) {
      const double s_lo = sigmoid((proxy::kClipLow - c[ch]) / proxy::kClipSoftness);
      const double s_hi = sigmoid((c[ch] - proxy::kClipHigh) / proxy::kClipSoftness);
      out[ch] = s_lo + s_hi;
      d_out[ch] = (-s_lo * (1.0 - s_lo) + s_hi * (1.0 - s_hi)) / proxy::kClipSoftness;
    }
    for (int ch = 0; ch < 3; ++ch) {
      double others = 1.0;
      for (int o = 0; o < 3; ++o) {
        if (o != ch) others *= 1.0 - out[o];
      }
      grad[ch] += g_clip / n * others * d_out[ch];
    }

    T* dst = ev.gradient.pixel(i);
    for (int ch = 0; ch < 3; ++ch) dst[ch] = static_cast<T>(grad[ch]);
  }
  return ev;
}

template <typename T>
LossGradient proxy_loss_gradient(const Image<T>& img, const ParamVector& params, const ImageContext& ctx,
                                 double gamma, const ScoreDistribution& target) {
  const auto jac = jacobian(img, params, ctx);
  const auto ev = proxy_score_and_image_gradient(jac.value, target);

  LossGradient out;
  out.terms.distribution = ev.distribution;
  out.terms.l_qa = ev.loss;
  out.terms.l_im = gamma * params.squared_norm();
  out.terms.total = out.terms.l_qa + out.terms.l_im;

  const auto g = ev.gradient.data();
  for (FilterId id : kAllFilters) {
    const std::size_t j = index_of(id);
    if (params.is_fixed(id)) continue;
    const auto d = jac.d[j].data();
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) acc += static_cast<double>(g[i]) * static_cast<double>(d[i]);
    out.grad[j] = acc + 2.0 * gamma * params.k[j];
  }
  return out;
}

ScoreDistribution ProxyAssessor::assess(const ImageBuffer& img) {
  return proxy_distribution(proxy_features(img).aesthetic);
}

LossGradient ProxyAssessor::loss_gradient(const ImageBuffer& img, const ParamVector& params,
                                          const ImageContext& ctx, double gamma, const ScoreDistribution& target) {
  return proxy_loss_gradient(img, params, ctx, gamma, target);
}

std::unique_ptr<Assessor> make_assessor(std::string_view spec, const ModelNormalization& normalization) {
  if (spec == "proxy") return std::make_unique<ProxyAssessor>();
  constexpr std::string_view kModelPrefix = "model:";
  if (spec.starts_with(kModelPrefix)) {
    return std::make_unique<OnnxAssessor>(std::filesystem::path(spec.substr(kModelPrefix.size())), normalization);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown assessor: " + std::string(spec));
}

template ProxyFeatures proxy_features(const Image<float>&);
template ProxyFeatures proxy_features(const Image<double>&);
template ProxyEvaluation<float> proxy_score_and_image_gradient(const Image<float>&, const ScoreDistribution&);
template ProxyEvaluation<double> proxy_score_and_image_gradient(const Image<double>&, const ScoreDistribution&);
template LossGradient proxy_loss_gradient(const Image<float>&, const ParamVector&, const ImageContext&, double,
                                          const ScoreDistribution&);
template LossGradient proxy_loss_gradient(const Image<double>&, const ParamVector&, const ImageContext&, double,
                                          const ScoreDistribution&);

}  // namespace aesthete
