#include "aesthete/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "aesthete/parallel.hpp"

namespace aesthete {

namespace {

constexpr std::array<std::string_view, kFilterCount> kNames = {"con", "sat", "bri", "sha",
                                                               "hig", "exp", "llf", "nld"};

template <typename T>
struct Coefficients {
  T con, sat, bri, sha, hig, llf, nld;
  T exposure_gain;  // 2^k
  T haze;           // effective dehaze offset v
  T dehaze_denom;   // 1 - k v
};

template <typename T>
Coefficients<T> coefficients(const ParamVector& p, const ImageContext& ctx) {
  Coefficients<T> c{};
  c.con = T(p[FilterId::Con]);
  c.sat = T(p[FilterId::Sat]);
  c.bri = T(p[FilterId::Bri]);
  c.sha = T(p[FilterId::Sha]);
  c.hig = T(p[FilterId::Hig]);
  c.llf = T(p[FilterId::Llf]);
  c.nld = T(p[FilterId::Nld]);
  c.exposure_gain = T(std::exp2(p[FilterId::Exp]));
  c.haze = T(std::min(ctx.haze_floor, kMaxHazeOffset));
  c.dehaze_denom = T(1) - c.nld * c.haze;
  return c;
}

template <typename T>
using PixelDerivs = std::array<std::array<T, kFilterCount>, 3>;

template <typename T>
inline void luma_derivs(const PixelDerivs<T>& dc, std::array<T, kFilterCount>& dy) {
  for (std::size_t j = 0; j < kFilterCount; ++j) {
    dy[j] = T(kLumaR) * dc[0][j] + T(kLumaG) * dc[1][j] + T(kLumaB) * dc[2][j];
  }
}

// Forward-mode evaluation of the filter chain for one pixel. When kDerivs is
// false the derivative bookkeeping compiles away.
template <typename T, bool kDerivs>
inline void filter_pixel(const T* in, T blurred, const Coefficients<T>& k, T* out, PixelDerivs<T>* d_out) {
  constexpr std::size_t kCon = index_of(FilterId::Con);
  constexpr std::size_t kSat = index_of(FilterId::Sat);
  constexpr std::size_t kBri = index_of(FilterId::Bri);
  constexpr std::size_t kSha = index_of(FilterId::Sha);
  constexpr std::size_t kHig = index_of(FilterId::Hig);
  constexpr std::size_t kExp = index_of(FilterId::Exp);
  constexpr std::size_t kLlf = index_of(FilterId::Llf);
  constexpr std::size_t kNld = index_of(FilterId::Nld);

  T c[3] = {in[0], in[1], in[2]};
  PixelDerivs<T> dc{};
  std::array<T, kFilterCount> dy{};

  // Contrast: linear pivot at mid-gray.
  for (int ch = 0; ch < 3; ++ch) {
    if constexpr (kDerivs) {
      for (auto& v : dc[ch]) v *= T(1) + k.con;
      dc[ch][kCon] += c[ch] - T(0.5);
    }
    c[ch] = T(0.5) + (T(1) + k.con) * (c[ch] - T(0.5));
  }

  // Saturation around luminance.
  {
    const T y = luminance(c[0], c[1], c[2]);
    if constexpr (kDerivs) luma_derivs(dc, dy);
    for (int ch = 0; ch < 3; ++ch) {
      if constexpr (kDerivs) {
        for (std::size_t j = 0; j < kFilterCount; ++j) dc[ch][j] = (T(1) + k.sat) * dc[ch][j] - k.sat * dy[j];
        dc[ch][kSat] += c[ch] - y;
      }
      c[ch] = y + (T(1) + k.sat) * (c[ch] - y);
    }
  }

  // Brightness.
  for (int ch = 0; ch < 3; ++ch) {
    if constexpr (kDerivs) dc[ch][kBri] += T(kBrightnessScale);
    c[ch] += T(kBrightnessScale) * k.bri;
  }

  // Shadows: weight (1-Y)^2.
  {
    const T y = luminance(c[0], c[1], c[2]);
    const T inv = T(1) - y;
    if constexpr (kDerivs) luma_derivs(dc, dy);
    for (int ch = 0; ch < 3; ++ch) {
      if constexpr (kDerivs) {
        for (std::size_t j = 0; j < kFilterCount; ++j) dc[ch][j] -= T(2 * kToneScale) * k.sha * inv * dy[j];
        dc[ch][kSha] += T(kToneScale) * inv * inv;
      }
      c[ch] += T(kToneScale) * k.sha * inv * inv;
    }
  }

  // Highlights: weight Y^2.
  {
    const T y = luminance(c[0], c[1], c[2]);
    if constexpr (kDerivs) luma_derivs(dc, dy);
    for (int ch = 0; ch < 3; ++ch) {
      if constexpr (kDerivs) {
        for (std::size_t j = 0; j < kFilterCount; ++j) dc[ch][j] += T(2 * kToneScale) * k.hig * y * dy[j];
        dc[ch][kHig] += T(kToneScale) * y * y;
      }
      c[ch] += T(kToneScale) * k.hig * y * y;
    }
  }

  // Exposure in stops.
  for (int ch = 0; ch < 3; ++ch) {
    c[ch] *= k.exposure_gain;
    if constexpr (kDerivs) {
      for (auto& v : dc[ch]) v *= k.exposure_gain;
      dc[ch][kExp] += c[ch] * T(std::numbers::ln2);
    }
  }

  // Detail boost: luminance minus its blurred copy, added to every channel.
  {
    const T y = luminance(c[0], c[1], c[2]);
    const T detail = y - blurred;
    if constexpr (kDerivs) luma_derivs(dc, dy);
    for (int ch = 0; ch < 3; ++ch) {
      if constexpr (kDerivs) {
        for (std::size_t j = 0; j < kFilterCount; ++j) dc[ch][j] += k.llf * dy[j];
        dc[ch][kLlf] += detail;
      }
      c[ch] += k.llf * detail;
    }
  }

  // Dehaze: remove the dark-channel offset and renormalise.
  for (int ch = 0; ch < 3; ++ch) {
    if constexpr (kDerivs) {
      for (auto& v : dc[ch]) v /= k.dehaze_denom;
      dc[ch][kNld] += k.haze * (c[ch] - T(1)) / (k.dehaze_denom * k.dehaze_denom);
    }
    c[ch] = (c[ch] - k.nld * k.haze) / k.dehaze_denom;
  }

  for (int ch = 0; ch < 3; ++ch) {
    const auto clamp = soft_clamp(c[ch]);
    out[ch] = clamp.value;
    if constexpr (kDerivs) {
      for (std::size_t j = 0; j < kFilterCount; ++j) (*d_out)[ch][j] = clamp.slope * dc[ch][j];
    }
  }
}

template <typename T>
void check_inputs(const Image<T>& img, const ParamVector& params, const ImageContext& ctx) {
  if (img.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  validate(params);
  if (ctx.width != img.width() || ctx.height != img.height() || ctx.blurred_luma.size() != img.pixel_count()) {
    throw Error(ErrorKind::DimensionMismatch, "image context does not match image");
  }
}

}  // namespace

std::string_view filter_name(FilterId id) noexcept { return kNames[index_of(id)]; }

std::optional<FilterId> parse_filter_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kFilterCount; ++i) {
    if (kNames[i] == name) return kAllFilters[i];
  }
  return std::nullopt;
}

double ParamVector::squared_norm() const noexcept {
  double acc = 0.0;
  for (double v : k) acc += v * v;
  return acc;
}

void validate(const ParamVector& params) {
  for (FilterId id : kAllFilters) {
    const double v = params[id];
    const Bounds b = filter_bounds(id);
    if (!(v >= b.lo && v <= b.hi)) {
      throw Error(ErrorKind::OutOfBounds, "parameter out of bounds: " + std::string(filter_name(id)));
    }
  }
}

double project(FilterId id, double value) noexcept {
  const Bounds b = filter_bounds(id);
  return std::clamp(value, b.lo, b.hi);
}

ParamVector project(ParamVector params) noexcept {
  for (FilterId id : kAllFilters) params[id] = project(id, params[id]);
  return params;
}

ImageContext build_context(const ImageBuffer& img, double sigma_x, double sigma_y) {
  if (img.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  ImageContext ctx;
  ctx.width = img.width();
  ctx.height = img.height();
  const auto luma = luminance_plane(img);
  ctx.blurred_luma = gaussian_blur(luma, img.width(), img.height(), sigma_x, sigma_y);

  std::vector<float> dark(img.pixel_count());
  for (std::size_t i = 0; i < dark.size(); ++i) {
    const float* p = img.pixel(i);
    dark[i] = std::min({p[0], p[1], p[2]});
  }
  ctx.haze_floor = percentile(dark, kHazePercentile);
  return ctx;
}

template <typename T>
ClampResult<T> soft_clamp(T x) noexcept {
  constexpr T kWidth = T(kClampOvershoot);
  if (x >= T(0) && x <= T(1)) return {x, T(1)};
  const T offset = x > T(1) ? T(1) : T(0);
  const T t = std::tanh((x - offset) / kWidth);
  return {offset + kWidth * t, T(1) - t * t};
}

template <typename T>
Image<T> apply(const Image<T>& img, const ParamVector& params, const ImageContext& ctx) {
  check_inputs(img, params, ctx);
  const auto k = coefficients<T>(params, ctx);
  Image<T> out(img.width(), img.height());
  const int width = img.width();
  parallel_rows(img.height(), [&](int y_begin, int y_end) {
    for (int y = y_begin; y < y_end; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        filter_pixel<T, false>(img.pixel(i), T(ctx.blurred_luma[i]), k, out.pixel(i), nullptr);
      }
    }
  });
  return out;
}

template <typename T>
FilterJacobian<T> jacobian(const Image<T>& img, const ParamVector& params, const ImageContext& ctx) {
  check_inputs(img, params, ctx);
  const auto k = coefficients<T>(params, ctx);
  FilterJacobian<T> result{Image<T>(img.width(), img.height()), {}};
  for (auto& raster : result.d) raster = Image<T>(img.width(), img.height());
  const int width = img.width();
  parallel_rows(img.height(), [&](int y_begin, int y_end) {
    PixelDerivs<T> d{};
    for (int y = y_begin; y < y_end; ++y) {
      for (int x = 0; x < width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        filter_pixel<T, true>(img.pixel(i), T(ctx.blurred_luma[i]), k, result.value.pixel(i), &d);
        for (std::size_t j = 0; j < kFilterCount; ++j) {
          T* dst = result.d[j].pixel(i);
          dst[0] = d[0][j];
          dst[1] = d[1][j];
          dst[2] = d[2][j];
        }
      }
    }
  });
  return result;
}

template ClampResult<float> soft_clamp(float) noexcept;
template ClampResult<double> soft_clamp(double) noexcept;
template Image<float> apply(const Image<float>&, const ParamVector&, const ImageContext&);
template Image<double> apply(const Image<double>&, const ParamVector&, const ImageContext&);
template FilterJacobian<float> jacobian(const Image<float>&, const ParamVector&, const ImageContext&);
template FilterJacobian<double> jacobian(const Image<double>&, const ParamVector&, const ImageContext&);

}  // namespace aesthete
