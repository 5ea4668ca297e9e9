#pragma once

// Generators and independent reference computations shared by the unit and
// acceptance suites. Nothing here calls into the code path it is used to check.

#include <algorithm>
#include <cmath>
#include <random>

#include "aesthete/assessor.hpp"
#include "aesthete/filters.hpp"
#include "aesthete/image.hpp"

namespace aesthete::testing {

inline ImageBuffer uniform_image(int w, int h, float r, float g, float b) {
  ImageBuffer img(w, h);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    float* p = img.pixel(i);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
  return img;
}

inline ImageBuffer uniform_image(int w, int h, float v) { return uniform_image(w, h, v, v, v); }

inline ImageBuffer random_image(std::mt19937_64& rng, int w, int h, float lo = 0.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  ImageBuffer img(w, h);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

/// Smooth, photo-like synthetic scene: gradients, a few coloured blobs and
/// fine texture. `variant` changes layout and palette.
inline ImageBuffer synthetic_photo(int w, int h, unsigned variant) {
  std::mt19937_64 rng(0x5eed0000ULL + variant);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double base[3] = {0.25 + 0.5 * u(rng), 0.25 + 0.5 * u(rng), 0.25 + 0.5 * u(rng)};
  struct Blob {
    double cx, cy, radius, color[3];
  };
  Blob blobs[5];
  for (auto& b : blobs) {
    b = {u(rng), u(rng), 0.08 + 0.25 * u(rng), {u(rng), u(rng), u(rng)}};
  }
  const double fx = 6.0 + 20.0 * u(rng);
  const double fy = 6.0 + 20.0 * u(rng);
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double nx = (x + 0.5) / w;
      const double ny = (y + 0.5) / h;
      double c[3];
      for (int ch = 0; ch < 3; ++ch) c[ch] = base[ch] * (0.6 + 0.6 * ny) - 0.15 * (nx - 0.5);
      for (const auto& b : blobs) {
        const double d2 = ((nx - b.cx) * (nx - b.cx) + (ny - b.cy) * (ny - b.cy)) / (b.radius * b.radius);
        const double wgt = std::exp(-d2);
        for (int ch = 0; ch < 3; ++ch) c[ch] = c[ch] * (1.0 - wgt) + b.color[ch] * wgt;
      }
      const double texture = 0.04 * std::sin(fx * nx * 6.283) * std::cos(fy * ny * 6.283);
      float* p = img.pixel(x, y);
      for (int ch = 0; ch < 3; ++ch) p[ch] = static_cast<float>(std::clamp(c[ch] + texture, 0.0, 1.0));
    }
  }
  return img;
}

/// Degrades a photo: darken, desaturate and flatten contrast.
inline ImageBuffer degrade(const ImageBuffer& img, double darken, double desaturate, double flatten) {
  ImageBuffer out = img;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    float* p = out.pixel(i);
    const double y = luminance<double>(p[0], p[1], p[2]);
    for (int ch = 0; ch < 3; ++ch) {
      double v = y + (1.0 - desaturate) * (p[ch] - y);
      v = 0.5 + (1.0 - flatten) * (v - 0.5);
      v *= 1.0 - darken;
      p[ch] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

inline ParamVector random_params(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ParamVector k;
  for (FilterId id : kAllFilters) k[id] = project(id, scale * u(rng));
  if (k[FilterId::Nld] < 0.0) k[FilterId::Nld] = 0.0;
  k[FilterId::Nld] = std::fabs(scale * u(rng));
  return k;
}

/// |a - b| relative to the larger magnitude, with `floor` guarding entries
/// that are (near) zero.
inline double relative_error(double a, double b, double floor) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

inline double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    m = std::max(m, static_cast<double>(std::fabs(a.data()[i] - b.data()[i])));
  }
  return m;
}

// The composite is only piecewise smooth: clamp01 and the two min(., 1) caps.
// A central difference whose stencil crosses one of those seams is not an
// oracle for the derivative, so such stencils are skipped.
inline std::array<int, 4> kink_side(const ProxyFeatures& f) {
  const double raw = 0.35 * std::min(f.contrast / 0.25, 1.0) + 0.25 * std::min(f.saturation / 0.5, 1.0) +
                     0.40 * f.exposure - 0.5 * f.clipping;
  return {raw > 0.0, raw < 1.0, f.contrast < 0.25, f.saturation < 0.5};
}

template <typename T>
bool crosses_kink(const Image<T>& minus, const Image<T>& plus) {
  return kink_side(proxy_features(minus)) != kink_side(proxy_features(plus));
}

}  // namespace aesthete::testing
