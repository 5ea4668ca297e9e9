#include "aesthete/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aesthete/parallel.hpp"

namespace aesthete {

namespace {

void require_non_empty(const ImageBuffer& img) {
  if (img.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) throw Error(ErrorKind::DimensionMismatch, "image dimensions differ");
  require_non_empty(a);
}

// Summed-area table with a zero row/column in front.
std::vector<double> integral(const std::vector<double>& plane, int w, int h) {
  std::vector<double> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      row += plane[static_cast<std::size_t>(y) * w + x];
      sat[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
          sat[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
    }
  }
  return sat;
}

double box_sum(const std::vector<double>& sat, int stride, int x, int y, int bw, int bh) {
  const auto at = [&](int xx, int yy) { return sat[static_cast<std::size_t>(yy) * stride + xx]; };
  return at(x + bw, y + bh) - at(x, y + bh) - at(x + bw, y) + at(x, y);
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

}  // namespace

HsvPixel rgb_to_hsv(double r, double g, double b) noexcept {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  HsvPixel out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta <= 0.0) return out;
  double h;
  if (mx == r) {
    h = 60.0 * std::fmod((g - b) / delta, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

void hsv_to_rgb(const HsvPixel& hsv, double& r, double& g, double& b) noexcept {
  const double c = hsv.v * hsv.s;
  const double hp = hsv.h / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  const double m = hsv.v - c;
  double r1 = 0, g1 = 0, b1 = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r1 = c; g1 = x; break;
    case 1: r1 = x; g1 = c; break;
    case 2: g1 = c; b1 = x; break;
    case 3: g1 = x; b1 = c; break;
    case 4: r1 = x; b1 = c; break;
    default: r1 = c; b1 = x; break;
  }
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}

HsvImage rgb_to_hsv(const ImageBuffer& img) {
  HsvImage out{img.width(), img.height(), std::vector<HsvPixel>(img.pixel_count())};
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const float* p = img.pixel(i);
    out.pixels[i] = rgb_to_hsv(p[0], p[1], p[2]);
  }
  return out;
}

ImageBuffer hsv_to_rgb(const HsvImage& hsv) {
  ImageBuffer out(hsv.width, hsv.height);
  for (std::size_t i = 0; i < hsv.pixels.size(); ++i) {
    double r, g, b;
    hsv_to_rgb(hsv.pixels[i], r, g, b);
    float* p = out.pixel(i);
    p[0] = static_cast<float>(r);
    p[1] = static_cast<float>(g);
    p[2] = static_cast<float>(b);
  }
  return out;
}

void clamp_channels(ImageBuffer& img) noexcept {
  for (auto& v : img.data()) v = std::clamp(v, 0.0f, 1.0f);
}

ImageBuffer clamped(ImageBuffer img) {
  clamp_channels(img);
  return img;
}

ImageBuffer quantize8(const ImageBuffer& img) {
  ImageBuffer out(img.width(), img.height());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const float v = std::clamp(src[i], 0.0f, 1.0f);
    dst[i] = std::round(v * 255.0f) / 255.0f;
  }
  return out;
}

double perceived_brightness(const ImageBuffer& img) {
  require_non_empty(img);
  double sum[3] = {0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const float* p = img.pixel(i);
    sum[0] += p[0];
    sum[1] += p[1];
    sum[2] += p[2];
  }
  const double n = static_cast<double>(img.pixel_count());
  const double r = 255.0 * sum[0] / n;
  const double g = 255.0 * sum[1] / n;
  const double b = 255.0 * sum[2] / n;
  return std::sqrt(0.241 * r * r + 0.691 * g * g + 0.068 * b * b);
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b);
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  const int w = a.width();
  const int h = a.height();
  const int win_w = std::min(8, w);
  const int win_h = std::min(8, h);

  const std::size_t n = a.pixel_count();
  std::vector<double> ya(n), yb(n), yaa(n), ybb(n), yab(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* pa = a.pixel(i);
    const float* pb = b.pixel(i);
    ya[i] = luminance<double>(pa[0], pa[1], pa[2]);
    yb[i] = luminance<double>(pb[0], pb[1], pb[2]);
    yaa[i] = ya[i] * ya[i];
    ybb[i] = yb[i] * yb[i];
    yab[i] = ya[i] * yb[i];
  }
  const auto sa = integral(ya, w, h);
  const auto sb = integral(yb, w, h);
  const auto saa = integral(yaa, w, h);
  const auto sbb = integral(ybb, w, h);
  const auto sab = integral(yab, w, h);

  const double count = static_cast<double>(win_w) * win_h;
  double total = 0.0;
  for (int y = 0; y + win_h <= h; ++y) {
    for (int x = 0; x + win_w <= w; ++x) {
      const double ma = box_sum(sa, w + 1, x, y, win_w, win_h) / count;
      const double mb = box_sum(sb, w + 1, x, y, win_w, win_h) / count;
      const double va = box_sum(saa, w + 1, x, y, win_w, win_h) / count - ma * ma;
      const double vb = box_sum(sbb, w + 1, x, y, win_w, win_h) / count - mb * mb;
      const double cov = box_sum(sab, w + 1, x, y, win_w, win_h) / count - ma * mb;
      total += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
               ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
    }
  }
  const double windows = static_cast<double>(w - win_w + 1) * (h - win_h + 1);
  return total / windows;
}

double mean_squared_error(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b);
  auto da = a.data();
  auto db = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = static_cast<double>(da[i]) - db[i];
    acc += d * d;
  }
  return acc / static_cast<double>(da.size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

ImageBuffer resize(const ImageBuffer& img, int width, int height) {
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidArgument, "resize target must be at least 1x1");
  require_non_empty(img);
  if (img.width() == width && img.height() == height) return img;

  ImageBuffer out(width, height);
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  const int max_x = img.width() - 1;
  const int max_y = img.height() - 1;
  parallel_rows(height, [&](int y_begin, int y_end) {
    for (int y = y_begin; y < y_end; ++y) {
      const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(max_y));
      const int y0 = static_cast<int>(fy);
      const int y1 = std::min(y0 + 1, max_y);
      const double wy = fy - y0;
      for (int x = 0; x < width; ++x) {
        const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(max_x));
        const int x0 = static_cast<int>(fx);
        const int x1 = std::min(x0 + 1, max_x);
        const double wx = fx - x0;
        const float* p00 = img.pixel(x0, y0);
        const float* p10 = img.pixel(x1, y0);
        const float* p01 = img.pixel(x0, y1);
        const float* p11 = img.pixel(x1, y1);
        float* dst = out.pixel(x, y);
        for (int c = 0; c < 3; ++c) {
          const double top = p00[c] + wx * (p10[c] - p00[c]);
          const double bottom = p01[c] + wx * (p11[c] - p01[c]);
          dst[c] = static_cast<float>(top + wy * (bottom - top));
        }
      }
    }
  });
  return out;
}

std::vector<float> luminance_plane(const ImageBuffer& img) {
  std::vector<float> out(img.pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float* p = img.pixel(i);
    out[i] = luminance(p[0], p[1], p[2]);
  }
  return out;
}

std::vector<float> gaussian_blur(std::span<const float> plane, int width, int height,
                                 double sigma_x, double sigma_y) {
  std::vector<float> tmp(plane.begin(), plane.end());
  if (sigma_x > 0.0) {
    const auto k = gaussian_kernel(sigma_x);
    const int r = static_cast<int>(k.size() / 2);
    std::vector<float> src = tmp;
    parallel_rows(height, [&](int y_begin, int y_end) {
      for (int y = y_begin; y < y_end; ++y) {
        const float* row = src.data() + static_cast<std::size_t>(y) * width;
        float* dst = tmp.data() + static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
          double acc = 0.0;
          for (int i = -r; i <= r; ++i) {
            const int xx = std::clamp(x + i, 0, width - 1);
            acc += static_cast<double>(k[static_cast<std::size_t>(i + r)]) * row[xx];
          }
          dst[x] = static_cast<float>(acc);
        }
      }
    });
  }
  if (sigma_y > 0.0) {
    const auto k = gaussian_kernel(sigma_y);
    const int r = static_cast<int>(k.size() / 2);
    std::vector<float> src = tmp;
    parallel_rows(height, [&](int y_begin, int y_end) {
      std::vector<double> acc(static_cast<std::size_t>(width));
      for (int y = y_begin; y < y_end; ++y) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int i = -r; i <= r; ++i) {
          const int yy = std::clamp(y + i, 0, height - 1);
          const double kv = k[static_cast<std::size_t>(i + r)];
          const float* row = src.data() + static_cast<std::size_t>(yy) * width;
          for (int x = 0; x < width; ++x) acc[static_cast<std::size_t>(x)] += kv * row[x];
        }
        float* dst = tmp.data() + static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) dst[x] = static_cast<float>(acc[static_cast<std::size_t>(x)]);
      }
    });
  }
  return tmp;
}

double percentile(std::vector<float>& values, double pct) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "empty input");
  const double pos = std::clamp(pct, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double v_lo = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size()) return v_lo;
  const double v_hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return v_lo + frac * (v_hi - v_lo);
}

}  // namespace aesthete
