#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aesthete/error.hpp"

namespace aesthete {

/// Row-major interleaved RGB raster. Channels are nominally in [0,1].
template <typename T>
class Image {
 public:
  using value_type = T;
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, T fill = T(0))
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(checked_area(width, height)) * kChannels, fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  T* pixel(int x, int y) noexcept { return data_.data() + offset(x, y); }
  const T* pixel(int x, int y) const noexcept { return data_.data() + offset(x, y); }
  T* pixel(std::size_t index) noexcept { return data_.data() + index * kChannels; }
  const T* pixel(std::size_t index) const noexcept { return data_.data() + index * kChannels; }

  T& at(int x, int y, int c) noexcept { return data_[offset(x, y) + c]; }
  T at(int x, int y, int c) const noexcept { return data_[offset(x, y) + c]; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  template <typename U>
  Image<U> cast() const {
    Image<U> out(width_, height_);
    auto dst = out.data();
    for (std::size_t i = 0; i < data_.size(); ++i) dst[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const Image&) const = default;

 private:
  static long long checked_area(int width, int height) {
    if (width < 0 || height < 0) throw Error(ErrorKind::InvalidArgument, "negative image dimension");
    return static_cast<long long>(width) * height;
  }
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * kChannels;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using ImageBuffer = Image<float>;
using ImageBuffer64 = Image<double>;

/// Rec.601 luma weights; shared by filters, metrics and the proxy assessor.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

template <typename T>
constexpr T luminance(T r, T g, T b) noexcept {
  return T(kLumaR) * r + T(kLumaG) * g + T(kLumaB) * b;
}

struct HsvPixel {
  double h = 0.0;  ///< degrees, [0,360)
  double s = 0.0;
  double v = 0.0;
};

/// Same-shape raster of HSV triples.
struct HsvImage {
  int width = 0;
  int height = 0;
  std::vector<HsvPixel> pixels;
};

HsvPixel rgb_to_hsv(double r, double g, double b) noexcept;
void hsv_to_rgb(const HsvPixel& hsv, double& r, double& g, double& b) noexcept;
HsvImage rgb_to_hsv(const ImageBuffer& img);
ImageBuffer hsv_to_rgb(const HsvImage& hsv);

/// Hard clamp of every channel into [0,1]. Idempotent.
void clamp_channels(ImageBuffer& img) noexcept;
ImageBuffer clamped(ImageBuffer img);

/// Round every channel to the nearest 8-bit level (after clamping).
ImageBuffer quantize8(const ImageBuffer& img);

/// Perceived brightness sqrt(0.241 R^2 + 0.691 G^2 + 0.068 B^2) of the mean
/// channel intensities, on a 0..255 scale.
double perceived_brightness(const ImageBuffer& img);

/// Mean SSIM over all 8x8 windows (stride 1) of the luminance planes.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

/// Peak signal-to-noise ratio for unit peak; +infinity when identical.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

double mean_squared_error(const ImageBuffer& a, const ImageBuffer& b);

/// Bilinear resampling with half-pixel centres.
ImageBuffer resize(const ImageBuffer& img, int width, int height);

std::vector<float> luminance_plane(const ImageBuffer& img);

/// Separable Gaussian blur of a single-channel plane, edge-clamped borders.
std::vector<float> gaussian_blur(std::span<const float> plane, int width, int height,
                                 double sigma_x, double sigma_y);

/// Percentile (0..100) with linear interpolation between closest ranks.
/// Reorders `values`.
double percentile(std::vector<float>& values, double pct);

}  // namespace aesthete
