#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "aesthete/image.hpp"

namespace aesthete {

/// The eight adjustable filters. Declaration order is the application order
/// inside `apply` and the index order of every per-filter array.
enum class FilterId : std::uint8_t { Con, Sat, Bri, Sha, Hig, Exp, Llf, Nld };

inline constexpr std::size_t kFilterCount = 8;

inline constexpr std::array<FilterId, kFilterCount> kAllFilters = {
    FilterId::Con, FilterId::Sat, FilterId::Bri, FilterId::Sha,
    FilterId::Hig, FilterId::Exp, FilterId::Llf, FilterId::Nld};

constexpr std::size_t index_of(FilterId id) noexcept { return static_cast<std::size_t>(id); }

/// Lowercase wire name: "con", "sat", ...
std::string_view filter_name(FilterId id) noexcept;
std::optional<FilterId> parse_filter_name(std::string_view name) noexcept;

struct Bounds {
  double lo;
  double hi;
};

/// [-1,1] for every filter except Nld, which is positive-only.
constexpr Bounds filter_bounds(FilterId id) noexcept {
  return id == FilterId::Nld ? Bounds{0.0, 1.0} : Bounds{-1.0, 1.0};
}

using ParamArray = std::array<double, kFilterCount>;

/// Filter intensities plus per-filter "fixed" flags. A fixed intensity is
/// never moved by the optimizer.
struct ParamVector {
  ParamArray k{};
  std::array<bool, kFilterCount> fixed{};

  double& operator[](FilterId id) noexcept { return k[index_of(id)]; }
  double operator[](FilterId id) const noexcept { return k[index_of(id)]; }
  bool is_fixed(FilterId id) const noexcept { return fixed[index_of(id)]; }
  void set_fixed(FilterId id, bool value) noexcept { fixed[index_of(id)] = value; }

  double squared_norm() const noexcept;
  bool operator==(const ParamVector&) const = default;
};

/// Throws Error(OutOfBounds, "parameter out of bounds: <name>") for the first
/// intensity outside its box (NaN counts as outside).
void validate(const ParamVector& params);

/// Clamps each intensity into its box.
ParamVector project(ParamVector params) noexcept;
double project(FilterId id, double value) noexcept;

/// Per-image constants consumed by the detail (Llf) and dehaze (Nld) filters.
/// Built once from the source image and held fixed while differentiating.
struct ImageContext {
  int width = 0;
  int height = 0;
  std::vector<float> blurred_luma;  ///< Gaussian-blurred luminance
  double haze_floor = 0.0;          ///< 1st percentile of min(R,G,B)
};

inline constexpr double kContextBlurSigma = 5.0;
inline constexpr double kHazePercentile = 1.0;

ImageContext build_context(const ImageBuffer& img, double sigma_x = kContextBlurSigma,
                           double sigma_y = kContextBlurSigma);

/// Filter strength constants.
inline constexpr double kBrightnessScale = 0.3;
inline constexpr double kToneScale = 0.5;         // shadows / highlights
inline constexpr double kMaxHazeOffset = 0.9;     // keeps the dehaze denominator >= 0.1

/// Output soft clamp: identity on [0,1], tanh roll-off of height
/// kClampOvershoot beyond either end. C2 and strictly increasing.
inline constexpr double kClampOvershoot = 0.1;

template <typename T>
struct ClampResult {
  T value;
  T slope;
};

template <typename T>
ClampResult<T> soft_clamp(T x) noexcept;

/// Applies all eight filters, in FilterId order, followed by the soft clamp.
template <typename T>
Image<T> apply(const Image<T>& img, const ParamVector& params, const ImageContext& ctx);

/// Output image together with d(output)/d(k_i) for every filter.
template <typename T>
struct FilterJacobian {
  Image<T> value;
  std::array<Image<T>, kFilterCount> d;
};

template <typename T>
FilterJacobian<T> jacobian(const Image<T>& img, const ParamVector& params, const ImageContext& ctx);

}  // namespace aesthete
