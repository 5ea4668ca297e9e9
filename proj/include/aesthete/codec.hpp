#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aesthete/image.hpp"

namespace aesthete {

using Bytes = std::vector<std::uint8_t>;

/// Decodes 8-bit PNG or JPEG (sniffed from the magic bytes). Grayscale and
/// palette images are expanded to RGB; alpha is dropped; 16-bit PNG samples
/// are reduced to 8 bits. Channel values are v/255.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);

/// 8-bit RGB PNG. Channels are clamped to [0,1] and rounded to the nearest
/// level; output is byte-deterministic for identical input.
Bytes encode_png(const ImageBuffer& img);

/// Baseline JPEG; used for fixtures and interoperability tests.
Bytes encode_jpeg(const ImageBuffer& img, int quality = 92);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

ImageBuffer load_image(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const ImageBuffer& img);

}  // namespace aesthete
