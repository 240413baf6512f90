#pragma once

#include <filesystem>

#include "harmonizer/image.hpp"

namespace harmonizer {

/// PNG (8-bit gray/RGB/RGBA, alpha dropped) or binary PPM/PGM, chosen by
/// content. Components become byte / 255. Throws IoError on failure.
Image load_image(const std::filesystem::path& path);

/// Grayscale PNG or PGM; color inputs are reduced to a single channel.
Mask load_mask(const std::filesystem::path& path);

/// Writes round(v * 255) per component; PNG unless the extension is .ppm/.pgm.
void save_image(const Image& image, const std::filesystem::path& path);
void save_mask(const Mask& mask, const std::filesystem::path& path);

/// round(v * 255) / 255 per component: what a save/load round trip yields.
Image quantize(const Image& image);

}  // namespace harmonizer
