#pragma once

#include <filesystem>

#include "toonsynth/imaging/image.hpp"

namespace toonsynth {

/// Reads an 8-bit (or 16-bit, truncated) PNG. Gray, RGB and RGBA keep their
/// channel count; gray+alpha and palette images are expanded to RGBA/RGB.
ImageBuffer read_png(const std::filesystem::path& path);

/// Writes 1, 3 or 4 channel rasters as 8-bit PNG.
void write_png(const std::filesystem::path& path, const ImageBuffer& img);

/// Masks are stored as 8-bit gray, 0 or 255; anything >= 128 reads as true.
BinaryMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace toonsynth
