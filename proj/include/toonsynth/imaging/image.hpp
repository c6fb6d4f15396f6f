#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace toonsynth {

/// Row-major interleaved raster. Samples are floats in [0,1]; 8-bit storage
/// happens only at the PNG boundary.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, float fill = 0.0f);
  ImageBuffer(int width, int height, int channels, std::vector<float> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::size_t index(int x, int y, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }
  float& at(int x, int y, int c) noexcept { return data_[index(x, y, c)]; }
  float at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }

  std::span<float> pixel(int x, int y) noexcept {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<const float> pixel(int x, int y) const noexcept {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool operator==(const ImageBuffer&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Row-major boolean raster stored one byte per pixel (0 or 1).
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }

  bool at(int x, int y) const noexcept {
    return bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                 static_cast<std::size_t>(x)] != 0;
  }
  void set(int x, int y, bool v) noexcept {
    bits_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
          static_cast<std::size_t>(x)] = v ? 1 : 0;
  }

  std::span<std::uint8_t> bits() noexcept { return bits_; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::size_t count() const noexcept;
  bool any() const noexcept;
  bool same_shape(const BinaryMask& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  BinaryMask operator~() const;
  BinaryMask& operator&=(const BinaryMask& other);
  BinaryMask& operator|=(const BinaryMask& other);
  /// Set difference: this AND NOT other.
  BinaryMask& subtract(const BinaryMask& other);

  bool operator==(const BinaryMask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

std::uint8_t to_u8(float v) noexcept;
inline float from_u8(std::uint8_t v) noexcept { return static_cast<float>(v) / 255.0f; }

/// Rounds every sample to the nearest 8-bit level (v -> round(255 v) / 255).
void quantize_to_u8_levels(ImageBuffer& img) noexcept;

/// alpha > threshold on channel 3 of an RGBA raster.
BinaryMask alpha_mask(const ImageBuffer& rgba, float threshold = 0.5f);

/// Copies the [x0, x0+w) x [y0, y0+h) window; the window must lie inside `img`.
ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int w, int h);
BinaryMask crop(const BinaryMask& mask, int x0, int y0, int w, int h);

}  // namespace toonsynth
