#include "toonsynth/imaging/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "toonsynth/error.hpp"

namespace toonsynth {

namespace {

void check_shape(int width, int height, int channels) {
  if (width < 0 || height < 0) {
    throw InvalidArgument("image dimensions must be non-negative");
  }
  if (channels != 1 && channels != 3 && channels != 4) {
    throw InvalidArgument("image channel count must be 1, 3 or 4, got " + std::to_string(channels));
  }
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  check_shape(width, height, channels);
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                   static_cast<std::size_t>(channels),
               fill);
}

ImageBuffer::ImageBuffer(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_shape(width, height, channels);
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                          static_cast<std::size_t>(channels)) {
    throw InvalidArgument("image data length does not match width x height x channels");
  }
}

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw InvalidArgument("mask dimensions must be non-negative");
  }
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0);
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryMask::any() const noexcept {
  return std::find(bits_.begin(), bits_.end(), std::uint8_t{1}) != bits_.end();
}

BinaryMask BinaryMask::operator~() const {
  BinaryMask out = *this;
  for (auto& b : out.bits_) b = b ? 0 : 1;
  return out;
}

BinaryMask& BinaryMask::operator&=(const BinaryMask& other) {
  if (!same_shape(other)) throw InvalidArgument("mask dimension mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= other.bits_[i];
  return *this;
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& other) {
  if (!same_shape(other)) throw InvalidArgument("mask dimension mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

BinaryMask& BinaryMask::subtract(const BinaryMask& other) {
  if (!same_shape(other)) throw InvalidArgument("mask dimension mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= static_cast<std::uint8_t>(!other.bits_[i]);
  return *this;
}

std::uint8_t to_u8(float v) noexcept {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

void quantize_to_u8_levels(ImageBuffer& img) noexcept {
  for (float& v : img.data()) v = from_u8(to_u8(v));
}

BinaryMask alpha_mask(const ImageBuffer& rgba, float threshold) {
  if (rgba.channels() != 4) throw InvalidArgument("alpha_mask expects an RGBA raster");
  BinaryMask mask(rgba.width(), rgba.height());
  for (int y = 0; y < rgba.height(); ++y) {
    for (int x = 0; x < rgba.width(); ++x) mask.set(x, y, rgba.at(x, y, 3) > threshold);
  }
  return mask;
}

ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > img.width() || y0 + h > img.height()) {
    throw InvalidArgument("crop window outside image");
  }
  ImageBuffer out(w, h, img.channels());
  const auto row = static_cast<std::size_t>(w) * static_cast<std::size_t>(img.channels());
  for (int y = 0; y < h; ++y) {
    const auto src = img.data().subspan(img.index(x0, y0 + y), row);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(out.index(0, y)));
  }
  return out;
}

BinaryMask crop(const BinaryMask& mask, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > mask.width() || y0 + h > mask.height()) {
    throw InvalidArgument("crop window outside mask");
  }
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.set(x, y, mask.at(x0 + x, y0 + y));
  }
  return out;
}

}  // namespace toonsynth
