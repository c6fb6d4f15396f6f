#pragma once

#include <algorithm>
#include <array>

#include "toonsynth/imaging/image.hpp"

namespace toonsynth {

/// Hexcone HSV. Hue is circular in [0,1); achromatic pixels get hue 0.
struct HsvPixel {
  float h = 0.0f;
  float s = 0.0f;
  float v = 0.0f;
};

inline HsvPixel rgb_to_hsv(float r, float g, float b) noexcept {
  const float mx = std::max({r, g, b});
  const float mn = std::min({r, g, b});
  const float chroma = mx - mn;
  HsvPixel out;
  out.v = mx;
  out.s = mx > 0.0f ? chroma / mx : 0.0f;
  if (chroma <= 0.0f) return out;  // achromatic: hue 0 by convention

  float h;
  if (mx == r) {
    h = (g - b) / chroma;
    if (h < 0.0f) h += 6.0f;
  } else if (mx == g) {
    h = (b - r) / chroma + 2.0f;
  } else {
    h = (r - g) / chroma + 4.0f;
  }
  h /= 6.0f;
  if (h >= 1.0f) h -= 1.0f;
  if (h < 0.0f) h = 0.0f;
  out.h = h;
  return out;
}

std::array<float, 3> hsv_to_rgb(HsvPixel hsv) noexcept;

/// Per-pixel conversion of a 3-channel raster; output channels are (H, S, V).
ImageBuffer rgb_to_hsv(const ImageBuffer& rgb);
ImageBuffer hsv_to_rgb(const ImageBuffer& hsv);

/// Shortest distance between two hues on the unit circle, in [0, 0.5].
float circular_hue_distance(float a, float b) noexcept;

}  // namespace toonsynth
