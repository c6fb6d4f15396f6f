#include "toonsynth/imaging/color.hpp"

#include <algorithm>
#include <cmath>

#include "toonsynth/error.hpp"

namespace toonsynth {

std::array<float, 3> hsv_to_rgb(HsvPixel hsv) noexcept {
  const float v = hsv.v;
  const float c = v * hsv.s;
  float h6 = hsv.h * 6.0f;
  if (h6 >= 6.0f) h6 -= 6.0f;
  const float x = c * (1.0f - std::fabs(std::fmod(h6, 2.0f) - 1.0f));
  const float m = v - c;
  float r = 0, g = 0, b = 0;
  switch (static_cast<int>(h6)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  return {std::clamp(r + m, 0.0f, 1.0f), std::clamp(g + m, 0.0f, 1.0f), std::clamp(b + m, 0.0f, 1.0f)};
}

ImageBuffer rgb_to_hsv(const ImageBuffer& rgb) {
  if (rgb.channels() != 3) throw InvalidArgument("rgb_to_hsv expects a 3-channel image");
  ImageBuffer out(rgb.width(), rgb.height(), 3);
  const auto src = rgb.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); i += 3) {
    const HsvPixel p = rgb_to_hsv(src[i], src[i + 1], src[i + 2]);
    dst[i] = p.h;
    dst[i + 1] = p.s;
    dst[i + 2] = p.v;
  }
  return out;
}

ImageBuffer hsv_to_rgb(const ImageBuffer& hsv) {
  if (hsv.channels() != 3) throw InvalidArgument("hsv_to_rgb expects a 3-channel image");
  ImageBuffer out(hsv.width(), hsv.height(), 3);
  const auto src = hsv.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); i += 3) {
    const auto p = hsv_to_rgb(HsvPixel{src[i], src[i + 1], src[i + 2]});
    dst[i] = p[0];
    dst[i + 1] = p[1];
    dst[i + 2] = p[2];
  }
  return out;
}

float circular_hue_distance(float a, float b) noexcept {
  float d = std::fabs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0f - d);
}

}  // namespace toonsynth
