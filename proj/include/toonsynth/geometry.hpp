#pragma once

#include <optional>

#include "toonsynth/imaging/image.hpp"

namespace toonsynth {

/// Axis-aligned box in continuous pixel coordinates, half-open on the max
/// edges: a box covering pixel columns 0..9 has x_min = 0, x_max = 10.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const noexcept { return x_max - x_min; }
  double height() const noexcept { return y_max - y_min; }
  double area() const noexcept { return width() * height(); }
  bool valid() const noexcept { return x_min < x_max && y_min < y_max; }
  double aspect() const noexcept { return width() / height(); }
  double center_x() const noexcept { return 0.5 * (x_min + x_max); }
  double center_y() const noexcept { return 0.5 * (y_min + y_max); }

  static BoundingBox from_xywh(double x, double y, double w, double h) noexcept {
    return {x, y, x + w, y + h};
  }

  bool operator==(const BoundingBox&) const = default;
};

double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept;

/// |A n B| / |A u B|; 0 when the union is empty.
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Tight half-open box of the true pixels, or nullopt for an empty mask.
std::optional<BoundingBox> tight_box(const BinaryMask& mask);

}  // namespace toonsynth
