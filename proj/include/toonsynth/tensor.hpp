#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace toonsynth {

/// Dense row-major double tensor.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> dims, double fill = 0.0);
  Tensor(std::vector<int> dims, std::vector<double> values);

  std::size_t size() const noexcept { return data.size(); }
  int rank() const noexcept { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
  bool same_shape(const Tensor& o) const noexcept { return shape == o.shape; }

  bool operator==(const Tensor&) const = default;
};

/// Container: "TSTN", u32 rank, rank x u32 dims, then little-endian float32
/// samples in row-major order. Values are narrowed to float on write.
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace toonsynth
