#include "toonsynth/tensor.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

#include "toonsynth/error.hpp"

namespace toonsynth {

namespace {

std::size_t element_count(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) {
    if (d < 0) throw InvalidArgument("tensor dimensions must be non-negative");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::filesystem::path& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError(path.string() + ": truncated tensor");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

}  // namespace

Tensor::Tensor(std::vector<int> dims, double fill) : shape(std::move(dims)) {
  data.assign(element_count(shape), fill);
}

Tensor::Tensor(std::vector<int> dims, std::vector<double> values) : shape(std::move(dims)), data(std::move(values)) {
  if (data.size() != element_count(shape)) throw InvalidArgument("tensor data does not match its shape");
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write("TSTN", 4);
  put_u32(os, static_cast<std::uint32_t>(t.shape.size()));
  for (int d : t.shape) put_u32(os, static_cast<std::uint32_t>(d));
  for (double v : t.data) put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!os) throw IoError("write failed: " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "TSTN", 4) != 0) throw FormatError(path.string() + ": bad tensor magic");
  const std::uint32_t rank = get_u32(is, path);
  if (rank > 8) throw FormatError(path.string() + ": tensor rank " + std::to_string(rank) + " too large");
  std::vector<int> dims;
  for (std::uint32_t i = 0; i < rank; ++i) dims.push_back(static_cast<int>(get_u32(is, path)));
  Tensor t(dims);
  for (double& v : t.data) v = std::bit_cast<float>(get_u32(is, path));
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes after tensor");
  return t;
}

}  // namespace toonsynth
