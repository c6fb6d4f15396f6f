#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "toonsynth/imaging/image.hpp"

namespace testutil {

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

// Hash of the 8-bit levels, so it does not depend on float formatting.
inline std::uint64_t image_hash(const toonsynth::ImageBuffer& img) {
  std::uint64_t h = 1469598103934665603ull;
  const int dims[3] = {img.width(), img.height(), img.channels()};
  h = fnv1a(dims, sizeof dims, h);
  for (float v : img.data()) {
    const std::uint8_t b = toonsynth::to_u8(v);
    h = fnv1a(&b, 1, h);
  }
  return h;
}

inline std::uint64_t file_hash(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string s = ss.str();
  return fnv1a(s.data(), s.size());
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("toonsynth_test_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

inline std::filesystem::path source_dir() { return TOONSYNTH_SOURCE_DIR; }

}  // namespace testutil
