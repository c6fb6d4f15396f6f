#pragma once

#include <stdexcept>
#include <string>

namespace toonsynth {

/// Base class of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI's `--json-errors` output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Precondition violation (bad shape, bad parameter, dimension mismatch).
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message) : Error("InvalidArgument", message) {}
};

/// No pixel passed the saturation/value gate: not a chroma-key frame.
class ZeroSupport : public Error {
 public:
  explicit ZeroSupport(const std::string& message) : Error("ZeroSupport", message) {}
};

/// Keying removed every pixel: there is no subject in the frame.
class EmptyForeground : public Error {
 public:
  explicit EmptyForeground(const std::string& message) : Error("EmptyForeground", message) {}
};

class InsufficientGuides : public Error {
 public:
  explicit InsufficientGuides(const std::string& message) : Error("InsufficientGuides", message) {}
};

class NoFeasiblePosition : public Error {
 public:
  explicit NoFeasiblePosition(const std::string& message) : Error("NoFeasiblePosition", message) {}
};

/// Filesystem failure; the message always names the offending path.
class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("IoError", message) {}
};

/// Malformed on-disk document (JSON schema, RLE run sums, tensor header).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error("FormatError", message) {}
};

}  // namespace toonsynth
