#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nnd {

/// Input or configuration rejected by a precondition check. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical blow-up detected mid-run (sampler bound, exp overflow,
/// non-finite training loss). CLI exit code 3.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// File could not be read, written, or parsed.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct GridDims {
  int nz = 0;
  int ny = 0;
  int nx = 0;

  std::int64_t voxels() const {
    return static_cast<std::int64_t>(nz) * ny * nx;
  }
  bool operator==(const GridDims&) const = default;
};

enum class Axis { Z, Y, X };

inline Axis axis_from_name(const std::string& name) {
  if (name == "z" || name == "Z") return Axis::Z;
  if (name == "y" || name == "Y") return Axis::Y;
  if (name == "x" || name == "X") return Axis::X;
  throw ValidationError("unknown axis name: '" + name + "' (expected z, y or x)");
}

inline const char* axis_name(Axis a) {
  switch (a) {
    case Axis::Z: return "z";
    case Axis::Y: return "y";
    default: return "x";
  }
}

}  // namespace nnd
