#pragma once

#include <cmath>
#include <vector>

#include "pentrap/trap.hpp"

namespace pentrap {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend Vec3 operator*(Vec3 a, double s) { return a *= s; }

  double norm2() const { return x * x + y * y + z * z; }
  double norm() const { return std::sqrt(norm2()); }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

// Rotating-frame positions and velocities of all ions, internal units.
struct CrystalState {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  double time = 0.0;  // internal units

  static CrystalState at_rest(int n_ions) {
    CrystalState s;
    s.positions.resize(static_cast<size_t>(n_ions));
    s.velocities.resize(static_cast<size_t>(n_ions));
    return s;
  }

  int n() const { return static_cast<int>(positions.size()); }

  bool finite() const {
    for (const auto& p : positions)
      if (!p.finite()) return false;
    for (const auto& v : velocities)
      if (!v.finite()) return false;
    return std::isfinite(time);
  }

  // Throws ValidationError when the ion count disagrees with the system or
  // any entry is non-finite.
  void validate(const System& sys) const;
};

}  // namespace pentrap
