#pragma once

#include <array>
#include <cmath>

namespace nfq {

// Sensor view of the cart-pole: s = (x, dx, cos a, sin a, da). The angle is
// encoded as a (cos, sin) pair to avoid the jump at +-pi.
struct Observation {
  static constexpr int kDim = 5;

  double x = 0.0;
  double dx = 0.0;
  double cos_a = 1.0;
  double sin_a = 0.0;
  double da = 0.0;

  static Observation from_angle(double x, double dx, double angle, double da) {
    return {x, dx, std::cos(angle), std::sin(angle), da};
  }

  // Pole angle in (-pi, pi], 0 = upright.
  double angle() const { return std::atan2(sin_a, cos_a); }

  std::array<double, kDim> values() const { return {x, dx, cos_a, sin_a, da}; }

  bool operator==(const Observation&) const = default;
};

}  // namespace nfq
