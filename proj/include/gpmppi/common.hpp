#pragma once

#include <cmath>
#include <numbers>

namespace gpmppi {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    if (a > -kPi && a <= kPi) return a;
    double r = std::fmod(a + kPi, kTwoPi);
    if (r <= 0.0) r += kTwoPi;
    return r - kPi;
}

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace gpmppi
