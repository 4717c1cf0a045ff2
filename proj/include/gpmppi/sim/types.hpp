#pragma once

#include <vector>

#include "gpmppi/common.hpp"

namespace gpmppi::sim {

/// Planar pose in the world frame. theta is kept in (-pi, pi].
struct RobotState {
    double x{0.0};
    double y{0.0};
    double theta{0.0};

    friend bool operator==(const RobotState&, const RobotState&) = default;
};

/// Linear and angular velocity command.
struct ControlInput {
    double v{0.0};
    double omega{0.0};

    friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

/// A single sensor return in the sensor frame (azimuth relative to heading).
struct SphericalPoint {
    double azimuth{0.0};
    double elevation{0.0};
    double range{0.0};
};

struct PointCloud {
    std::vector<SphericalPoint> points;

    [[nodiscard]] bool empty() const { return points.empty(); }
    [[nodiscard]] std::size_t size() const { return points.size(); }
};

inline double planar_distance(const RobotState& a, const RobotState& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace gpmppi::sim
