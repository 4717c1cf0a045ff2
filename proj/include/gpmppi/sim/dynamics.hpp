#pragma once

#include <cmath>

#include "gpmppi/sim/types.hpp"

namespace gpmppi::sim {

/// Explicit Euler step of the unicycle model. Noise, if any, is already in `u`.
inline RobotState step_dynamics(const RobotState& s, const ControlInput& u, double dt) {
    return RobotState{
        s.x + u.v * std::cos(s.theta) * dt,
        s.y + u.v * std::sin(s.theta) * dt,
        wrap_angle(s.theta + u.omega * dt),
    };
}

}  // namespace gpmppi::sim
