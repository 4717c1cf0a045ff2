#pragma once

#include <concepts>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "gpmppi/mppi/types.hpp"
#include "gpmppi/sim/costmap.hpp"
#include "gpmppi/sim/dynamics.hpp"

namespace gpmppi::mppi {

/// (x - x_f) with the heading component wrapped to (-pi, pi].
inline Eigen::Vector3d state_error(const RobotState& s, const RobotState& goal) {
    return {s.x - goal.x, s.y - goal.y, wrap_angle(s.theta - goal.theta)};
}

inline double quadratic_state_cost(const RobotState& s, const RobotState& goal, const Eigen::Matrix3d& Q) {
    const Eigen::Vector3d e = state_error(s, goal);
    return e.dot(Q * e);
}

/// Goal-tracking quadratic plus the collision penalty.
inline double state_cost(const RobotState& s, const RobotState& goal, bool crashed, const Eigen::Matrix3d& Q,
                         double crash_penalty) {
    return quadratic_state_cost(s, goal, Q) + (crashed ? crash_penalty : 0.0);
}

/// Quadratic control cost of one step for nominal u and perturbation du.
inline double control_cost(const ControlInput& u, const ControlInput& du, const Eigen::Matrix2d& R, double gamma_u) {
    const Eigen::Vector2d uu(u.v, u.omega);
    const Eigen::Vector2d dd(du.v, du.omega);
    const Eigen::Vector2d Rdd = R * dd;
    return gamma_u * dd.dot(Rdd) + uu.dot(Rdd) + 0.5 * uu.dot(R * uu);
}

/// Cost-to-go of one perturbed rollout. `collides` answers whether a predicted state is in
/// collision; it is queried for x_1..x_{N-1} since x_0 is not affected by the sampled controls.
/// The terminal cost is the goal-tracking quadratic at x_N.
template <typename CollisionFn>
    requires std::predicate<CollisionFn&, const RobotState&>
double rollout_cost(const RobotState& x0, const ControlSequence& U, std::span<const ControlInput> noise_row,
                    CollisionFn&& collides, const RobotState& goal, const MppiParams& p) {
    if (noise_row.size() != U.size()) throw std::invalid_argument("rollout_cost: noise row length != horizon");
    const double gamma = p.gamma_u();
    RobotState x = x0;
    bool crashed = false;
    double total = 0.0;
    for (std::size_t k = 0; k < U.size(); ++k) {
        if (k > 0) {
            const bool hit = collides(x);
            crashed = p.sticky_crash ? (crashed || hit) : hit;
        }
        const ControlInput applied = clamp_control({U[k].v + noise_row[k].v, U[k].omega + noise_row[k].omega},
                                                   p.v_max, p.omega_max);
        const ControlInput du{applied.v - U[k].v, applied.omega - U[k].omega};
        total += state_cost(x, goal, crashed, p.Q, p.crash_penalty) + control_cost(U[k], du, p.R, gamma);
        x = sim::step_dynamics(x, applied, U.dt);
    }
    return total + quadratic_state_cost(x, goal, p.Q);
}

inline double rollout_cost(const RobotState& x0, const ControlSequence& U, std::span<const ControlInput> noise_row,
                           const sim::Costmap2D& costmap, const RobotState& goal, const MppiParams& p) {
    const sim::CollisionChecker checker(costmap, p.footprint_radius);
    return rollout_cost(x0, U, noise_row, [&](const RobotState& s) { return checker.collides(s); }, goal, p);
}

}  // namespace gpmppi::mppi
