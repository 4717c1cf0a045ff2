#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gpmppi/sim/types.hpp"

namespace gpmppi::mppi {

using sim::ControlInput;
using sim::RobotState;

/// Horizon-length control sequence. The length never changes after construction.
struct ControlSequence {
    std::vector<ControlInput> controls;
    double dt{1.0 / 30.0};

    ControlSequence() = default;
    ControlSequence(std::size_t horizon, double step) : controls(horizon), dt(step) {}
    ControlSequence(std::vector<ControlInput> u, double step) : controls(std::move(u)), dt(step) {}

    [[nodiscard]] std::size_t size() const { return controls.size(); }
    ControlInput& operator[](std::size_t k) { return controls[k]; }
    const ControlInput& operator[](std::size_t k) const { return controls[k]; }

    friend bool operator==(const ControlSequence&, const ControlSequence&) = default;
};

/// M x N control perturbations, row-major by rollout.
struct NoiseTensor {
    std::size_t rollouts{0};
    std::size_t horizon{0};
    std::vector<ControlInput> samples;

    NoiseTensor() = default;
    NoiseTensor(std::size_t m, std::size_t n) : rollouts(m), horizon(n), samples(m * n) {}

    [[nodiscard]] std::span<const ControlInput> row(std::size_t m) const {
        return {samples.data() + m * horizon, horizon};
    }
    [[nodiscard]] std::span<ControlInput> row(std::size_t m) { return {samples.data() + m * horizon, horizon}; }
    ControlInput& at(std::size_t m, std::size_t k) { return samples[m * horizon + k]; }
    [[nodiscard]] const ControlInput& at(std::size_t m, std::size_t k) const { return samples[m * horizon + k]; }

    friend bool operator==(const NoiseTensor&, const NoiseTensor&) = default;
};

struct RolloutCosts {
    std::vector<double> costs;
    double min_cost{0.0};

    RolloutCosts() = default;
    explicit RolloutCosts(std::vector<double> c) : costs(std::move(c)) {
        min_cost = costs.empty() ? 0.0 : *std::min_element(costs.begin(), costs.end());
    }
};

/// Diagonal control-noise covariance, (m/s)^2 and (rad/s)^2.
struct NoiseCovariance {
    double var_v{0.023};
    double var_omega{0.028};
};

struct MppiParams {
    double lambda{0.572};
    double nu{1200.0};
    NoiseCovariance sigma;
    Eigen::Matrix2d R{Eigen::Matrix2d::Zero()};
    Eigen::Matrix3d Q{Eigen::Vector3d(2.5, 2.5, 5.0).asDiagonal()};
    double crash_penalty{1.0e3};
    bool sticky_crash{true};
    std::size_t rollouts{2528};
    std::size_t horizon{180};
    double dt{1.0 / 30.0};
    double v_max{1.5};
    double omega_max{2.0};
    double footprint_radius{0.3};
    int sg_order{2};
    int sg_window{51};
    double goal_tolerance{0.3};
    unsigned threads{1};

    MppiParams() { R = default_control_weight(lambda, sigma); }

    /// R = lambda * Sigma^(-1/2).
    static Eigen::Matrix2d default_control_weight(double lambda, const NoiseCovariance& s) {
        return Eigen::Vector2d(lambda / std::sqrt(s.var_v), lambda / std::sqrt(s.var_omega)).asDiagonal();
    }

    [[nodiscard]] double gamma_u() const { return (nu - 1.0) / (2.0 * nu); }

    void validate() const {
        if (!(lambda > 0.0)) throw std::invalid_argument("mppi: lambda must be positive");
        if (!(nu > 0.0)) throw std::invalid_argument("mppi: nu must be positive");
        if (rollouts < 1 || horizon < 1) throw std::invalid_argument("mppi: rollouts and horizon must be >= 1");
        if (!(dt > 0.0)) throw std::invalid_argument("mppi: dt must be positive");
        if (sigma.var_v < 0.0 || sigma.var_omega < 0.0) throw std::invalid_argument("mppi: negative noise variance");
        if (sg_window % 2 == 0 || sg_window <= sg_order || static_cast<std::size_t>(sg_window) > horizon) {
            throw std::invalid_argument("mppi: Savitzky-Golay window must be odd, > order and <= horizon");
        }
    }
};

inline ControlInput clamp_control(const ControlInput& u, double v_max, double omega_max) {
    return {std::clamp(u.v, -v_max, v_max), std::clamp(u.omega, -omega_max, omega_max)};
}

}  // namespace gpmppi::mppi
