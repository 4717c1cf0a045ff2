#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "gpmppi/mppi/cost.hpp"
#include "gpmppi/mppi/sampling.hpp"
#include "gpmppi/mppi/savitzky_golay.hpp"
#include "gpmppi/mppi/types.hpp"
#include "gpmppi/mppi/update.hpp"
#include "gpmppi/sim/costmap.hpp"

namespace gpmppi::mppi {

struct IterationDiagnostics {
    ControlInput executed;
    double min_cost{0.0};
    double mean_cost{0.0};
    double effective_sample_size{0.0};
    /// Mean |v| of the optimized (filtered, unshifted) sequence.
    double predicted_mean_speed{0.0};
};

/// Evaluates every rollout into `out`. Rollouts are split into contiguous chunks when
/// threads > 1; each writes only its own slots, so the result does not depend on scheduling.
template <typename CollisionFn>
void evaluate_rollouts(const RobotState& x0, const ControlSequence& U, const NoiseTensor& noise,
                       const CollisionFn& collides, const RobotState& goal, const MppiParams& p,
                       std::vector<double>& out) {
    out.assign(noise.rollouts, 0.0);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t m = begin; m < end; ++m) out[m] = rollout_cost(x0, U, noise.row(m), collides, goal, p);
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min<std::size_t>(p.threads, noise.rollouts));
    if (threads == 1) {
        work(0, noise.rollouts);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (noise.rollouts + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(noise.rollouts, b + chunk);
        if (b < e) pool.emplace_back(work, b, e);
    }
}

/// Receding-horizon MPPI: one optimization iteration per control step, warm-started from
/// the shifted previous solution.
class MppiPlanner {
public:
    MppiPlanner(MppiParams params, std::uint64_t seed)
        : params_(std::move(params)),
          U_(params_.horizon, params_.dt),
          filter_(params_.horizon, params_.sg_order, params_.sg_window),
          rng_(seed) {
        params_.validate();
    }

    [[nodiscard]] const ControlSequence& sequence() const { return U_; }
    [[nodiscard]] const MppiParams& params() const { return params_; }
    void reset() { U_ = ControlSequence(params_.horizon, params_.dt); }

    /// Samples, scores, updates and smooths; returns the control to execute and leaves the
    /// shifted sequence as the next warm start.
    IterationDiagnostics iterate(const RobotState& x0, const sim::Costmap2D& costmap, const RobotState& target) {
        const sim::CollisionChecker checker(costmap, params_.footprint_radius);
        return iterate(x0, [&](const RobotState& s) { return checker.collides(s); }, target);
    }

    template <typename CollisionFn>
    IterationDiagnostics iterate(const RobotState& x0, const CollisionFn& collides, const RobotState& target) {
        NoiseTensor noise = sample_noise(params_.rollouts, params_.horizon, params_.sigma, rng_);
        // Perturbations are replaced by what survives actuator clamping, so the update stays feasible.
        for (std::size_t m = 0; m < noise.rollouts; ++m) {
            for (std::size_t k = 0; k < noise.horizon; ++k) {
                auto& d = noise.at(m, k);
                const ControlInput a =
                    clamp_control({U_[k].v + d.v, U_[k].omega + d.omega}, params_.v_max, params_.omega_max);
                d = {a.v - U_[k].v, a.omega - U_[k].omega};
            }
        }
        evaluate_rollouts(x0, U_, noise, collides, target, params_, costs_);
        const RolloutCosts costs(costs_);
        const auto w = importance_weights(costs, params_.lambda);

        IterationDiagnostics diag;
        diag.min_cost = costs.min_cost;
        diag.mean_cost = std::accumulate(costs_.begin(), costs_.end(), 0.0) / static_cast<double>(costs_.size());
        diag.effective_sample_size = effective_sample_size(w);

        U_ = filter_.apply(update_controls(U_, noise, costs, params_.lambda));
        for (auto& u : U_.controls) u = clamp_control(u, params_.v_max, params_.omega_max);
        diag.predicted_mean_speed = predicted_mean_speed(U_);
        diag.executed = U_[0];
        U_ = shift_sequence(U_);
        return diag;
    }

private:
    MppiParams params_;
    ControlSequence U_;
    SavitzkyGolay filter_;
    std::mt19937_64 rng_;
    std::vector<double> costs_;
};

}  // namespace gpmppi::mppi
