#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gpmppi/mppi/types.hpp"

namespace gpmppi::mppi {

/// Normalized importance weights exp(-(S_m - S_min)/lambda) / sum. Summation runs in index order.
inline std::vector<double> importance_weights(const RolloutCosts& costs, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("importance_weights: lambda must be positive");
    std::vector<double> w(costs.costs.size());
    double total = 0.0;
    for (std::size_t m = 0; m < w.size(); ++m) {
        w[m] = std::exp(-(costs.costs[m] - costs.min_cost) / lambda);
        total += w[m];
    }
    for (auto& x : w) x /= total;
    return w;
}

inline double effective_sample_size(const std::vector<double>& w) {
    double s = 0.0;
    for (double x : w) s += x * x;
    return s > 0.0 ? 1.0 / s : 0.0;
}

inline ControlSequence update_controls(const ControlSequence& U, const NoiseTensor& noise, const RolloutCosts& costs,
                                       double lambda) {
    if (costs.costs.size() != noise.rollouts) throw std::invalid_argument("update_controls: cost count != rollouts");
    if (noise.horizon != U.size()) throw std::invalid_argument("update_controls: noise horizon != sequence length");
    const std::vector<double> w = importance_weights(costs, lambda);
    ControlSequence out = U;
    for (std::size_t k = 0; k < U.size(); ++k) {
        double dv = 0.0;
        double dw = 0.0;
        for (std::size_t m = 0; m < noise.rollouts; ++m) {
            dv += w[m] * noise.at(m, k).v;
            dw += w[m] * noise.at(m, k).omega;
        }
        out[k].v += dv;
        out[k].omega += dw;
    }
    return out;
}

/// Mean absolute predicted linear speed over the horizon.
inline double predicted_mean_speed(const ControlSequence& U) {
    if (U.size() == 0) return 0.0;
    double s = 0.0;
    for (const auto& u : U.controls) s += std::abs(u.v);
    return s / static_cast<double>(U.size());
}

/// Drops u_0 and repeats the last entry so the length stays fixed.
inline ControlSequence shift_sequence(const ControlSequence& U) {
    ControlSequence out = U;
    const std::size_t n = U.size();
    for (std::size_t k = 1; k < n; ++k) out[k - 1] = U[k];
    return out;
}

}  // namespace gpmppi::mppi
