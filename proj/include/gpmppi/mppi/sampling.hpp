#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "gpmppi/mppi/types.hpp"

namespace gpmppi::mppi {

/// Fills an M x N tensor with i.i.d. N(0, Sigma_u) draws from `rng`. A zero variance
/// channel yields exact zeros.
template <typename Rng>
NoiseTensor sample_noise(std::size_t m, std::size_t n, const NoiseCovariance& sigma, Rng& rng) {
    if (m < 1 || n < 1) throw std::invalid_argument("sample_noise: M and N must be >= 1");
    if (sigma.var_v < 0.0 || sigma.var_omega < 0.0) {
        throw std::invalid_argument("sample_noise: variance must be non-negative");
    }
    NoiseTensor out(m, n);
    const double sv = std::sqrt(sigma.var_v);
    const double sw = std::sqrt(sigma.var_omega);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (auto& s : out.samples) {
        s.v = sv * unit(rng);
        s.omega = sw * unit(rng);
    }
    return out;
}

inline NoiseTensor sample_noise(std::size_t m, std::size_t n, const NoiseCovariance& sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_noise(m, n, sigma, rng);
}

}  // namespace gpmppi::mppi
