#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

#include "gpmppi/sim/types.hpp"
#include "gpmppi/sim/world.hpp"

namespace gpmppi::sim {

/// Ring-scanning range sensor. Obstacles are vertical prisms, so every ring at a
/// given azimuth sees the same planar hit distance d and reports d / cos(elevation).
struct SensorConfig {
    int azimuth_rays{360};
    int elevation_rings{4};
    double elevation_min{0.0};
    double elevation_max{deg2rad(15.0)};
    double r_max{5.0};
    double range_noise_std{0.0};
    std::uint64_t noise_seed{0};
    /// Skip obstacles flagged as invisible to the subgoal recommender.
    bool recommender_only{false};
};

/// Azimuth of ray i, in (-pi, pi]; ray azimuth_rays/2 points straight ahead.
inline double ray_azimuth(int i, int azimuth_rays) {
    return wrap_angle(static_cast<double>(i - azimuth_rays / 2) * kTwoPi / azimuth_rays);
}

inline double ring_elevation(int j, const SensorConfig& c) {
    if (c.elevation_rings <= 1) return c.elevation_min;
    return c.elevation_min + (c.elevation_max - c.elevation_min) * j / (c.elevation_rings - 1);
}

/// Nearest planar hit distance along a world-frame bearing, or infinity.
inline double cast_ray(const World& w, double ox, double oy, double bearing, bool recommender_only) {
    const double dx = std::cos(bearing);
    const double dy = std::sin(bearing);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : w.obstacles) {
        if (recommender_only && !o.recommender_visible) continue;
        if (auto t = o.ray_hit(ox, oy, dx, dy); t && *t < best) best = *t;
    }
    return best;
}

inline PointCloud simulate_lidar(const World& w, const RobotState& pose, const SensorConfig& c) {
    if (w.inside_obstacle(pose.x, pose.y)) {
        throw std::invalid_argument("simulate_lidar: pose lies inside an obstacle");
    }
    if (c.azimuth_rays < 1 || c.elevation_rings < 1 || c.r_max <= 0.0) {
        throw std::invalid_argument("simulate_lidar: invalid sensor configuration");
    }
    PointCloud cloud;
    std::mt19937_64 rng(c.noise_seed);
    std::normal_distribution<double> noise(0.0, c.range_noise_std > 0.0 ? c.range_noise_std : 1.0);
    for (int i = 0; i < c.azimuth_rays; ++i) {
        const double az = ray_azimuth(i, c.azimuth_rays);
        const double d = cast_ray(w, pose.x, pose.y, pose.theta + az, c.recommender_only);
        if (!std::isfinite(d)) continue;
        for (int j = 0; j < c.elevation_rings; ++j) {
            const double el = ring_elevation(j, c);
            double r = d / std::cos(el);
            if (c.range_noise_std > 0.0) r += c.range_noise_std * noise(rng);
            if (r <= 0.0 || r > c.r_max) continue;
            cloud.points.push_back(SphericalPoint{az, el, r});
        }
    }
    return cloud;
}

}  // namespace gpmppi::sim
