#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpmppi/common.hpp"
#include "gpmppi/sgp/sparse.hpp"
#include "gpmppi/sim/types.hpp"

namespace gpmppi::subgoal {

using sim::RobotState;

struct Cartesian {
    double x{0.0};
    double y{0.0};
    double z{0.0};
};

inline sim::SphericalPoint cartesian_to_spherical(const Cartesian& c) {
    const double planar = std::hypot(c.x, c.y);
    return {std::atan2(c.y, c.x), std::atan2(c.z, planar), std::hypot(planar, c.z)};
}

inline Cartesian spherical_to_cartesian(const sim::SphericalPoint& p) {
    const double planar = p.range * std::cos(p.elevation);
    return {planar * std::cos(p.azimuth), planar * std::sin(p.azimuth), p.range * std::sin(p.elevation)};
}

/// Sensor-centred band of directions the occupancy surface lives on, plus recommender knobs.
struct OccupancySurfaceConfig {
    double r_oc{5.0};
    double elevation_min{0.0};
    double elevation_max{deg2rad(15.0)};
    /// Z* grid. Azimuth cells tile the full circle starting at -pi; elevation cells include both ends.
    int azimuth_cells{90};
    int elevation_cells{4};
    double k_m{0.4};
    std::size_t inducing_points{400};
    int min_component_cells{3};
    /// Widest azimuth extent, in grid columns, a single frontier may summarize.
    int max_frontier_span{15};
    double k_dst{5.0};
    double k_dir{4.0};
    sgp::FitOptions fit{};
    /// Recommend the goal itself once it is within r_oc and in line of sight (footprint-wide
    /// corridor clear in the cloud); 0 disables the shortcut.
    double goal_view_footprint{0.3};
    /// Iteration cap when the fit is warm-started from the previous observation's model.
    int warm_iterations{30};

    void validate() const {
        if (!(r_oc > 0.0)) throw std::invalid_argument("occupancy surface: r_oc must be positive");
        if (azimuth_cells < 1 || elevation_cells < 1) throw std::invalid_argument("occupancy surface: empty grid");
        if (elevation_max < elevation_min) throw std::invalid_argument("occupancy surface: elevation range inverted");
        if (!(k_m > 0.0)) throw std::invalid_argument("occupancy surface: k_m must be positive");
        if (inducing_points < 1) throw std::invalid_argument("occupancy surface: needs inducing points");
        if (k_dst < 0.0 || k_dir < 0.0) throw std::invalid_argument("occupancy surface: negative cost weight");
    }

    [[nodiscard]] double azimuth_step() const { return kTwoPi / azimuth_cells; }
    [[nodiscard]] double elevation_step() const {
        return elevation_cells > 1 ? (elevation_max - elevation_min) / (elevation_cells - 1) : 0.0;
    }
    [[nodiscard]] double azimuth_at(int i) const { return -kPi + i * azimuth_step(); }
    [[nodiscard]] double elevation_at(int j) const { return elevation_min + j * elevation_step(); }

    [[nodiscard]] sgp::Inputs grid() const {
        sgp::Inputs z(static_cast<Eigen::Index>(azimuth_cells) * elevation_cells, 2);
        for (int j = 0; j < elevation_cells; ++j) {
            for (int i = 0; i < azimuth_cells; ++i) {
                z(j * azimuth_cells + i, 0) = azimuth_at(i);
                z(j * azimuth_cells + i, 1) = elevation_at(j);
            }
        }
        return z;
    }
};

/// Occupancy r_oc - r per return. Returns beyond r_oc count as free space (occupancy 0);
/// returns outside the elevation band are dropped.
inline sgp::TrainingSet cloud_to_training_set(const sim::PointCloud& cloud, const OccupancySurfaceConfig& c) {
    constexpr double eps = 1e-12;
    std::vector<std::size_t> keep;
    keep.reserve(cloud.size());
    for (std::size_t k = 0; k < cloud.size(); ++k) {
        const auto& p = cloud.points[k];
        if (p.elevation < c.elevation_min - eps || p.elevation > c.elevation_max + eps) continue;
        keep.push_back(k);
    }
    sgp::TrainingSet t;
    t.inputs.resize(static_cast<Eigen::Index>(keep.size()), 2);
    t.targets.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const auto& p = cloud.points[keep[r]];
        const auto i = static_cast<Eigen::Index>(r);
        t.inputs(i, 0) = wrap_angle(p.azimuth);
        t.inputs(i, 1) = p.elevation;
        t.targets[i] = p.range > c.r_oc ? 0.0 : c.r_oc - p.range;
    }
    return t;
}

/// Predicted occupancy and variance over Z*, stored elevation-major: cell (i, j) is at j * A + i.
struct VarianceSurface {
    int azimuth_cells{0};
    int elevation_cells{0};
    std::vector<double> azimuths;
    std::vector<double> elevations;
    std::vector<double> mean;
    std::vector<double> variance;
    double k_m{0.4};
    double threshold{0.0};
    std::optional<sgp::SgpModel> model;  // absent when there was no data

    [[nodiscard]] std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(azimuth_cells) + static_cast<std::size_t>(i);
    }
    [[nodiscard]] double var(int i, int j) const { return variance[index(i, j)]; }
    [[nodiscard]] bool above(int i, int j) const { return var(i, j) > threshold; }

    void recompute_threshold() {
        threshold = k_m * std::accumulate(variance.begin(), variance.end(), 0.0) / static_cast<double>(variance.size());
    }

    [[nodiscard]] std::size_t count_above() const {
        std::size_t n = 0;
        for (double v : variance) n += v > threshold ? 1 : 0;
        return n;
    }

    /// Grid cell nearest to a direction (azimuth wraps, elevation clamps).
    [[nodiscard]] std::pair<int, int> nearest_cell(double azimuth, double elevation) const {
        const double step = kTwoPi / azimuth_cells;
        int i = static_cast<int>(std::lround((wrap_angle(azimuth) + kPi) / step)) % azimuth_cells;
        if (i < 0) i += azimuth_cells;
        int j = 0;
        if (elevation_cells > 1) {
            const double es = elevations[1] - elevations[0];
            j = static_cast<int>(std::lround((elevation - elevations[0]) / es));
            j = std::clamp(j, 0, elevation_cells - 1);
        }
        return {i, j};
    }
};

inline VarianceSurface empty_surface(const OccupancySurfaceConfig& c) {
    VarianceSurface s;
    s.azimuth_cells = c.azimuth_cells;
    s.elevation_cells = c.elevation_cells;
    for (int i = 0; i < c.azimuth_cells; ++i) s.azimuths.push_back(c.azimuth_at(i));
    for (int j = 0; j < c.elevation_cells; ++j) s.elevations.push_back(c.elevation_at(j));
    s.k_m = c.k_m;
    return s;
}

/// Fits the SGP on the occupancy data and predicts over Z*. With no data the surface is the
/// unit prior: zero mean, variance 1 everywhere.
inline VarianceSurface build_variance_surface(const sgp::TrainingSet& train, const OccupancySurfaceConfig& c,
                                              std::uint64_t seed,
                                              const std::optional<sgp::SgpModel>& warm_start = std::nullopt) {
    c.validate();
    VarianceSurface s = empty_surface(c);
    const std::size_t cells = s.azimuths.size() * s.elevations.size();
    if (train.empty()) {
        s.mean.assign(cells, 0.0);
        s.variance.assign(cells, 1.0);
        s.recompute_threshold();
        return s;
    }
    sgp::FitOptions opt = c.fit;
    opt.elevation_domain = std::make_pair(c.elevation_min, c.elevation_max);
    if (warm_start) {
        opt.warm_start = warm_start;
        opt.max_iterations = std::min(opt.max_iterations, c.warm_iterations);
    }
    const std::size_t m = std::min<std::size_t>(c.inducing_points, static_cast<std::size_t>(train.size()));
    auto report = sgp::fit(train, m, seed, opt);
    const auto pred = sgp::sgp_predict(report.model, c.grid());
    s.mean.assign(pred.mean.data(), pred.mean.data() + pred.mean.size());
    s.variance.assign(pred.variance.data(), pred.variance.data() + pred.variance.size());
    s.model = std::move(report.model);
    s.recompute_threshold();
    return s;
}

inline nlohmann::json to_json(const VarianceSurface& s) {
    return {
        {"azimuth_cells", s.azimuth_cells}, {"elevation_cells", s.elevation_cells},
        {"azimuths", s.azimuths},           {"elevations", s.elevations},
        {"mean", s.mean},                   {"variance", s.variance},
        {"k_m", s.k_m},                     {"threshold", s.threshold},
    };
}

}  // namespace gpmppi::subgoal
