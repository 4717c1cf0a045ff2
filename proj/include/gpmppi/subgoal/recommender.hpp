#pragma once

#include <cstdint>
#include <optional>

#include <nlohmann/json.hpp>

#include "gpmppi/subgoal/frontier.hpp"
#include "gpmppi/subgoal/surface.hpp"

namespace gpmppi::subgoal {

/// Everything one pass of the recommender produced.
struct Recommendation {
    std::optional<RobotState> subgoal;
    VarianceSurface surface;
    FrontierSet frontiers;
};

/// True when the goal lies within r_oc and no return along its bearing (widened by the
/// footprint) comes closer than the goal itself.
inline bool goal_in_view(const sim::PointCloud& cloud, const RobotState& robot, const RobotState& goal, double r_oc,
                         double footprint_radius) {
    const double d = std::hypot(goal.x - robot.x, goal.y - robot.y);
    if (d > r_oc) return false;
    if (d <= footprint_radius) return true;
    const double bearing = wrap_angle(std::atan2(goal.y - robot.y, goal.x - robot.x) - robot.theta);
    const double half = std::asin(std::min(1.0, footprint_radius / d));
    for (const auto& p : cloud.points) {
        if (std::abs(wrap_angle(p.azimuth - bearing)) > half) continue;
        if (p.range * std::cos(p.elevation) < d) return false;
    }
    return true;
}

/// Cloud -> occupancy data -> SGP -> variance surface -> frontiers -> argmin J_gp.
/// The subgoal sits at horizontal range r_oc and faces along the robot-to-frontier bearing.
inline Recommendation recommend_full(const sim::PointCloud& cloud, const RobotState& robot, const RobotState& goal,
                                     const OccupancySurfaceConfig& config, std::uint64_t seed = 0,
                                     const std::optional<sgp::SgpModel>& warm_start = std::nullopt) {
    Recommendation r;
    r.surface = build_variance_surface(cloud_to_training_set(cloud, config), config, seed, warm_start);
    const auto centroids = extract_frontiers(r.surface, config.min_component_cells, config.max_frontier_span);
    r.frontiers = score_frontiers(centroids, robot, goal, config.r_oc, config.k_dst, config.k_dir);
    if (r.frontiers.optimal) {
        const auto& f = r.frontiers.frontiers[*r.frontiers.optimal];
        r.subgoal = RobotState{f.x, f.y, wrap_angle(robot.theta + f.bearing)};
    }
    return r;
}

inline std::optional<RobotState> recommend(const sim::PointCloud& cloud, const RobotState& robot,
                                           const RobotState& goal, const OccupancySurfaceConfig& config,
                                           std::uint64_t seed = 0) {
    return recommend_full(cloud, robot, goal, config, seed).subgoal;
}

/// Stateful wrapper used inside a mission: warm-starts each fit from the previous model.
class SubgoalRecommender {
public:
    SubgoalRecommender(OccupancySurfaceConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
        config_.validate();
    }

    Recommendation operator()(const sim::PointCloud& cloud, const RobotState& robot, const RobotState& goal) {
        auto r = recommend_full(cloud, robot, goal, config_, seed_, previous_);
        if (r.surface.model) previous_ = r.surface.model;
        return r;
    }

    [[nodiscard]] const OccupancySurfaceConfig& config() const { return config_; }
    [[nodiscard]] const std::optional<sgp::SgpModel>& last_model() const { return previous_; }

private:
    OccupancySurfaceConfig config_;
    std::uint64_t seed_;
    std::optional<sgp::SgpModel> previous_;
};

inline nlohmann::json to_json(const Recommendation& r) {
    nlohmann::json j = {{"surface", to_json(r.surface)}, {"frontiers", to_json(r.frontiers)}};
    j["subgoal"] = r.subgoal ? nlohmann::json::array({r.subgoal->x, r.subgoal->y, r.subgoal->theta})
                             : nlohmann::json(nullptr);
    return j;
}

}  // namespace gpmppi::subgoal
