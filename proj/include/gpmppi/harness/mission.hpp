#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpmppi/mppi/planner.hpp"
#include "gpmppi/sim/costmap.hpp"
#include "gpmppi/sim/dynamics.hpp"
#include "gpmppi/sim/lidar.hpp"
#include "gpmppi/sim/world.hpp"
#include "gpmppi/subgoal/recommender.hpp"

namespace gpmppi::harness {

using sim::ControlInput;
using sim::RobotState;

enum class Mode { baseline, simple, recovery };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::baseline: return "baseline";
        case Mode::simple: return "sm";
        default: return "rm";
    }
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "baseline" || s == "mppi") return Mode::baseline;
    if (s == "sm" || s == "simple") return Mode::simple;
    if (s == "rm" || s == "recovery") return Mode::recovery;
    throw std::invalid_argument("unknown mode: " + s + " (expected baseline, sm or rm)");
}

/// Raised for anything wrong with a mission description before stepping starts.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Target { goal, subgoal };

inline std::string to_string(Target t) { return t == Target::goal ? "goal" : "subgoal"; }

/// Mode arbitration: SM always follows the subgoal, RM only while the predicted mean speed is
/// below u_th, baseline never. Without a subgoal the goal is used.
inline Target select_target_kind(Mode mode, double mu_u, double u_th, bool have_subgoal) {
    if (!have_subgoal) return Target::goal;
    switch (mode) {
        case Mode::simple: return Target::subgoal;
        case Mode::recovery: return mu_u < u_th ? Target::subgoal : Target::goal;
        default: return Target::goal;
    }
}

inline RobotState select_target(Mode mode, double mu_u, double u_th, const RobotState& goal,
                                const std::optional<RobotState>& subgoal) {
    return select_target_kind(mode, mu_u, u_th, subgoal.has_value()) == Target::subgoal ? *subgoal : goal;
}

struct MissionConfig {
    sim::World world;
    RobotState start;
    RobotState goal;
    Mode mode{Mode::recovery};
    double u_th{0.55};
    double goal_tolerance{0.3};
    std::size_t max_steps{3000};
    std::uint64_t seed{0};

    mppi::MppiParams mppi;
    /// Footprint used against the true geometry; the planner checks the costmap with an extra margin.
    double footprint_radius{0.3};
    double planning_margin{0.1};

    sim::SensorConfig costmap_sensor{360, 1};
    sim::SensorConfig recommender_sensor{90, 4, 0.0, deg2rad(15.0), 5.0, 0.0, 0, true};
    sim::CostmapConfig costmap;
    subgoal::OccupancySurfaceConfig surface;
    /// Run the recommender every k-th step (RM: every k-th step spent below u_th).
    int recommender_every{1};
    /// RM only: once the subgoal is selected, keep it for at least this many seconds (0 = pure switching).
    double rm_hold_s{6.0};
    /// Seconds of sub-threshold predicted speed after which a baseline run counts as trapped.
    double trap_window_s{10.0};
    /// Keep a variance-surface/frontier dump every k-th recommendation (0 = never).
    int surface_dump_every{0};
    /// Replaces the recommender when set (tests use it to force a known subgoal).
    std::function<std::optional<RobotState>(const RobotState&)> subgoal_override;

    void validate() const {
        try {
            mppi.validate();
            surface.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (!(u_th >= 0.0)) throw ConfigError("u_th must be >= 0");
        if (!(goal_tolerance > 0.0)) throw ConfigError("goal tolerance must be positive");
        if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
        if (!(footprint_radius > 0.0) || planning_margin < 0.0) throw ConfigError("invalid footprint");
        if (recommender_every < 1) throw ConfigError("recommender_every must be >= 1");
        if (!(trap_window_s > 0.0)) throw ConfigError("trap window must be positive");
        if (costmap.width < 1 || costmap.height < 1 || !(costmap.resolution > 0.0)) throw ConfigError("bad costmap");
        if (sim::disc_collides(world, start.x, start.y, footprint_radius)) throw ConfigError("start is not free");
        if (sim::disc_collides(world, goal.x, goal.y, footprint_radius)) throw ConfigError("goal is not free");
    }
};

/// One control step as logged to the trajectory CSV: the state reached after executing (v, omega).
struct TrajectoryRow {
    double t{0.0};
    RobotState state;
    ControlInput control;
    Target target{Target::goal};
    double mu_u{0.0};
};

struct MissionResult {
    bool completed{false};
    bool trapped{false};
    bool collided{false};
    double distance{0.0};
    double mean_speed{0.0};
    double gp_assist{0.0};
    /// Fraction of the start-goal straight-line distance covered at termination, in [0, 1].
    double progress{0.0};
    std::size_t steps{0};
    double sim_time{0.0};
    double wall_time{0.0};
    double max_step_wall_time{0.0};
    RobotState final_state;
    std::vector<TrajectoryRow> trajectory;
    std::vector<RobotState> subgoals;  // one per recommendation that produced a subgoal
    std::vector<nlohmann::json> surface_dumps;
    std::optional<sgp::SgpModel> last_model;
};

/// Closed loop: sense, recommend, one MPPI iteration, integrate, check termination.
inline MissionResult run_mission(const MissionConfig& cfg) {
    cfg.validate();
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();

    mppi::MppiParams mp = cfg.mppi;
    mp.footprint_radius = cfg.footprint_radius + cfg.planning_margin;
    mp.goal_tolerance = cfg.goal_tolerance;
    mppi::MppiPlanner planner(mp, cfg.seed);
    subgoal::SubgoalRecommender recommender(cfg.surface, cfg.seed);

    MissionResult res;
    RobotState x = cfg.start;
    const double d0 = sim::planar_distance(cfg.start, cfg.goal);
    const auto trap_steps = static_cast<std::size_t>(std::llround(cfg.trap_window_s / mp.dt));
    std::size_t below = 0;
    std::size_t on_subgoal = 0;
    std::size_t since_recommend = 0;
    std::size_t hold = 0;
    int recommendations = 0;
    std::optional<RobotState> subgoal;

    auto finish = [&]() {
        res.final_state = x;
        res.steps = res.trajectory.size();
        res.sim_time = static_cast<double>(res.steps) * mp.dt;
        res.mean_speed = res.sim_time > 0.0 ? res.distance / res.sim_time : 0.0;
        if (cfg.mode == Mode::simple) {
            res.gp_assist = 1.0;
        } else if (cfg.mode == Mode::recovery && res.steps > 0) {
            res.gp_assist = static_cast<double>(on_subgoal) / static_cast<double>(res.steps);
        }
        const double dn = sim::planar_distance(x, cfg.goal);
        res.progress = res.completed ? 1.0 : (d0 > 0.0 ? std::clamp(1.0 - dn / d0, 0.0, 1.0) : 0.0);
        res.last_model = recommender.last_model();
        res.wall_time = std::chrono::duration<double>(clock::now() - t_start).count();
        return res;
    };

    if (d0 <= cfg.goal_tolerance) {
        res.completed = true;
        return finish();
    }

    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        const auto t_step = clock::now();
        const double mu_u = mppi::predicted_mean_speed(planner.sequence());

        // The recommender only matters when its subgoal can be selected.
        const bool wants_subgoal =
            cfg.mode == Mode::simple || (cfg.mode == Mode::recovery && (mu_u < cfg.u_th || hold > 0));
        if (wants_subgoal && (!subgoal || ++since_recommend >= static_cast<std::size_t>(cfg.recommender_every))) {
            since_recommend = 0;
            if (cfg.subgoal_override) {
                subgoal = cfg.subgoal_override(x);
            } else {
                try {
                    const auto rcloud = sim::simulate_lidar(cfg.world, x, cfg.recommender_sensor);
                    if (cfg.surface.goal_view_footprint > 0.0 &&
                        subgoal::goal_in_view(rcloud, x, cfg.goal, cfg.surface.r_oc, cfg.surface.goal_view_footprint)) {
                        // Same heading convention as frontier subgoals: face along the approach.
                        subgoal = RobotState{cfg.goal.x, cfg.goal.y, std::atan2(cfg.goal.y - x.y, cfg.goal.x - x.x)};
                    } else {
                        auto rec = recommender(rcloud, x, cfg.goal);
                        // No frontier at all: fall back to the global goal.
                        subgoal = rec.subgoal ? rec.subgoal : std::optional<RobotState>(cfg.goal);
                        if (cfg.surface_dump_every > 0 && recommendations % cfg.surface_dump_every == 0) {
                            auto dump = subgoal::to_json(rec);
                            dump["step"] = step;
                            dump["pose"] = sim::pose_to_json(x);
                            res.surface_dumps.push_back(std::move(dump));
                        }
                    }
                } catch (const std::runtime_error&) {
                    // Fit failure: keep the previous subgoal.
                }
            }
            ++recommendations;
            if (subgoal) res.subgoals.push_back(*subgoal);
        }

        Target kind = select_target_kind(cfg.mode, mu_u, cfg.u_th, subgoal.has_value());
        if (cfg.mode == Mode::recovery) {
            if (kind == Target::subgoal) {
                hold = static_cast<std::size_t>(std::llround(cfg.rm_hold_s / mp.dt));
            } else if (hold > 0 && subgoal) {
                --hold;
                kind = Target::subgoal;
            }
        }
        const RobotState target = kind == Target::subgoal ? *subgoal : cfg.goal;
        if (kind == Target::subgoal) ++on_subgoal;

        const auto cloud = sim::simulate_lidar(cfg.world, x, cfg.costmap_sensor);
        const auto costmap = sim::build_costmap(cloud, x, cfg.costmap);
        const auto diag = planner.iterate(x, costmap, target);

        const RobotState next = sim::step_dynamics(x, diag.executed, mp.dt);
        res.distance += sim::planar_distance(x, next);
        x = next;
        res.trajectory.push_back({static_cast<double>(step + 1) * mp.dt, x, diag.executed, kind, mu_u});
        res.max_step_wall_time =
            std::max(res.max_step_wall_time, std::chrono::duration<double>(clock::now() - t_step).count());

        if (sim::disc_collides(cfg.world, x.x, x.y, cfg.footprint_radius)) {
            res.collided = true;
            return finish();
        }
        if (sim::planar_distance(x, cfg.goal) <= cfg.goal_tolerance) {
            res.completed = true;
            return finish();
        }
        if (cfg.mode == Mode::baseline) {
            below = mu_u < cfg.u_th ? below + 1 : 0;
            if (below >= trap_steps) {
                res.trapped = true;
                return finish();
            }
        }
    }
    res.trapped = true;  // ran out of steps
    return finish();
}

}  // namespace gpmppi::harness
