#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "gpmppi/harness/mission.hpp"

namespace gpmppi::harness {

/// A mission file plus what `batch` needs to repeat it.
struct Experiment {
    nlohmann::json document;
    int trials{10};
    std::uint64_t first_seed{1};
    std::filesystem::path base{"."};  // relative world files resolve against this

    /// Mission for one seed. Generated worlds are rebuilt from that seed unless the file pins world.seed.
    [[nodiscard]] MissionConfig mission(std::uint64_t seed) const;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

inline sim::World load_world(const nlohmann::json& j, std::uint64_t seed, const std::filesystem::path& base) {
    if (j.is_string()) {
        std::filesystem::path p = j.get<std::string>();
        if (p.is_relative()) p = base / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("cannot open world file " + p.string());
        return sim::world_from_json(nlohmann::json::parse(in));
    }
    if (j.contains("obstacles")) return sim::world_from_json(j);
    check_keys(j, {"kind", "seed", "params"}, "world");
    const auto kind = sim::world_kind_from_string(j.value("kind", "maze"));
    return sim::make_world(kind, j.value("params", nlohmann::json::object()), j.value("seed", seed));
}

inline void apply_sensor(const nlohmann::json& j, sim::SensorConfig& s, const std::string& where) {
    check_keys(j, {"azimuth_rays", "elevation_rings", "elevation_min_deg", "elevation_max_deg", "r_max",
                   "range_noise_std", "noise_seed"},
               where);
    s.azimuth_rays = j.value("azimuth_rays", s.azimuth_rays);
    s.elevation_rings = j.value("elevation_rings", s.elevation_rings);
    if (j.contains("elevation_min_deg")) s.elevation_min = deg2rad(j.at("elevation_min_deg").get<double>());
    if (j.contains("elevation_max_deg")) s.elevation_max = deg2rad(j.at("elevation_max_deg").get<double>());
    s.r_max = j.value("r_max", s.r_max);
    s.range_noise_std = j.value("range_noise_std", s.range_noise_std);
    s.noise_seed = j.value("noise_seed", s.noise_seed);
    if (s.azimuth_rays < 1 || s.elevation_rings < 1 || !(s.r_max > 0.0) || s.range_noise_std < 0.0) {
        throw ConfigError(where + ": invalid sensor");
    }
}

inline void apply_mppi(const nlohmann::json& j, mppi::MppiParams& p) {
    check_keys(j, {"lambda", "nu", "sigma", "Q", "R", "crash_penalty", "sticky_crash", "rollouts", "horizon", "dt",
                   "v_max", "omega_max", "sg_order", "sg_window", "threads"},
               "mppi");
    p.lambda = j.value("lambda", p.lambda);
    p.nu = j.value("nu", p.nu);
    if (j.contains("sigma")) {
        const auto s = j.at("sigma").get<std::vector<double>>();
        if (s.size() != 2) throw ConfigError("mppi.sigma must be [var_v, var_omega]");
        p.sigma = {s[0], s[1]};
    }
    if (j.contains("Q")) {
        const auto q = j.at("Q").get<std::vector<double>>();
        if (q.size() != 3) throw ConfigError("mppi.Q must hold the 3 diagonal weights");
        p.Q = Eigen::Vector3d(q[0], q[1], q[2]).asDiagonal();
    }
    if (j.contains("R")) {
        const auto r = j.at("R").get<std::vector<double>>();
        if (r.size() != 2) throw ConfigError("mppi.R must hold the 2 diagonal weights");
        p.R = Eigen::Vector2d(r[0], r[1]).asDiagonal();
    } else {
        p.R = mppi::MppiParams::default_control_weight(p.lambda, p.sigma);
    }
    p.crash_penalty = j.value("crash_penalty", p.crash_penalty);
    p.sticky_crash = j.value("sticky_crash", p.sticky_crash);
    p.rollouts = j.value("rollouts", p.rollouts);
    p.horizon = j.value("horizon", p.horizon);
    p.dt = j.value("dt", p.dt);
    p.v_max = j.value("v_max", p.v_max);
    p.omega_max = j.value("omega_max", p.omega_max);
    p.sg_order = j.value("sg_order", p.sg_order);
    p.sg_window = j.value("sg_window", p.sg_window);
    p.threads = j.value("threads", p.threads);
    // A window wider than a short horizon is narrowed to the largest odd width that fits.
    if (!j.contains("sg_window") && static_cast<std::size_t>(p.sg_window) > p.horizon) {
        p.sg_window = static_cast<int>(p.horizon % 2 == 1 ? p.horizon : p.horizon - 1);
    }
}

inline void apply_surface(const nlohmann::json& j, subgoal::OccupancySurfaceConfig& c) {
    check_keys(j, {"r_oc", "elevation_min_deg", "elevation_max_deg", "azimuth_cells", "elevation_cells", "k_m",
                   "inducing_points", "min_component_cells", "max_frontier_span", "k_dst", "k_dir", "fit",
                   "goal_view_footprint", "warm_iterations"},
               "surface");
    c.r_oc = j.value("r_oc", c.r_oc);
    if (j.contains("elevation_min_deg")) c.elevation_min = deg2rad(j.at("elevation_min_deg").get<double>());
    if (j.contains("elevation_max_deg")) c.elevation_max = deg2rad(j.at("elevation_max_deg").get<double>());
    c.azimuth_cells = j.value("azimuth_cells", c.azimuth_cells);
    c.elevation_cells = j.value("elevation_cells", c.elevation_cells);
    c.k_m = j.value("k_m", c.k_m);
    c.inducing_points = j.value("inducing_points", c.inducing_points);
    c.min_component_cells = j.value("min_component_cells", c.min_component_cells);
    c.max_frontier_span = j.value("max_frontier_span", c.max_frontier_span);
    c.k_dst = j.value("k_dst", c.k_dst);
    c.k_dir = j.value("k_dir", c.k_dir);
    c.goal_view_footprint = j.value("goal_view_footprint", c.goal_view_footprint);
    c.warm_iterations = j.value("warm_iterations", c.warm_iterations);
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        check_keys(f, {"max_iterations", "learning_rate", "inducing_learning_rate", "tolerance", "patience",
                       "optimize_inducing", "initial_length_scale", "initial_alpha", "noise_ratio"},
                   "surface.fit");
        auto& o = c.fit;
        o.max_iterations = f.value("max_iterations", o.max_iterations);
        o.learning_rate = f.value("learning_rate", o.learning_rate);
        o.inducing_learning_rate = f.value("inducing_learning_rate", o.inducing_learning_rate);
        o.tolerance = f.value("tolerance", o.tolerance);
        o.patience = f.value("patience", o.patience);
        o.optimize_inducing = f.value("optimize_inducing", o.optimize_inducing);
        o.initial_length_scale = f.value("initial_length_scale", o.initial_length_scale);
        o.initial_alpha = f.value("initial_alpha", o.initial_alpha);
        o.noise_ratio = f.value("noise_ratio", o.noise_ratio);
    }
}

}  // namespace detail

/// Everything in a mission file except the world, applied on top of the defaults.
inline MissionConfig mission_from_json(const nlohmann::json& j, std::uint64_t seed,
                                       const std::filesystem::path& base = ".") {
    try {
        detail::check_keys(j, {"world", "start", "goal", "mode", "seed", "trials", "u_th", "goal_tolerance",
                               "max_steps", "trap_window_s", "recommender_every", "rm_hold_s", "footprint_radius",
                               "planning_margin", "surface_dump_every", "mppi", "costmap", "costmap_sensor",
                               "recommender_sensor", "surface"},
                           "mission");
        MissionConfig c;
        c.seed = seed;
        c.world = detail::load_world(j.value("world", nlohmann::json::object()), seed, base);
        c.start = j.contains("start") ? sim::pose_from_json(j.at("start")) : c.world.start;
        c.goal = j.contains("goal") ? sim::pose_from_json(j.at("goal")) : c.world.goal;
        c.mode = mode_from_string(j.value("mode", to_string(c.mode)));
        c.u_th = j.value("u_th", c.u_th);
        c.goal_tolerance = j.value("goal_tolerance", c.goal_tolerance);
        c.max_steps = j.value("max_steps", c.max_steps);
        c.trap_window_s = j.value("trap_window_s", c.trap_window_s);
        c.recommender_every = j.value("recommender_every", c.recommender_every);
        c.rm_hold_s = j.value("rm_hold_s", c.rm_hold_s);
        c.footprint_radius = j.value("footprint_radius", c.footprint_radius);
        c.planning_margin = j.value("planning_margin", c.planning_margin);
        c.surface_dump_every = j.value("surface_dump_every", c.surface_dump_every);
        if (j.contains("mppi")) detail::apply_mppi(j.at("mppi"), c.mppi);
        if (j.contains("costmap")) {
            const auto& m = j.at("costmap");
            detail::check_keys(m, {"width", "height", "resolution"}, "costmap");
            c.costmap.width = m.value("width", c.costmap.width);
            c.costmap.height = m.value("height", c.costmap.height);
            c.costmap.resolution = m.value("resolution", c.costmap.resolution);
        }
        if (j.contains("costmap_sensor")) detail::apply_sensor(j.at("costmap_sensor"), c.costmap_sensor, "costmap_sensor");
        if (j.contains("recommender_sensor")) {
            detail::apply_sensor(j.at("recommender_sensor"), c.recommender_sensor, "recommender_sensor");
        }
        c.recommender_sensor.recommender_only = true;
        if (j.contains("surface")) detail::apply_surface(j.at("surface"), c.surface);
        c.validate();
        return c;
    } catch (const ConfigError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const std::runtime_error& e) {
        // generators refuse impossible layouts with runtime_error
        throw ConfigError(e.what());
    }
}

inline MissionConfig Experiment::mission(std::uint64_t seed) const {
    return mission_from_json(document, seed, base);
}

inline Experiment experiment_from_json(nlohmann::json j, const std::filesystem::path& base = ".") {
    Experiment e;
    try {
        e.trials = j.value("trials", e.trials);
        e.first_seed = j.value("seed", e.first_seed);
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    }
    if (e.trials < 1) throw ConfigError("trials must be >= 1");
    e.document = std::move(j);
    e.base = base;
    return e;
}

inline Experiment load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return experiment_from_json(std::move(j), path.parent_path());
}

}  // namespace gpmppi::harness
