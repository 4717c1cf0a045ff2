#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpmppi/harness/mission.hpp"

namespace gpmppi::harness {

inline constexpr const char* kTrajectoryHeader = "t,x,y,theta,v,omega,mode_target,mu_u";

inline void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows) {
    os << kTrajectoryHeader << '\n' << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.t << ',' << r.state.x << ',' << r.state.y << ',' << r.state.theta << ',' << r.control.v << ','
           << r.control.omega << ',' << to_string(r.target) << ',' << r.mu_u << '\n';
    }
}

inline std::vector<TrajectoryRow> read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kTrajectoryHeader) {
        throw std::runtime_error("trajectory csv: missing or unexpected header");
    }
    std::vector<TrajectoryRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[8];
        for (auto& cell : f) {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("trajectory csv: short row: " + line);
        }
        TrajectoryRow r;
        r.t = std::stod(f[0]);
        r.state = {std::stod(f[1]), std::stod(f[2]), std::stod(f[3])};
        r.control = {std::stod(f[4]), std::stod(f[5])};
        if (f[6] == "goal") {
            r.target = Target::goal;
        } else if (f[6] == "subgoal") {
            r.target = Target::subgoal;
        } else {
            throw std::runtime_error("trajectory csv: bad mode_target '" + f[6] + "'");
        }
        r.mu_u = std::stod(f[7]);
        rows.push_back(r);
    }
    return rows;
}

inline std::vector<RobotState> read_subgoals_csv(std::istream& is) {
    std::string line;
    std::getline(is, line);
    std::vector<RobotState> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, c;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, c, ',');
        out.push_back({std::stod(a), std::stod(b), std::stod(c)});
    }
    return out;
}

inline std::string outcome(const MissionResult& r) {
    if (r.completed) return "completed";
    if (r.collided) return "collided";
    return "trapped";
}

inline nlohmann::json metrics_to_json(const MissionResult& r, const MissionConfig& c) {
    return {
        {"mode", to_string(c.mode)},
        {"seed", c.seed},
        {"world", sim::to_string(c.world.kind)},
        {"outcome", outcome(r)},
        {"completed", r.completed},
        {"trapped", r.trapped},
        {"collided", r.collided},
        {"distance", r.distance},
        {"mean_speed", r.mean_speed},
        {"gp_assist", r.gp_assist},
        {"progress", r.progress},
        {"steps", r.steps},
        {"sim_time", r.sim_time},
        {"wall_time", r.wall_time},
        {"max_step_wall_time", r.max_step_wall_time},
        {"recommendations", r.subgoals.size()},
        {"final_pose", sim::pose_to_json(r.final_state)},
        {"u_th", c.u_th},
        {"rollouts", c.mppi.rollouts},
        {"horizon", c.mppi.horizon},
    };
}

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

}  // namespace detail

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
    detail::write_text(p, j.dump(2) + "\n");
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    return nlohmann::json::parse(in);
}

/// Everything a single run leaves behind:
///   world.json, trajectory.csv, metrics.json, costmap_final.pgm,
///   subgoals.csv, model.json (last SGP snapshot, if any), surfaces.json (variance surface / frontier dumps, if any).
inline void write_run_outputs(const std::filesystem::path& dir, const MissionConfig& c, const MissionResult& r) {
    std::filesystem::create_directories(dir);
    write_json(dir / "world.json", sim::to_json(c.world));
    {
        std::ofstream out(dir / "trajectory.csv");
        if (!out) throw std::runtime_error("cannot write " + (dir / "trajectory.csv").string());
        write_trajectory_csv(out, r.trajectory);
    }
    write_json(dir / "metrics.json", metrics_to_json(r, c));
    {
        const auto cloud = sim::simulate_lidar(c.world, r.final_state, c.costmap_sensor);
        std::ofstream out(dir / "costmap_final.pgm");
        sim::write_pgm(out, sim::build_costmap(cloud, r.final_state, c.costmap));
    }
    if (!r.subgoals.empty()) {
        std::ofstream out(dir / "subgoals.csv");
        out << "x,y,theta\n" << std::setprecision(17);
        for (const auto& g : r.subgoals) out << g.x << ',' << g.y << ',' << g.theta << '\n';
    }
    if (r.last_model) write_json(dir / "model.json", sgp::to_json(*r.last_model));
    if (!r.surface_dumps.empty()) write_json(dir / "surfaces.json", nlohmann::json(r.surface_dumps));
}

}  // namespace gpmppi::harness
