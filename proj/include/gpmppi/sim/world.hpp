#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpmppi/sim/types.hpp"

namespace gpmppi::sim {

enum class ShapeKind { circle, rect };

/// Circle (radius) or axis-aligned rectangle (width x height) centered at (x, y).
struct Obstacle {
    ShapeKind shape{ShapeKind::circle};
    double x{0.0};
    double y{0.0};
    double radius{0.0};
    double width{0.0};
    double height{0.0};
    bool recommender_visible{true};

    static Obstacle circle(double cx, double cy, double r, bool visible = true) {
        return Obstacle{ShapeKind::circle, cx, cy, r, 0.0, 0.0, visible};
    }
    /// Rectangle given by its corners.
    static Obstacle box(double xmin, double ymin, double xmax, double ymax, bool visible = true) {
        return Obstacle{ShapeKind::rect, 0.5 * (xmin + xmax), 0.5 * (ymin + ymax), 0.0,
                        xmax - xmin, ymax - ymin, visible};
    }

    /// Euclidean distance from a point to the shape; zero inside.
    [[nodiscard]] double distance_to(double px, double py) const {
        if (shape == ShapeKind::circle) {
            return std::max(0.0, std::hypot(px - x, py - y) - radius);
        }
        const double dx = std::max(std::abs(px - x) - 0.5 * width, 0.0);
        const double dy = std::max(std::abs(py - y) - 0.5 * height, 0.0);
        return std::hypot(dx, dy);
    }

    [[nodiscard]] bool contains(double px, double py) const {
        if (shape == ShapeKind::circle) return std::hypot(px - x, py - y) < radius;
        return std::abs(px - x) < 0.5 * width && std::abs(py - y) < 0.5 * height;
    }

    /// Smallest t >= 0 with origin + t*dir on the boundary, if any. dir must be unit length.
    [[nodiscard]] std::optional<double> ray_hit(double ox, double oy, double dx, double dy) const {
        if (shape == ShapeKind::circle) {
            const double fx = ox - x;
            const double fy = oy - y;
            const double b = fx * dx + fy * dy;
            const double c = fx * fx + fy * fy - radius * radius;
            const double disc = b * b - c;
            if (disc < 0.0) return std::nullopt;
            const double sq = std::sqrt(disc);
            const double t0 = -b - sq;
            if (t0 >= 0.0) return t0;
            const double t1 = -b + sq;
            if (t1 >= 0.0) return t1;
            return std::nullopt;
        }
        // slab method
        double tmin = -std::numeric_limits<double>::infinity();
        double tmax = std::numeric_limits<double>::infinity();
        const double lo[2] = {x - 0.5 * width, y - 0.5 * height};
        const double hi[2] = {x + 0.5 * width, y + 0.5 * height};
        const double o[2] = {ox, oy};
        const double d[2] = {dx, dy};
        for (int a = 0; a < 2; ++a) {
            if (d[a] == 0.0) {
                if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
                continue;
            }
            double t1 = (lo[a] - o[a]) / d[a];
            double t2 = (hi[a] - o[a]) / d[a];
            if (t1 > t2) std::swap(t1, t2);
            tmin = std::max(tmin, t1);
            tmax = std::min(tmax, t2);
        }
        if (tmax < tmin || tmax < 0.0) return std::nullopt;
        return tmin >= 0.0 ? tmin : tmax;
    }

    friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

struct Bounds {
    double xmin{-10.0};
    double ymin{-10.0};
    double xmax{10.0};
    double ymax{10.0};

    [[nodiscard]] double area() const { return (xmax - xmin) * (ymax - ymin); }
    [[nodiscard]] bool contains(double x, double y) const {
        return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
    }
    friend bool operator==(const Bounds&, const Bounds&) = default;
};

enum class WorldKind { forest, maze, corridor, custom };

struct World {
    WorldKind kind{WorldKind::custom};
    Bounds bounds;
    std::vector<Obstacle> obstacles;
    std::uint64_t seed{0};
    RobotState start;
    RobotState goal;

    /// Minimum distance from (x, y) to any obstacle, infinity for an empty world.
    [[nodiscard]] double clearance(double x, double y) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& o : obstacles) best = std::min(best, o.distance_to(x, y));
        return best;
    }

    [[nodiscard]] bool inside_obstacle(double x, double y) const {
        return std::any_of(obstacles.begin(), obstacles.end(),
                           [&](const Obstacle& o) { return o.contains(x, y); });
    }

    friend bool operator==(const World&, const World&) = default;
};

/// True iff a disc of `radius` at (x, y) overlaps an obstacle.
inline bool disc_collides(const World& w, double x, double y, double radius) {
    return w.clearance(x, y) < radius;
}

// ---------------------------------------------------------------- generators

struct ForestParams {
    double width{20.0};
    double height{20.0};
    double density{0.2};  // obstacles per square meter
    double radius_min{0.15};
    double radius_max{0.3};
    double min_gap{0.8};        // free gap kept between neighbouring trunks
    double keep_out{1.5};       // clear radius around start and goal
    RobotState start{-8.0, -8.0, 0.0};
    RobotState goal{8.0, 8.0, kPi / 4.0};
};

struct MazeParams {
    double width{20.0};
    double height{20.0};
    double wall{0.2};
    /// The trap: interior width and depth of the U, center of its back wall on the start-goal line.
    double trap_width{4.0};
    double trap_depth{3.0};
    double trap_back_y{2.0};
    RobotState start{0.0, -7.0, kPi / 2.0};
    RobotState goal{0.0, 6.0, kPi / 2.0};
    int hidden_obstacles{4};  // small obstacles invisible to the recommender
    bool extra_rooms{true};
};

struct CorridorParams {
    double length_x{12.0};
    double length_y{10.0};
    double corridor_width{2.0};
    double wall{0.2};
};

namespace detail {

inline bool point_blocked(const std::vector<Obstacle>& obs, double x, double y, double clearance) {
    return std::any_of(obs.begin(), obs.end(),
                       [&](const Obstacle& o) { return o.distance_to(x, y) < clearance; });
}

}  // namespace detail

inline World make_forest(const ForestParams& p, std::uint64_t seed) {
    if (p.density < 0.0 || p.width <= 0.0 || p.height <= 0.0) {
        throw std::invalid_argument("forest: invalid arena or density");
    }
    World w;
    w.kind = WorldKind::forest;
    w.seed = seed;
    w.bounds = Bounds{-0.5 * p.width, -0.5 * p.height, 0.5 * p.width, 0.5 * p.height};
    w.start = p.start;
    w.goal = p.goal;
    const auto count = static_cast<std::size_t>(std::llround(p.density * w.bounds.area()));
    // Disjoint discs of radius r_min + gap/2 must fit in the arena grown by the largest radius.
    const double r_excl = p.radius_min + 0.5 * p.min_gap;
    const double grow = 2.0 * p.radius_max + p.min_gap;
    if (static_cast<double>(count) * kPi * r_excl * r_excl > (p.width + grow) * (p.height + grow)) {
        throw std::runtime_error("forest: density exceeds what the radii and gaps can pack");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(w.bounds.xmin, w.bounds.xmax);
    std::uniform_real_distribution<double> uy(w.bounds.ymin, w.bounds.ymax);
    std::uniform_real_distribution<double> ur(p.radius_min, p.radius_max);
    const std::size_t max_attempts = 2000 * (count + 1);
    std::size_t attempts = 0;
    while (w.obstacles.size() < count) {
        if (++attempts > max_attempts) {
            throw std::runtime_error("forest: density leaves no room for a free start/goal placement");
        }
        const double cx = ux(rng);
        const double cy = uy(rng);
        const double r = ur(rng);
        if (std::hypot(cx - p.start.x, cy - p.start.y) < r + p.keep_out) continue;
        if (std::hypot(cx - p.goal.x, cy - p.goal.y) < r + p.keep_out) continue;
        bool ok = true;
        for (const auto& o : w.obstacles) {
            if (std::hypot(cx - o.x, cy - o.y) < r + o.radius + p.min_gap) {
                ok = false;
                break;
            }
        }
        if (ok) w.obstacles.push_back(Obstacle::circle(cx, cy, r));
    }
    return w;
}

/// U-shaped room made of three walls; `opening_dir` is the side left open (0 = -y, 1 = +y, 2 = -x, 3 = +x).
inline void add_u_room(std::vector<Obstacle>& obs, double cx, double cy, double inner_w, double inner_d,
                       double wall, int opening_dir) {
    const double hw = 0.5 * inner_w;
    const double hd = 0.5 * inner_d;
    switch (opening_dir) {
        case 0:  // open toward -y, back wall at +y
            obs.push_back(Obstacle::box(cx - hw - wall, cy + hd, cx + hw + wall, cy + hd + wall));
            obs.push_back(Obstacle::box(cx - hw - wall, cy - hd, cx - hw, cy + hd));
            obs.push_back(Obstacle::box(cx + hw, cy - hd, cx + hw + wall, cy + hd));
            break;
        case 1:
            obs.push_back(Obstacle::box(cx - hw - wall, cy - hd - wall, cx + hw + wall, cy - hd));
            obs.push_back(Obstacle::box(cx - hw - wall, cy - hd, cx - hw, cy + hd));
            obs.push_back(Obstacle::box(cx + hw, cy - hd, cx + hw + wall, cy + hd));
            break;
        case 2:
            obs.push_back(Obstacle::box(cx + hd, cy - hw - wall, cx + hd + wall, cy + hw + wall));
            obs.push_back(Obstacle::box(cx - hd, cy - hw - wall, cx + hd, cy - hw));
            obs.push_back(Obstacle::box(cx - hd, cy + hw, cx + hd, cy + hw + wall));
            break;
        default:
            obs.push_back(Obstacle::box(cx - hd - wall, cy - hw - wall, cx - hd, cy + hw + wall));
            obs.push_back(Obstacle::box(cx - hd, cy - hw - wall, cx + hd, cy - hw));
            obs.push_back(Obstacle::box(cx - hd, cy + hw, cx + hd, cy + hw + wall));
            break;
    }
}

/// Maze with a U trap straddling the start-goal line, its opening toward the start.
/// The trap is laid out for a start below and a goal above it (start.y < trap < goal.y).
inline World make_maze(const MazeParams& p, std::uint64_t seed) {
    if (!(p.start.y < p.trap_back_y - p.trap_depth && p.goal.y > p.trap_back_y + p.wall)) {
        throw std::invalid_argument("maze: start must lie below the trap opening and goal above its back wall");
    }
    World w;
    w.kind = WorldKind::maze;
    w.seed = seed;
    w.bounds = Bounds{-0.5 * p.width, -0.5 * p.height, 0.5 * p.width, 0.5 * p.height};
    w.start = p.start;
    w.goal = p.goal;

    // The trap center sits on the start-goal segment at the back wall's height.
    const double t = (p.trap_back_y - p.start.y) / (p.goal.y - p.start.y);
    const double trap_x = p.start.x + t * (p.goal.x - p.start.x);
    const double trap_cy = p.trap_back_y - 0.5 * p.trap_depth;
    add_u_room(w.obstacles, trap_x, trap_cy, p.trap_width, p.trap_depth, p.wall, 0);

    std::mt19937_64 rng(seed);
    if (p.extra_rooms) {
        // Two more rooms off the main line, opening sideways.
        add_u_room(w.obstacles, -6.5, 4.5, 3.0, 2.5, p.wall, 3);
        add_u_room(w.obstacles, 6.5, -3.5, 3.0, 2.5, p.wall, 2);
        w.obstacles.push_back(Obstacle::box(-8.0, -2.0, -5.0, -1.8));
        w.obstacles.push_back(Obstacle::box(5.0, 6.0, 5.2, 8.5));
    }

    std::uniform_real_distribution<double> ux(w.bounds.xmin + 1.0, w.bounds.xmax - 1.0);
    std::uniform_real_distribution<double> uy(w.bounds.ymin + 1.0, w.bounds.ymax - 1.0);
    const double keep_out = 1.5;
    int placed = 0;
    int attempts = 0;
    while (placed < p.hidden_obstacles) {
        if (++attempts > 10000) throw std::runtime_error("maze: could not place hidden obstacles");
        const double cx = ux(rng);
        const double cy = uy(rng);
        const Obstacle o = Obstacle::box(cx - 0.2, cy - 0.2, cx + 0.2, cy + 0.2, false);
        if (std::hypot(cx - p.start.x, cy - p.start.y) < keep_out + 0.3) continue;
        if (std::hypot(cx - p.goal.x, cy - p.goal.y) < keep_out + 0.3) continue;
        // keep hidden boxes out of the trap and at least a robot-width away from other walls
        if (detail::point_blocked(w.obstacles, cx, cy, 1.2)) continue;
        if (std::abs(cx - trap_x) < 0.5 * p.trap_width + 1.5 && cy > trap_cy - 0.5 * p.trap_depth - 1.5 &&
            cy < p.trap_back_y + 1.5) {
            continue;
        }
        w.obstacles.push_back(o);
        ++placed;
    }

    for (const auto* s : {&w.start, &w.goal}) {
        if (detail::point_blocked(w.obstacles, s->x, s->y, 0.5)) {
            throw std::runtime_error("maze: start or goal is not in free space");
        }
    }
    return w;
}

/// L-shaped corridor: a horizontal leg along +x, then a vertical leg along +y.
inline World make_corridor(const CorridorParams& p, std::uint64_t seed) {
    World w;
    w.kind = WorldKind::corridor;
    w.seed = seed;
    const double cw = p.corridor_width;
    const double t = p.wall;
    w.bounds = Bounds{-1.0, -1.0 - cw, p.length_x + 1.0, p.length_y + 1.0};
    // horizontal leg occupies y in [-cw/2, cw/2], x in [0, length_x]
    const double h = 0.5 * cw;
    w.obstacles.push_back(Obstacle::box(-t, -h - t, p.length_x + h + t, -h));         // bottom wall
    w.obstacles.push_back(Obstacle::box(-t, h, p.length_x - h, h + t));                // top wall (until corner)
    w.obstacles.push_back(Obstacle::box(-t - 0.01, -h, 0.0, h));                       // closed start end
    w.obstacles.push_back(Obstacle::box(p.length_x + h, -h, p.length_x + h + t, p.length_y));  // outer wall
    w.obstacles.push_back(Obstacle::box(p.length_x - h - t, h, p.length_x - h, p.length_y));   // inner wall
    w.start = RobotState{1.0, 0.0, 0.0};
    w.goal = RobotState{p.length_x, p.length_y - 1.0, kPi / 2.0};
    return w;
}

// ---------------------------------------------------------------- serialization

inline std::string to_string(WorldKind k) {
    switch (k) {
        case WorldKind::forest: return "forest";
        case WorldKind::maze: return "maze";
        case WorldKind::corridor: return "corridor";
        default: return "custom";
    }
}

inline WorldKind world_kind_from_string(const std::string& s) {
    if (s == "forest") return WorldKind::forest;
    if (s == "maze") return WorldKind::maze;
    if (s == "corridor") return WorldKind::corridor;
    if (s == "custom") return WorldKind::custom;
    throw std::invalid_argument("unknown world kind: " + s);
}

inline nlohmann::json pose_to_json(const RobotState& s) { return nlohmann::json::array({s.x, s.y, s.theta}); }

inline RobotState pose_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("pose must be [x, y, theta]");
    return RobotState{j[0].get<double>(), j[1].get<double>(), wrap_angle(j[2].get<double>())};
}

inline nlohmann::json to_json(const World& w) {
    nlohmann::json obs = nlohmann::json::array();
    for (const auto& o : w.obstacles) {
        nlohmann::json jo;
        if (o.shape == ShapeKind::circle) {
            jo = {{"shape", "circle"}, {"x", o.x}, {"y", o.y}, {"radius", o.radius}};
        } else {
            jo = {{"shape", "rect"}, {"x", o.x}, {"y", o.y}, {"width", o.width}, {"height", o.height}};
        }
        jo["recommender_visible"] = o.recommender_visible;
        obs.push_back(std::move(jo));
    }
    return {
        {"kind", to_string(w.kind)},
        {"seed", w.seed},
        {"bounds", {{"xmin", w.bounds.xmin}, {"ymin", w.bounds.ymin}, {"xmax", w.bounds.xmax}, {"ymax", w.bounds.ymax}}},
        {"start", pose_to_json(w.start)},
        {"goal", pose_to_json(w.goal)},
        {"obstacles", std::move(obs)},
    };
}

inline World world_from_json(const nlohmann::json& j) {
    World w;
    w.kind = world_kind_from_string(j.value("kind", "custom"));
    w.seed = j.value("seed", std::uint64_t{0});
    const auto& b = j.at("bounds");
    w.bounds = Bounds{b.at("xmin").get<double>(), b.at("ymin").get<double>(), b.at("xmax").get<double>(),
                      b.at("ymax").get<double>()};
    w.start = pose_from_json(j.at("start"));
    w.goal = pose_from_json(j.at("goal"));
    for (const auto& jo : j.at("obstacles")) {
        const std::string shape = jo.at("shape").get<std::string>();
        Obstacle o;
        o.x = jo.at("x").get<double>();
        o.y = jo.at("y").get<double>();
        if (shape == "circle") {
            o.shape = ShapeKind::circle;
            o.radius = jo.at("radius").get<double>();
        } else if (shape == "rect") {
            o.shape = ShapeKind::rect;
            o.width = jo.at("width").get<double>();
            o.height = jo.at("height").get<double>();
        } else {
            throw std::invalid_argument("unknown obstacle shape: " + shape);
        }
        o.recommender_visible = jo.value("recommender_visible", true);
        w.obstacles.push_back(o);
    }
    return w;
}

/// Builds a generated world from a JSON parameter object; absent keys keep their defaults.
inline World make_world(WorldKind kind, const nlohmann::json& params, std::uint64_t seed) {
    const nlohmann::json& j = params.is_null() ? nlohmann::json::object() : params;
    auto pose = [&](const char* key, const RobotState& fallback) {
        return j.contains(key) ? pose_from_json(j.at(key)) : fallback;
    };
    switch (kind) {
        case WorldKind::forest: {
            ForestParams p;
            p.width = j.value("width", p.width);
            p.height = j.value("height", p.height);
            p.density = j.value("density", p.density);
            p.radius_min = j.value("radius_min", p.radius_min);
            p.radius_max = j.value("radius_max", p.radius_max);
            p.min_gap = j.value("min_gap", p.min_gap);
            p.keep_out = j.value("keep_out", p.keep_out);
            p.start = pose("start", p.start);
            p.goal = pose("goal", p.goal);
            return make_forest(p, seed);
        }
        case WorldKind::maze: {
            MazeParams p;
            p.width = j.value("width", p.width);
            p.height = j.value("height", p.height);
            p.wall = j.value("wall", p.wall);
            p.trap_width = j.value("trap_width", p.trap_width);
            p.trap_depth = j.value("trap_depth", p.trap_depth);
            p.trap_back_y = j.value("trap_back_y", p.trap_back_y);
            p.hidden_obstacles = j.value("hidden_obstacles", p.hidden_obstacles);
            p.extra_rooms = j.value("extra_rooms", p.extra_rooms);
            p.start = pose("start", p.start);
            p.goal = pose("goal", p.goal);
            return make_maze(p, seed);
        }
        case WorldKind::corridor: {
            CorridorParams p;
            p.length_x = j.value("length_x", p.length_x);
            p.length_y = j.value("length_y", p.length_y);
            p.corridor_width = j.value("corridor_width", p.corridor_width);
            p.wall = j.value("wall", p.wall);
            return make_corridor(p, seed);
        }
        default:
            throw std::invalid_argument("make_world: custom worlds are loaded from a world document");
    }
}

}  // namespace gpmppi::sim
