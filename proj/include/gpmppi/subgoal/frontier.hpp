#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpmppi/common.hpp"
#include "gpmppi/sim/types.hpp"
#include "gpmppi/subgoal/surface.hpp"

namespace gpmppi::subgoal {

/// Centroid of one connected high-variance region, in the sensor frame.
struct FrontierCentroid {
    double azimuth{0.0};
    double elevation{0.0};
    std::size_t cells{0};
    int cell_i{0};  // grid cell the centroid falls in
    int cell_j{0};
};

/// 4-connected labelling of cells above the threshold, joined across the azimuth seam.
/// Components smaller than `min_cells` are dropped. Centroids weight each cell by how far its
/// variance exceeds the threshold. A component that wraps the whole circle has no meaningful
/// circular mean, so it contributes one centroid per azimuth column instead; one spanning more
/// than `max_span` columns is cut into equal azimuth chunks with a centroid each.
inline std::vector<FrontierCentroid> extract_frontiers(const VarianceSurface& s, int min_cells = 3,
                                                       int max_span = 15) {
    const int A = s.azimuth_cells;
    const int E = s.elevation_cells;
    std::vector<int> label(s.variance.size(), -1);
    std::vector<FrontierCentroid> out;
    std::vector<std::pair<int, int>> stack;
    std::vector<std::pair<int, int>> members;
    int next = 0;
    for (int j0 = 0; j0 < E; ++j0) {
        for (int i0 = 0; i0 < A; ++i0) {
            if (!s.above(i0, j0) || label[s.index(i0, j0)] >= 0) continue;
            members.clear();
            stack.assign(1, {i0, j0});
            label[s.index(i0, j0)] = next;
            while (!stack.empty()) {
                const auto [i, j] = stack.back();
                stack.pop_back();
                members.emplace_back(i, j);
                const std::pair<int, int> nb[4] = {{(i + 1) % A, j}, {(i + A - 1) % A, j}, {i, j + 1}, {i, j - 1}};
                for (const auto& [ni, nj] : nb) {
                    if (nj < 0 || nj >= E) continue;
                    const auto idx = s.index(ni, nj);
                    if (label[idx] >= 0 || !s.above(ni, nj)) continue;
                    label[idx] = next;
                    stack.emplace_back(ni, nj);
                }
            }
            ++next;
            if (static_cast<int>(members.size()) < min_cells) continue;

            std::vector<char> column(static_cast<std::size_t>(A), 0);
            for (const auto& [i, j] : members) column[static_cast<std::size_t>(i)] = 1;
            const bool full_ring = std::all_of(column.begin(), column.end(), [](char c) { return c != 0; });

            auto centroid_of = [&](auto&& pick) {
                double sx = 0.0, sy = 0.0, se = 0.0, sw = 0.0;
                std::size_t n = 0;
                for (const auto& [i, j] : members) {
                    if (!pick(i)) continue;
                    const double w = s.var(i, j) - s.threshold;
                    sx += w * std::cos(s.azimuths[static_cast<std::size_t>(i)]);
                    sy += w * std::sin(s.azimuths[static_cast<std::size_t>(i)]);
                    se += w * s.elevations[static_cast<std::size_t>(j)];
                    sw += w;
                    ++n;
                }
                FrontierCentroid f;
                f.azimuth = wrap_angle(std::atan2(sy, sx));
                f.elevation = se / sw;
                f.cells = n;
                auto [ci, cj] = s.nearest_cell(f.azimuth, f.elevation);
                if (!s.above(ci, cj)) {
                    // Non-convex region whose centroid escaped it: fall back to the nearest member.
                    double best = std::numeric_limits<double>::infinity();
                    for (const auto& [i, j] : members) {
                        if (!pick(i)) continue;
                        const double d = sgp::squared_distance(f.azimuth, f.elevation,
                                                               s.azimuths[static_cast<std::size_t>(i)],
                                                               s.elevations[static_cast<std::size_t>(j)]);
                        if (d < best) {
                            best = d;
                            ci = i;
                            cj = j;
                        }
                    }
                    f.azimuth = s.azimuths[static_cast<std::size_t>(ci)];
                    f.elevation = s.elevations[static_cast<std::size_t>(cj)];
                }
                f.cell_i = ci;
                f.cell_j = cj;
                return f;
            };

            if (full_ring) {
                for (int col = 0; col < A; ++col) {
                    FrontierCentroid f = centroid_of([col](int i) { return i == col; });
                    f.azimuth = s.azimuths[static_cast<std::size_t>(col)];
                    f.cell_i = col;
                    out.push_back(f);
                }
                continue;
            }
            // The arc starts right after the widest run of columns the component does not touch.
            int gap_end = 0, best_gap = 0, run = 0;
            for (int k = 0; k < 2 * A; ++k) {
                if (column[static_cast<std::size_t>(k % A)] != 0) {
                    run = 0;
                    continue;
                }
                if (++run > best_gap) {
                    best_gap = std::min(run, A);
                    gap_end = k % A;
                }
            }
            const int start = (gap_end + 1) % A;
            const int span = A - best_gap;
            const int chunks = max_span > 0 ? (span + max_span - 1) / max_span : 1;
            if (chunks <= 1) {
                out.push_back(centroid_of([](int) { return true; }));
                continue;
            }
            std::vector<int> chunk_of(static_cast<std::size_t>(A), -1);
            for (int p = 0; p < span; ++p) chunk_of[static_cast<std::size_t>((start + p) % A)] = p * chunks / span;
            for (int c = 0; c < chunks; ++c) {
                out.push_back(centroid_of([&, c](int i) { return chunk_of[static_cast<std::size_t>(i)] == c; }));
            }
        }
    }
    return out;
}

/// k_dst * d_fs + k_dir * bearing^2, bearing taken relative to the robot heading.
inline double frontier_cost(double d_fs, double bearing, double k_dst, double k_dir) {
    const double b = wrap_angle(bearing);
    return k_dst * d_fs + k_dir * b * b;
}

/// A frontier placed in the world at horizontal range r_oc from the robot.
struct Frontier {
    FrontierCentroid centroid;
    double bearing{0.0};  // relative to robot heading
    double x{0.0};
    double y{0.0};
    double cost{0.0};
};

inline Frontier place_frontier(const FrontierCentroid& c, const RobotState& robot, const RobotState& goal,
                               double r_oc, double k_dst, double k_dir) {
    Frontier f;
    f.centroid = c;
    f.bearing = wrap_angle(c.azimuth);
    const double heading = robot.theta + f.bearing;
    f.x = robot.x + r_oc * std::cos(heading);
    f.y = robot.y + r_oc * std::sin(heading);
    f.cost = frontier_cost(std::hypot(f.x - goal.x, f.y - goal.y), f.bearing, k_dst, k_dir);
    return f;
}

inline double frontier_cost(const Frontier& f, const RobotState& goal, double k_dst, double k_dir) {
    return frontier_cost(std::hypot(f.x - goal.x, f.y - goal.y), f.bearing, k_dst, k_dir);
}

struct FrontierSet {
    std::vector<Frontier> frontiers;
    std::optional<std::size_t> optimal;
};

/// True when a ranks strictly before b: lower cost, then smaller |bearing|, then smaller azimuth.
inline bool frontier_before(const Frontier& a, const Frontier& b) {
    constexpr double tol = 1e-12;
    if (std::abs(a.cost - b.cost) > tol * std::max(1.0, std::abs(b.cost))) return a.cost < b.cost;
    if (std::abs(a.bearing) != std::abs(b.bearing)) return std::abs(a.bearing) < std::abs(b.bearing);
    return a.centroid.azimuth < b.centroid.azimuth;
}

inline FrontierSet score_frontiers(const std::vector<FrontierCentroid>& centroids, const RobotState& robot,
                                   const RobotState& goal, double r_oc, double k_dst, double k_dir) {
    FrontierSet out;
    for (const auto& c : centroids) out.frontiers.push_back(place_frontier(c, robot, goal, r_oc, k_dst, k_dir));
    for (std::size_t k = 0; k < out.frontiers.size(); ++k) {
        if (!out.optimal || frontier_before(out.frontiers[k], out.frontiers[*out.optimal])) out.optimal = k;
    }
    return out;
}

inline nlohmann::json to_json(const FrontierSet& fs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : fs.frontiers) {
        arr.push_back({{"azimuth", f.centroid.azimuth},
                       {"elevation", f.centroid.elevation},
                       {"cells", f.centroid.cells},
                       {"bearing", f.bearing},
                       {"x", f.x},
                       {"y", f.y},
                       {"cost", f.cost}});
    }
    nlohmann::json j = {{"frontiers", std::move(arr)}};
    j["optimal"] = fs.optimal ? nlohmann::json(*fs.optimal) : nlohmann::json(nullptr);
    return j;
}

}  // namespace gpmppi::subgoal
