#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <tuple>
#include <vector>

#include "gpmppi/sim/types.hpp"

namespace gpmppi::sim {

enum class CellState : std::uint8_t { unknown = 0, free = 1, occupied = 2 };

struct CostmapConfig {
    int width{200};
    int height{200};
    double resolution{0.05};
};

/// World-aligned rolling window. The robot sits at the center of cell (width/2, height/2).
struct Costmap2D {
    double origin_x{0.0};  // world coordinate of the lower-left corner of cell (0, 0)
    double origin_y{0.0};
    double resolution{0.05};
    int width{0};
    int height{0};
    std::vector<CellState> cells;

    static Costmap2D centered_at(const RobotState& pose, const CostmapConfig& c) {
        Costmap2D m;
        m.resolution = c.resolution;
        m.width = c.width;
        m.height = c.height;
        m.origin_x = pose.x - (c.width / 2 + 0.5) * c.resolution;
        m.origin_y = pose.y - (c.height / 2 + 0.5) * c.resolution;
        m.cells.assign(static_cast<std::size_t>(c.width) * c.height, CellState::unknown);
        return m;
    }

    [[nodiscard]] bool in_bounds(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < width && iy < height; }
    [[nodiscard]] std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(iy) * width + ix; }
    [[nodiscard]] CellState at(int ix, int iy) const { return cells[index(ix, iy)]; }
    void set(int ix, int iy, CellState s) { cells[index(ix, iy)] = s; }

    /// Continuous grid coordinates (cell units) of a world point.
    [[nodiscard]] double gx(double x) const { return (x - origin_x) / resolution; }
    [[nodiscard]] double gy(double y) const { return (y - origin_y) / resolution; }

    [[nodiscard]] double center_x(int ix) const { return origin_x + (ix + 0.5) * resolution; }
    [[nodiscard]] double center_y(int iy) const { return origin_y + (iy + 0.5) * resolution; }

    [[nodiscard]] std::size_t count(CellState s) const {
        return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), s));
    }
};

namespace detail {

/// Grid traversal from p0 to p1 (cell units). Visits every cell the segment passes
/// through, excluding the cell containing p1; stops at the map edge.
template <typename Visit>
void traverse(const Costmap2D& m, double x0, double y0, double x1, double y1, Visit&& visit) {
    int ix = static_cast<int>(std::floor(x0));
    int iy = static_cast<int>(std::floor(y0));
    const int ex = static_cast<int>(std::floor(x1));
    const int ey = static_cast<int>(std::floor(y1));
    const double dx = x1 - x0;
    const double dy = y1 - y0;
    const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
    const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
    constexpr double inf = std::numeric_limits<double>::infinity();
    double tmax_x = sx == 0 ? inf : ((sx > 0 ? (ix + 1.0 - x0) : (x0 - ix)) / std::abs(dx));
    double tmax_y = sy == 0 ? inf : ((sy > 0 ? (iy + 1.0 - y0) : (y0 - iy)) / std::abs(dy));
    const double tdx = sx == 0 ? inf : 1.0 / std::abs(dx);
    const double tdy = sy == 0 ? inf : 1.0 / std::abs(dy);
    const int max_steps = std::abs(ex - ix) + std::abs(ey - iy) + 2;
    for (int k = 0; k < max_steps; ++k) {
        if (ix == ex && iy == ey) return;
        if (!m.in_bounds(ix, iy)) return;
        visit(ix, iy);
        if (tmax_x < tmax_y) {
            if (tmax_x >= 1.0) return;
            ix += sx;
            tmax_x += tdx;
        } else {
            if (tmax_y >= 1.0) return;
            iy += sy;
            tmax_y += tdy;
        }
    }
}

}  // namespace detail

/// Clears the cells each return passes through, then marks return endpoints occupied.
/// Returns whose endpoint falls outside the window clear their in-window part only.
inline Costmap2D build_costmap(const PointCloud& cloud, const RobotState& pose, const CostmapConfig& config = {}) {
    Costmap2D m = Costmap2D::centered_at(pose, config);
    const double sx = m.gx(pose.x);
    const double sy = m.gy(pose.y);
    std::vector<std::pair<int, int>> hits;
    hits.reserve(cloud.size());
    for (const auto& p : cloud.points) {
        const double d = p.range * std::cos(p.elevation);
        const double bearing = pose.theta + p.azimuth;
        const double ex = m.gx(pose.x + d * std::cos(bearing));
        const double ey = m.gy(pose.y + d * std::sin(bearing));
        detail::traverse(m, sx, sy, ex, ey, [&](int ix, int iy) { m.set(ix, iy, CellState::free); });
        const int cx = static_cast<int>(std::floor(ex));
        const int cy = static_cast<int>(std::floor(ey));
        if (m.in_bounds(cx, cy)) hits.emplace_back(cx, cy);
    }
    for (const auto& [cx, cy] : hits) m.set(cx, cy, CellState::occupied);
    return m;
}

/// True iff an occupied cell center lies within `footprint_radius` of (x, y).
/// Unknown cells are traversable; positions outside the window never collide.
inline bool collision_state(const RobotState& s, const Costmap2D& m, double footprint_radius) {
    const double gx = m.gx(s.x);
    const double gy = m.gy(s.y);
    if (gx < 0.0 || gy < 0.0 || gx >= m.width || gy >= m.height) return false;
    const int reach = static_cast<int>(std::ceil(footprint_radius / m.resolution)) + 1;
    const int cx = static_cast<int>(std::floor(gx));
    const int cy = static_cast<int>(std::floor(gy));
    const double r2 = footprint_radius * footprint_radius;
    for (int iy = std::max(0, cy - reach); iy <= std::min(m.height - 1, cy + reach); ++iy) {
        for (int ix = std::max(0, cx - reach); ix <= std::min(m.width - 1, cx + reach); ++ix) {
            if (m.at(ix, iy) != CellState::occupied) continue;
            const double dx = m.center_x(ix) - s.x;
            const double dy = m.center_y(iy) - s.y;
            if (dx * dx + dy * dy <= r2) return true;
        }
    }
    return false;
}

/// Precomputed form of collision_state for many queries against one costmap.
/// Each cell is tagged clear / certain-hit / undecided from the footprint dilated and
/// eroded by half a cell diagonal; only undecided cells fall back to the exact test.
class CollisionChecker {
public:
    CollisionChecker(const Costmap2D& map, double footprint_radius)
        : map_(&map), radius_(footprint_radius), tags_(map.cells.size(), kClear) {
        const double half_diag = 0.5 * std::sqrt(2.0) * map.resolution;
        const double outer = radius_ + half_diag;
        const double inner = radius_ - half_diag;
        const int reach = static_cast<int>(std::ceil(outer / map.resolution));
        std::vector<std::tuple<int, int, std::uint8_t>> stencil;
        for (int dy = -reach; dy <= reach; ++dy) {
            for (int dx = -reach; dx <= reach; ++dx) {
                const double d = map.resolution * std::hypot(dx, dy);
                if (d <= inner) stencil.emplace_back(dx, dy, kHit);
                else if (d <= outer) stencil.emplace_back(dx, dy, kMaybe);
            }
        }
        for (int iy = 0; iy < map.height; ++iy) {
            for (int ix = 0; ix < map.width; ++ix) {
                if (map.at(ix, iy) != CellState::occupied) continue;
                for (const auto& [dx, dy, tag] : stencil) {
                    const int qx = ix + dx;
                    const int qy = iy + dy;
                    if (!map.in_bounds(qx, qy)) continue;
                    auto& t = tags_[map.index(qx, qy)];
                    t = std::max(t, tag);
                }
            }
        }
    }

    [[nodiscard]] bool collides(const RobotState& s) const {
        const double gx = map_->gx(s.x);
        const double gy = map_->gy(s.y);
        if (gx < 0.0 || gy < 0.0 || gx >= map_->width || gy >= map_->height) return false;
        const auto tag = tags_[map_->index(static_cast<int>(gx), static_cast<int>(gy))];
        if (tag == kClear) return false;
        if (tag == kHit) return true;
        return collision_state(s, *map_, radius_);
    }

private:
    static constexpr std::uint8_t kClear = 0;
    static constexpr std::uint8_t kMaybe = 1;
    static constexpr std::uint8_t kHit = 2;

    const Costmap2D* map_;
    double radius_;
    std::vector<std::uint8_t> tags_;
};

/// Plain PGM (P2): occupied 0, unknown 128, free 255; top row is the largest y.
inline void write_pgm(std::ostream& os, const Costmap2D& m) {
    os << "P2\n" << m.width << ' ' << m.height << "\n255\n";
    for (int iy = m.height - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < m.width; ++ix) {
            const auto s = m.at(ix, iy);
            os << (s == CellState::occupied ? 0 : (s == CellState::free ? 255 : 128));
            os << (ix + 1 == m.width ? '\n' : ' ');
        }
    }
}

}  // namespace gpmppi::sim
