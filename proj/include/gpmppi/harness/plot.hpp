#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpmppi/harness/mission.hpp"

namespace gpmppi::harness {

namespace detail {

/// Maps world metres to SVG pixels with y pointing up.
struct Frame {
    double xmin, ymax, scale, pad;
    [[nodiscard]] double px(double x) const { return pad + (x - xmin) * scale; }
    [[nodiscard]] double py(double y) const { return pad + (ymax - y) * scale; }
};

inline std::string viridis(double t) {
    // coarse 5-stop viridis, linearly interpolated
    static const double stops[5][3] = {
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    t = std::clamp(t, 0.0, 1.0) * 4.0;
    const int k = std::min(3, static_cast<int>(t));
    const double f = t - k;
    std::ostringstream os;
    os << "rgb(";
    for (int c = 0; c < 3; ++c) {
        os << static_cast<int>(std::lround(stops[k][c] + f * (stops[k + 1][c] - stops[k][c])));
        os << (c < 2 ? "," : ")");
    }
    return os.str();
}

}  // namespace detail

/// Top-down view: obstacles (recommender-invisible ones dashed), the path coloured by
/// which target MPPI was tracking, recommended subgoals, start and goal.
inline std::string trajectory_svg(const sim::World& w, const std::vector<TrajectoryRow>& rows,
                                  const std::vector<RobotState>& subgoals = {}, double pixels_per_metre = 30.0) {
    const double pad = 20.0;
    const detail::Frame f{w.bounds.xmin, w.bounds.ymax, pixels_per_metre, pad};
    const double W = (w.bounds.xmax - w.bounds.xmin) * pixels_per_metre + 2 * pad;
    const double H = (w.bounds.ymax - w.bounds.ymin) * pixels_per_metre + 2 * pad;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << W - 2 * pad << "\" height=\"" << H - 2 * pad
       << "\" fill=\"none\" stroke=\"#999\"/>\n";
    for (const auto& o : w.obstacles) {
        const char* style = o.recommender_visible ? "fill=\"#444\"" : "fill=\"#bbb\" stroke=\"#444\" stroke-dasharray=\"3,2\"";
        if (o.shape == sim::ShapeKind::circle) {
            os << "<circle cx=\"" << f.px(o.x) << "\" cy=\"" << f.py(o.y) << "\" r=\"" << o.radius * f.scale << "\" "
               << style << "/>\n";
        } else {
            os << "<rect x=\"" << f.px(o.x - 0.5 * o.width) << "\" y=\"" << f.py(o.y + 0.5 * o.height)
               << "\" width=\"" << o.width * f.scale << "\" height=\"" << o.height * f.scale << "\" " << style
               << "/>\n";
        }
    }
    // one polyline per run of equal target
    std::size_t k = 0;
    while (k < rows.size()) {
        const Target t = rows[k].target;
        os << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << (t == Target::goal ? "#1f77b4" : "#ff9f1c")
           << "\" points=\"";
        if (k > 0) os << f.px(rows[k - 1].state.x) << ',' << f.py(rows[k - 1].state.y) << ' ';
        for (; k < rows.size() && rows[k].target == t; ++k) {
            os << f.px(rows[k].state.x) << ',' << f.py(rows[k].state.y) << ' ';
        }
        os << "\"/>\n";
    }
    for (const auto& s : subgoals) {
        os << "<circle cx=\"" << f.px(s.x) << "\" cy=\"" << f.py(s.y) << "\" r=\"2\" fill=\"#d62728\" opacity=\"0.5\"/>\n";
    }
    auto marker = [&](const RobotState& s, const char* colour, const char* label) {
        os << "<circle cx=\"" << f.px(s.x) << "\" cy=\"" << f.py(s.y) << "\" r=\"6\" fill=\"" << colour << "\"/>\n";
        os << "<text x=\"" << f.px(s.x) + 8 << "\" y=\"" << f.py(s.y) - 8 << "\" font-size=\"12\">" << label
           << "</text>\n";
    };
    marker(w.start, "#2ca02c", "start");
    marker(w.goal, "#d62728", "goal");
    os << "</svg>\n";
    return os.str();
}

/// Variance surface as an azimuth x elevation heat map. Cells above the frontier threshold
/// are outlined; frontier centroids are drawn as crosses, the chosen one in red.
inline std::string surface_svg(const nlohmann::json& dump, double cell_px = 8.0) {
    const auto& s = dump.at("surface");
    const int A = s.at("azimuth_cells").get<int>();
    const int E = s.at("elevation_cells").get<int>();
    const auto var = s.at("variance").get<std::vector<double>>();
    const auto az = s.at("azimuths").get<std::vector<double>>();
    const auto el = s.at("elevations").get<std::vector<double>>();
    const double thr = s.at("threshold").get<double>();
    const double vmax = var.empty() ? 1.0 : std::max(1e-12, *std::max_element(var.begin(), var.end()));
    const double pad = 30.0;
    const double rowh = std::max(cell_px, 120.0 / std::max(1, E));
    const double W = A * cell_px + 2 * pad;
    const double H = E * rowh + 2 * pad;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    for (int j = 0; j < E; ++j) {
        for (int i = 0; i < A; ++i) {
            const double v = var[static_cast<std::size_t>(j * A + i)];
            const double x = pad + i * cell_px;
            const double y = pad + (E - 1 - j) * rowh;  // highest elevation on top
            os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_px << "\" height=\"" << rowh
               << "\" fill=\"" << detail::viridis(v / vmax) << "\"" << (v > thr ? " stroke=\"white\"" : "")
               << "/>\n";
        }
    }
    const double az0 = az.empty() ? -kPi : az.front();
    const double daz = A > 0 ? kTwoPi / A : 1.0;
    const double del = E > 1 ? el[1] - el[0] : 1.0;
    const auto& fr = dump.at("frontiers");
    const auto& list = fr.at("frontiers");
    const int best = fr.at("optimal").is_null() ? -1 : fr.at("optimal").get<int>();
    for (std::size_t k = 0; k < list.size(); ++k) {
        const double a = list[k].at("azimuth").get<double>();
        const double e = list[k].at("elevation").get<double>();
        double ia = (a - az0) / daz;
        if (ia < -0.5) ia += A;
        const double ie = E > 1 ? (e - el.front()) / del : 0.0;
        const double x = pad + (ia + 0.5) * cell_px;
        const double y = pad + (E - 1 - ie + 0.5) * rowh;
        const char* colour = static_cast<int>(k) == best ? "#ff2020" : "#ffffff";
        os << "<path d=\"M" << x - 5 << ' ' << y << " h10 M" << x << ' ' << y - 5 << " v10\" stroke=\"" << colour
           << "\" stroke-width=\"2\"/>\n";
    }
    os << "<text x=\"" << pad << "\" y=\"" << pad - 10 << "\" font-size=\"12\">variance over azimuth (-180..180 deg) x elevation; threshold "
       << thr << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace gpmppi::harness
