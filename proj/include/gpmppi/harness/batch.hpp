#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpmppi/harness/config.hpp"
#include "gpmppi/harness/mission.hpp"

namespace gpmppi::harness {

struct MeanSd {
    double mean{0.0};
    double sd{0.0};  // sample standard deviation, 0 for fewer than two values
    std::size_t n{0};
};

inline MeanSd mean_sd(const std::vector<double>& v) {
    MeanSd out;
    out.n = v.size();
    if (v.empty()) return out;
    double s = 0.0;
    for (double x : v) s += x;
    out.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - out.mean) * (x - out.mean);
        out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return out;
}

inline nlohmann::json to_json(const MeanSd& m) { return {{"mean", m.mean}, {"sd", m.sd}, {"n", m.n}}; }

/// Table-style aggregate over a trial set. Distance and speed use completed trials only;
/// T_c averages the per-trial progress fraction (in percent) over all trials.
struct BatchSummary {
    Mode mode{Mode::recovery};
    std::size_t trials{0};
    std::size_t completed{0};
    std::size_t trapped{0};  // R_lm
    std::size_t collided{0};
    double task_completion{0.0};
    MeanSd distance;
    MeanSd speed;
    MeanSd gp_assist;
    double wall_time{0.0};
};

inline BatchSummary summarize(Mode mode, const std::vector<MissionResult>& results) {
    BatchSummary s;
    s.mode = mode;
    s.trials = results.size();
    std::vector<double> dist, speed, assist;
    double progress = 0.0;
    for (const auto& r : results) {
        s.completed += r.completed ? 1 : 0;
        s.trapped += r.trapped ? 1 : 0;
        s.collided += r.collided ? 1 : 0;
        progress += r.progress;
        s.wall_time += r.wall_time;
        assist.push_back(r.gp_assist);
        if (r.completed) {
            dist.push_back(r.distance);
            speed.push_back(r.mean_speed);
        }
    }
    s.task_completion = results.empty() ? 0.0 : 100.0 * progress / static_cast<double>(results.size());
    s.distance = mean_sd(dist);
    s.speed = mean_sd(speed);
    s.gp_assist = mean_sd(assist);
    return s;
}

inline nlohmann::json to_json(const BatchSummary& s) {
    return {
        {"mode", to_string(s.mode)},
        {"trials", s.trials},
        {"completed", s.completed},
        {"trapped", s.trapped},
        {"collided", s.collided},
        {"task_completion_pct", s.task_completion},
        {"distance", to_json(s.distance)},
        {"speed", to_json(s.speed)},
        {"gp_assist", to_json(s.gp_assist)},
        {"wall_time", s.wall_time},
    };
}

/// Trial k runs with seed first_seed + k. `on_trial` sees each result before its trajectory is dropped.
inline BatchSummary run_batch(const Experiment& e, std::optional<Mode> mode_override = std::nullopt,
                              const std::function<void(const MissionConfig&, const MissionResult&)>& on_trial = {}) {
    std::vector<MissionResult> results;
    Mode mode = Mode::recovery;
    for (int k = 0; k < e.trials; ++k) {
        MissionConfig c = e.mission(e.first_seed + static_cast<std::uint64_t>(k));
        if (mode_override) c.mode = *mode_override;
        mode = c.mode;
        MissionResult r = run_mission(c);
        if (on_trial) on_trial(c, r);
        r.trajectory.clear();
        r.trajectory.shrink_to_fit();
        r.surface_dumps.clear();
        results.push_back(std::move(r));
    }
    return summarize(mode, results);
}

}  // namespace gpmppi::harness
