// gpmppi: run single missions, trial batches, and render logged runs.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gpmppi/harness/batch.hpp"
#include "gpmppi/harness/config.hpp"
#include "gpmppi/harness/io.hpp"
#include "gpmppi/harness/mission.hpp"
#include "gpmppi/harness/plot.hpp"

namespace fs = std::filesystem;
using namespace gpmppi;

namespace {

enum Exit : int { kCompleted = 0, kFailure = 1, kTrapped = 2, kCollided = 3, kConfigError = 4 };

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::string out{"out"};
};

std::optional<harness::Mode> parse_mode(const std::string& m) {
    if (m.empty()) return std::nullopt;
    try {
        return harness::mode_from_string(m);
    } catch (const std::invalid_argument& e) {
        throw harness::ConfigError(e.what());
    }
}

int cmd_run(const Common& o, int dump_every) {
    const auto exp = harness::load_experiment(o.config);
    auto cfg = exp.mission(o.seed.value_or(exp.first_seed));
    if (auto m = parse_mode(o.mode)) cfg.mode = *m;
    if (dump_every >= 0) cfg.surface_dump_every = dump_every;
    const auto r = harness::run_mission(cfg);
    harness::write_run_outputs(o.out, cfg, r);
    std::printf("%s seed=%llu mode=%s distance=%.2f m v_av=%.2f m/s A_gp=%.1f%% steps=%zu wall=%.1f s\n",
                harness::outcome(r).c_str(), static_cast<unsigned long long>(cfg.seed),
                harness::to_string(cfg.mode).c_str(), r.distance, r.mean_speed, 100.0 * r.gp_assist, r.steps,
                r.wall_time);
    if (r.completed) return kCompleted;
    return r.collided ? kCollided : kTrapped;
}

int cmd_batch(const Common& o, int trials, bool keep_trajectories) {
    auto exp = harness::load_experiment(o.config);
    if (o.seed) exp.first_seed = *o.seed;
    if (trials > 0) exp.trials = trials;
    fs::create_directories(o.out);
    nlohmann::json per_trial = nlohmann::json::array();
    const auto summary = harness::run_batch(exp, parse_mode(o.mode), [&](const harness::MissionConfig& c,
                                                                         const harness::MissionResult& r) {
        std::printf("  seed %llu: %s distance=%.2f v_av=%.2f A_gp=%.2f wall=%.1fs\n",
                    static_cast<unsigned long long>(c.seed), harness::outcome(r).c_str(), r.distance, r.mean_speed,
                    r.gp_assist, r.wall_time);
        std::fflush(stdout);
        per_trial.push_back(harness::metrics_to_json(r, c));
        if (keep_trajectories) harness::write_run_outputs(fs::path(o.out) / ("seed_" + std::to_string(c.seed)), c, r);
    });
    auto j = harness::to_json(summary);
    j["per_trial"] = per_trial;
    harness::write_json(fs::path(o.out) / "summary.json", j);
    std::printf("%s: T_c=%.2f%% (R_lm=%zu) collisions=%zu d_av=%.2f+-%.2f m v_av=%.2f+-%.2f m/s A_gp=%.1f+-%.1f%%\n",
                harness::to_string(summary.mode).c_str(), summary.task_completion, summary.trapped, summary.collided,
                summary.distance.mean, summary.distance.sd, summary.speed.mean, summary.speed.sd,
                100.0 * summary.gp_assist.mean, 100.0 * summary.gp_assist.sd);
    return kCompleted;
}

int cmd_plot(const std::string& run_dir, const std::string& out) {
    const fs::path in = run_dir;
    const fs::path dst = out.empty() ? in : fs::path(out);
    fs::create_directories(dst);
    const auto world = sim::world_from_json(harness::read_json(in / "world.json"));
    std::ifstream tcsv(in / "trajectory.csv");
    if (!tcsv) throw std::runtime_error("no trajectory.csv in " + in.string());
    const auto rows = harness::read_trajectory_csv(tcsv);
    std::vector<sim::RobotState> subgoals;
    if (std::ifstream s(in / "subgoals.csv"); s) subgoals = harness::read_subgoals_csv(s);
    {
        std::ofstream svg(dst / "trajectory.svg");
        svg << harness::trajectory_svg(world, rows, subgoals);
    }
    int surfaces = 0;
    if (fs::exists(in / "surfaces.json")) {
        for (const auto& dump : harness::read_json(in / "surfaces.json")) {
            std::ofstream svg(dst / ("surface_" + std::to_string(surfaces++) + ".svg"));
            svg << harness::surface_svg(dump);
        }
    }
    std::printf("wrote %s/trajectory.svg and %d surface plot(s)\n", dst.string().c_str(), surfaces);
    return kCompleted;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GP-guided MPPI navigation: missions, batches, plots"};
    app.require_subcommand(1);

    Common run_o, batch_o;
    int dump_every = -1;
    auto* run = app.add_subcommand("run", "run one mission and write its logs");
    run->add_option("-c,--config", run_o.config, "mission JSON")->required()->check(CLI::ExistingFile);
    run->add_option("-s,--seed", run_o.seed, "seed (default: the file's seed)");
    run->add_option("-m,--mode", run_o.mode, "baseline | sm | rm");
    run->add_option("-o,--out", run_o.out, "output directory")->capture_default_str();
    run->add_option("--dump-every", dump_every, "keep every k-th variance surface (0 = none)");

    int trials = 0;
    bool keep = false;
    auto* batch = app.add_subcommand("batch", "run seeded trials and aggregate metrics");
    batch->add_option("-c,--config", batch_o.config, "mission JSON")->required()->check(CLI::ExistingFile);
    batch->add_option("-s,--seed", batch_o.seed, "first seed (default: the file's seed)");
    batch->add_option("-m,--mode", batch_o.mode, "baseline | sm | rm");
    batch->add_option("-o,--out", batch_o.out, "output directory")->capture_default_str();
    batch->add_option("-n,--trials", trials, "number of trials (default: the file's trials)");
    batch->add_flag("--keep-runs", keep, "write full per-trial logs");

    std::string plot_in, plot_out;
    auto* plot = app.add_subcommand("plot", "render trajectory and variance-surface SVGs from a run directory");
    plot->add_option("run_dir", plot_in, "directory written by `run`")->required()->check(CLI::ExistingDirectory);
    plot->add_option("-o,--out", plot_out, "output directory (default: the run directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        if (*run) return cmd_run(run_o, dump_every);
        if (*batch) return cmd_batch(batch_o, trials, keep);
        return cmd_plot(plot_in, plot_out);
    } catch (const harness::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kFailure;
    }
}
