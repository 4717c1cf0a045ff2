#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gpmppi/mppi/cost.hpp"
#include "gpmppi/mppi/planner.hpp"
#include "gpmppi/mppi/sampling.hpp"
#include "gpmppi/mppi/savitzky_golay.hpp"
#include "gpmppi/mppi/update.hpp"

using namespace gpmppi;
using namespace gpmppi::mppi;

namespace {

const Eigen::Matrix3d kQ = Eigen::Vector3d(2.5, 2.5, 5.0).asDiagonal();

sim::Costmap2D empty_map(const RobotState& at) { return sim::Costmap2D::centered_at(at, {}); }

ControlSequence random_sequence(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> v(-1.5, 1.5), w(-2.0, 2.0);
    ControlSequence U(n, 1.0 / 30.0);
    for (auto& u : U.controls) u = {v(rng), w(rng)};
    return U;
}

}  // namespace

// ---- sample_noise

TEST(SampleNoise, ZeroCovarianceGivesZeros) {
    const auto n = sample_noise(7, 5, {0.0, 0.0}, 3);
    for (const auto& s : n.samples) {
        EXPECT_EQ(s.v, 0.0);
        EXPECT_EQ(s.omega, 0.0);
    }
}

TEST(SampleNoise, EmpiricalVarianceAtPaperCovariance) {
    const auto n = sample_noise(100000, 1, {0.023, 0.028}, 20240611);
    double mv = 0, mw = 0;
    for (const auto& s : n.samples) mv += s.v, mw += s.omega;
    mv /= 1e5;
    mw /= 1e5;
    double vv = 0, vw = 0;
    for (const auto& s : n.samples) vv += (s.v - mv) * (s.v - mv), vw += (s.omega - mw) * (s.omega - mw);
    vv /= 1e5 - 1;
    vw /= 1e5 - 1;
    EXPECT_GE(vv, 0.021);
    EXPECT_LE(vv, 0.025);
    EXPECT_GE(vw, 0.026);
    EXPECT_LE(vw, 0.030);
    EXPECT_NEAR(mv, 0.0, 5 * std::sqrt(0.023 / 1e5));
    EXPECT_NEAR(mw, 0.0, 5 * std::sqrt(0.028 / 1e5));
}

TEST(SampleNoise, SameSeedSameTensor) {
    EXPECT_EQ(sample_noise(40, 30, {0.2, 0.5}, 9), sample_noise(40, 30, {0.2, 0.5}, 9));
    EXPECT_NE(sample_noise(40, 30, {0.2, 0.5}, 9), sample_noise(40, 30, {0.2, 0.5}, 10));
}

TEST(SampleNoise, Rejects) {
    EXPECT_THROW(sample_noise(0, 3, {}, 1), std::invalid_argument);
    EXPECT_THROW(sample_noise(3, 0, {}, 1), std::invalid_argument);
    EXPECT_THROW(sample_noise(3, 3, {-0.1, 0.1}, 1), std::invalid_argument);
}

// ---- state_cost / params

TEST(StateCost, Examples) {
    const RobotState g{1.0, 2.0, 0.3};
    EXPECT_EQ(state_cost(g, g, false, kQ, 1e3), 0.0);
    EXPECT_EQ(state_cost(g, g, true, kQ, 1e3), 1000.0);
    EXPECT_DOUBLE_EQ(state_cost({2.0, 2.0, 0.3}, g, false, kQ, 1e3), 2.5);
}

TEST(StateCost, HeadingErrorWraps) {
    const RobotState g{0, 0, std::numbers::pi - 0.05};
    const RobotState s{0, 0, -std::numbers::pi + 0.05};
    EXPECT_NEAR(quadratic_state_cost(s, g, kQ), 5.0 * 0.1 * 0.1, 1e-12);
    EXPECT_NEAR(quadratic_state_cost({0, 0, 0.3 + 2 * std::numbers::pi}, {0, 0, 0.3}, kQ), 0.0, 1e-20);
}

TEST(Params, GammaAndDefaultR) {
    MppiParams p;
    EXPECT_DOUBLE_EQ(p.gamma_u(), 0.49958333333333332);
    EXPECT_DOUBLE_EQ(p.gamma_u(), 1199.0 / 2400.0);
    EXPECT_DOUBLE_EQ(p.R(0, 0), 0.572 / std::sqrt(0.023));
    EXPECT_DOUBLE_EQ(p.R(1, 1), 0.572 / std::sqrt(0.028));
    EXPECT_EQ(p.R(0, 1), 0.0);
    for (double nu : {1.0, 1.5, 10.0, 1200.0, 1e9}) {
        p.nu = nu;
        EXPECT_GE(p.gamma_u(), 0.0);
        EXPECT_LT(p.gamma_u(), 0.5);
    }
}

// ---- rollout_cost

TEST(RolloutCost, AllTermsVanishAtGoal) {
    MppiParams p;
    const RobotState g{0.4, -0.2, 0.1};
    ControlSequence U(20, p.dt);
    std::vector<ControlInput> noise(20);
    EXPECT_EQ(rollout_cost(g, U, noise, empty_map(g), g, p), 0.0);
}

TEST(RolloutCost, OneStepOffsetIsFive) {
    MppiParams p;
    p.horizon = 1;
    ControlSequence U(1, p.dt);
    std::vector<ControlInput> noise(1);
    const RobotState x0{1.0, 0.0, 0.0};
    EXPECT_DOUBLE_EQ(rollout_cost(x0, U, noise, empty_map(x0), {0, 0, 0}, p), 5.0);
}

TEST(RolloutCost, HandEvaluatedControlTerms) {
    MppiParams p;
    p.R = Eigen::Vector2d(2.0, 3.0).asDiagonal();
    p.Q.setZero();
    ControlSequence U({{0.5, 0.2}}, p.dt);
    std::vector<ControlInput> noise{{0.1, -0.3}};
    const double g = p.gamma_u();
    const double expect = g * (2 * 0.01 + 3 * 0.09) + (0.5 * 2 * 0.1 + 0.2 * 3 * -0.3) + 0.5 * (2 * 0.25 + 3 * 0.04);
    const RobotState x0{};
    EXPECT_NEAR(rollout_cost(x0, U, noise, empty_map(x0), x0, p), expect, 1e-14);
}

TEST(RolloutCost, CrashPenaltyDominates) {
    MppiParams p;
    p.horizon = 30;
    const RobotState x0{0, 0, 0};
    ControlSequence U(30, p.dt);
    for (auto& u : U.controls) u = {1.5, 0.0};
    std::vector<ControlInput> noise(30);
    // occupied cell 0.6 m ahead
    auto m = empty_map(x0);
    const int ix = static_cast<int>(m.gx(0.6)), iy = static_cast<int>(m.gy(0.0));
    m.set(ix, iy, sim::CellState::occupied);
    const RobotState g{5, 0, 0};
    const double hit = rollout_cost(x0, U, noise, m, g, p);
    const double clear = rollout_cost(x0, U, noise, empty_map(x0), g, p);
    EXPECT_GE(hit, 1e3);
    EXPECT_GE(hit - clear, 1e3);
}

TEST(RolloutCost, StickyCrashOutweighsTunnelling) {
    MppiParams p;
    p.horizon = 30;
    const RobotState x0{0, 0, 0};
    ControlSequence U(30, p.dt);
    for (auto& u : U.controls) u = {1.5, 0.0};
    std::vector<ControlInput> noise(30);
    // thin wall crossed mid-horizon
    auto wall = [](const RobotState& s) { return s.x > 0.5 && s.x < 0.6; };
    const RobotState g{5, 0, 0};
    const double sticky = rollout_cost(x0, U, noise, wall, g, p);
    p.sticky_crash = false;
    const double per_step = rollout_cost(x0, U, noise, wall, g, p);
    EXPECT_GT(sticky - per_step, 10 * 1e3);
}

TEST(RolloutCost, StartStateIsNotChecked) {
    MppiParams p;
    p.horizon = 5;
    const RobotState x0{0, 0, 0};
    ControlSequence U(5, p.dt);
    std::vector<ControlInput> noise(5);
    // collides only at exactly x0; zero controls keep every state at x0 so check the count instead
    int calls = 0;
    auto probe = [&](const RobotState&) {
        ++calls;
        return false;
    };
    (void)rollout_cost(x0, U, noise, probe, x0, p);
    EXPECT_EQ(calls, 4);
}

TEST(RolloutCost, Deterministic) {
    std::mt19937_64 rng(5);
    MppiParams p;
    p.horizon = 40;
    const auto U = random_sequence(40, rng);
    const auto n = sample_noise(1, 40, p.sigma, 77);
    const RobotState x0{0.1, 0.2, 0.3};
    auto m = empty_map(x0);
    for (int i = 0; i < 200; i += 7) m.set(i, 120, sim::CellState::occupied);
    const double a = rollout_cost(x0, U, n.row(0), m, {3, 3, 0}, p);
    const double b = rollout_cost(x0, U, n.row(0), m, {3, 3, 0}, p);
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}

TEST(RolloutCost, RejectsWrongNoiseLength) {
    MppiParams p;
    ControlSequence U(4, p.dt);
    std::vector<ControlInput> noise(3);
    EXPECT_THROW(rollout_cost({}, U, noise, empty_map({}), {}, p), std::invalid_argument);
}

// ---- update_controls

TEST(UpdateControls, SingleRolloutAddsItsNoise) {
    std::mt19937_64 rng(1);
    const auto U = random_sequence(12, rng);
    const auto n = sample_noise(1, 12, {0.2, 0.5}, 4);
    const auto out = update_controls(U, n, RolloutCosts({123.4}), 0.572);
    for (std::size_t k = 0; k < 12; ++k) {
        EXPECT_EQ(out[k].v, U[k].v + n.at(0, k).v);
        EXPECT_EQ(out[k].omega, U[k].omega + n.at(0, k).omega);
    }
}

TEST(UpdateControls, EqualCostsAverage) {
    std::mt19937_64 rng(2);
    const auto U = random_sequence(6, rng);
    const auto n = sample_noise(2, 6, {0.2, 0.5}, 5);
    const auto out = update_controls(U, n, RolloutCosts({7.0, 7.0}), 0.572);
    for (std::size_t k = 0; k < 6; ++k) {
        EXPECT_NEAR(out[k].v, U[k].v + 0.5 * (n.at(0, k).v + n.at(1, k).v), 1e-15);
        EXPECT_NEAR(out[k].omega, U[k].omega + 0.5 * (n.at(0, k).omega + n.at(1, k).omega), 1e-15);
    }
}

TEST(UpdateControls, SoftmaxLimit) {
    std::mt19937_64 rng(3);
    const auto U = random_sequence(6, rng);
    const auto n = sample_noise(2, 6, {0.2, 0.5}, 6);
    const auto out = update_controls(U, n, RolloutCosts({0.0, 10.0}), 1e-6);
    for (std::size_t k = 0; k < 6; ++k) {
        EXPECT_NEAR(out[k].v - U[k].v, n.at(0, k).v, 1e-9);
        EXPECT_NEAR(out[k].omega - U[k].omega, n.at(0, k).omega, 1e-9);
    }
}

TEST(UpdateControls, Rejects) {
    ControlSequence U(3, 0.1);
    const auto n = sample_noise(2, 3, {}, 1);
    EXPECT_THROW(update_controls(U, n, RolloutCosts({1.0, 2.0}), 0.0), std::invalid_argument);
    EXPECT_THROW(update_controls(U, n, RolloutCosts({1.0}), 1.0), std::invalid_argument);
    EXPECT_THROW(update_controls(ControlSequence(4, 0.1), n, RolloutCosts({1.0, 2.0}), 1.0), std::invalid_argument);
}

TEST(UpdateControlsProperty, ShiftInvarianceSimplexMonotone) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> mdist(1, 64), ndist(1, 20);
    std::uniform_real_distribution<double> cost(0.0, 50.0), lam(0.01, 5.0), shift(-1e3, 1e3);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t M = mdist(rng), N = ndist(rng);
        const auto U = random_sequence(N, rng);
        const auto n = sample_noise(M, N, {0.2, 0.5}, rng());
        std::vector<double> c(M), cs(M);
        const double lambda = lam(rng), s = shift(rng);
        for (std::size_t m = 0; m < M; ++m) c[m] = cost(rng), cs[m] = c[m] + s;
        const auto a = update_controls(U, n, RolloutCosts(c), lambda);
        const auto b = update_controls(U, n, RolloutCosts(cs), lambda);
        for (std::size_t k = 0; k < N; ++k) {
            ASSERT_NEAR(a[k].v, b[k].v, 1e-12);
            ASSERT_NEAR(a[k].omega, b[k].omega, 1e-12);
        }
        const auto w = importance_weights(RolloutCosts(c), lambda);
        double sum = 0.0;
        for (double x : w) {
            ASSERT_GE(x, 0.0);
            sum += x;
        }
        ASSERT_NEAR(sum, 1.0, 1e-12);
        for (std::size_t i = 0; i < M; ++i) {
            for (std::size_t j = 0; j < M; ++j) {
                // strict order only where the weights are representable
                if (c[i] < c[j] && w[j] > 0.0) {
                    ASSERT_GT(w[i], w[j]);
                }
            }
        }
    }
}

TEST(UpdateControls, ImportanceWeightsNoOverflowForHugeCosts) {
    const auto w = importance_weights(RolloutCosts({1e300, 1e300 + 1e290}), 1.0);
    EXPECT_EQ(w[0], 1.0);
    EXPECT_EQ(w[1], 0.0);
}

// ---- Savitzky-Golay

TEST(SavitzkyGolay, FivePointKernel) {
    const auto c = SavitzkyGolay::centered_coefficients(2, 5);
    const double ref[] = {-3.0 / 35, 12.0 / 35, 17.0 / 35, 12.0 / 35, -3.0 / 35};
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(c[i], ref[i], 1e-12);
    // scipy.signal.savgol_coeffs(5, 2)
    const double sp[] = {-0.085714285714285687, 0.34285714285714286, 0.48571428571428565, 0.34285714285714286,
                         -0.085714285714285687};
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(c[i], sp[i], 1e-12);
    const auto y = SavitzkyGolay(5, 2, 5).apply(std::vector<double>{0, 0, 1, 0, 0});
    EXPECT_NEAR(y[2], 17.0 / 35.0, 1e-12);
}

TEST(SavitzkyGolay, CentreTapOfPaperWindow) {
    EXPECT_NEAR(SavitzkyGolay::centered_coefficients(2, 51)[25], 0.044145960270895665, 1e-12);
}

TEST(SavitzkyGolay, TruncatedWindowEdgesMatchOracle) {
    std::vector<double> x(60);
    for (int k = 0; k < 60; ++k) x[k] = std::sin(0.7 * k) + 0.1 * k * std::cos(0.3 * k);
    const auto y = SavitzkyGolay(60, 2, 51).apply(x);
    EXPECT_NEAR(y[0], 0.55286527223980642, 1e-9);
    EXPECT_NEAR(y[59], -2.8737723419018613, 1e-9);
    EXPECT_NEAR(y[30], 0.72327718435463062, 1e-9);
    EXPECT_NEAR(y[30], 0.72327718435454691, 1e-9);  // scipy savgol_filter, interior sample
}

TEST(SavitzkyGolay, ConstantUnchanged) {
    ControlSequence U(60, 0.1);
    for (auto& u : U.controls) u = {0.7, -0.2};
    const auto out = sg_filter(U, 2, 51);
    for (std::size_t k = 0; k < 60; ++k) {
        EXPECT_NEAR(out[k].v, 0.7, 1e-12);
        EXPECT_NEAR(out[k].omega, -0.2, 1e-12);
    }
}

TEST(SavitzkyGolayProperty, QuadraticsReproducedAtInteriorPoints) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double a = coef(rng) * 1e-3, b = coef(rng) * 1e-2, c = coef(rng);
        std::vector<double> x(80);
        for (int k = 0; k < 80; ++k) x[k] = a * k * k + b * k + c;
        const auto y = SavitzkyGolay(80, 2, 51).apply(x);
        for (int k = 25; k < 55; ++k) ASSERT_NEAR(y[k], x[k], 1e-9);
        // truncated windows still fit a quadratic exactly
        for (int k = 0; k < 80; ++k) ASSERT_NEAR(y[k], x[k], 1e-9);
    }
}

TEST(SavitzkyGolay, Rejects) {
    EXPECT_THROW(SavitzkyGolay(60, 2, 50), std::invalid_argument);
    EXPECT_THROW(SavitzkyGolay(40, 2, 51), std::invalid_argument);
    EXPECT_THROW(SavitzkyGolay(60, 3, 3), std::invalid_argument);
}

// ---- shift / mean speed

TEST(Shift, Examples) {
    ControlSequence U({{1, 0}, {2, 0}, {3, 0}}, 0.1);
    const auto s = shift_sequence(U);
    EXPECT_EQ(s[0].v, 2);
    EXPECT_EQ(s[1].v, 3);
    EXPECT_EQ(s[2].v, 3);
    ControlSequence C({{0.4, 0.1}, {0.4, 0.1}}, 0.1);
    EXPECT_EQ(shift_sequence(C), C);
}

TEST(Shift, NTimesGivesConstantLast) {
    std::mt19937_64 rng(3);
    auto U = random_sequence(17, rng);
    const auto last = U[16];
    auto S = U;
    for (int i = 0; i < 17; ++i) S = shift_sequence(S);
    for (const auto& u : S.controls) EXPECT_EQ(u, last);
}

TEST(MeanSpeed, Examples) {
    EXPECT_EQ(predicted_mean_speed(ControlSequence(5, 0.1)), 0.0);
    EXPECT_DOUBLE_EQ(predicted_mean_speed(ControlSequence({{1, 0}, {-1, 0}, {1, 0}, {-1, 0}}, 0.1)), 1.0);
    EXPECT_NEAR(predicted_mean_speed(ControlSequence({{1.5, 0}, {0, 0}, {0.3, 0}}, 0.1)), 0.6, 1e-15);
}

// ---- planner

namespace {
MppiParams small_params() {
    MppiParams p;
    p.rollouts = 128;
    p.horizon = 30;
    p.sg_window = 21;
    p.sigma = {0.2, 0.5};
    p.R = MppiParams::default_control_weight(p.lambda, p.sigma);
    return p;
}
}  // namespace

TEST(Planner, DeterministicPerSeedAndAcrossThreads) {
    auto p = small_params();
    const RobotState x0{0, 0, 0}, g{3, 1, 0};
    auto map = empty_map(x0);
    map.set(120, 100, sim::CellState::occupied);
    MppiPlanner a(p, 42), b(p, 42);
    p.threads = 3;
    MppiPlanner c(p, 42);
    for (int i = 0; i < 5; ++i) {
        const auto da = a.iterate(x0, map, g);
        const auto db = b.iterate(x0, map, g);
        const auto dc = c.iterate(x0, map, g);
        EXPECT_EQ(da.executed, db.executed);
        EXPECT_EQ(da.executed, dc.executed);
    }
    EXPECT_EQ(a.sequence(), c.sequence());
}

TEST(Planner, DrivesTowardGoalInOpenSpace) {
    const auto p = small_params();
    MppiPlanner pl(p, 7);
    RobotState x{0, 0, 0};
    const RobotState g{4, 0, 0};
    for (int i = 0; i < 150; ++i) {
        const auto d = pl.iterate(x, [](const RobotState&) { return false; }, g);
        EXPECT_LE(std::abs(d.executed.v), p.v_max);
        EXPECT_LE(std::abs(d.executed.omega), p.omega_max);
        x = sim::step_dynamics(x, d.executed, p.dt);
    }
    EXPECT_LT(planar_distance(x, g), 0.5);
}

TEST(Planner, SequenceLengthIsFixed) {
    const auto p = small_params();
    MppiPlanner pl(p, 1);
    for (int i = 0; i < 3; ++i) {
        pl.iterate({}, [](const RobotState&) { return false; }, {1, 0, 0});
        EXPECT_EQ(pl.sequence().size(), p.horizon);
    }
}
