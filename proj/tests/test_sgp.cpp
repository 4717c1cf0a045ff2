#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "gpmppi/sgp/gp.hpp"
#include "gpmppi/sgp/kernel.hpp"
#include "gpmppi/sgp/sparse.hpp"

using namespace gpmppi;
using namespace gpmppi::sgp;

namespace {

Inputs rows(std::initializer_list<std::pair<double, double>> pts) {
    Inputs z(static_cast<Eigen::Index>(pts.size()), 2);
    Eigen::Index i = 0;
    for (auto [a, e] : pts) z.row(i++) << a, e;
    return z;
}

TrainingSet random_set(std::mt19937_64& rng, int n, double noise = 0.05) {
    std::uniform_real_distribution<double> az(-std::numbers::pi, std::numbers::pi), el(0.0, 0.26), y(-1.0, 1.0);
    TrainingSet t;
    t.inputs.resize(n, 2);
    t.targets.resize(n);
    for (int i = 0; i < n; ++i) {
        t.inputs.row(i) << az(rng), el(rng);
        t.targets[i] = y(rng);
    }
    t.noise_variance = noise;
    return t;
}

KernelParams random_kernel(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> sf(0.2, 3.0), l(0.05, 1.0), a(0.2, 5.0);
    return {sf(rng), l(rng), a(rng)};
}

SgpModel model_with(const TrainingSet& t, const KernelParams& k, const Inputs& z) {
    SgpModel m;
    m.kernel = k;
    m.noise_variance = t.noise_variance;
    m.inducing = z;
    return m;
}

}  // namespace

// ---- kernel

TEST(Kernel, Examples) {
    const KernelParams p{1.7, 0.3, 2.0};
    const Point z(0.4, 0.1);
    EXPECT_DOUBLE_EQ(rq_kernel(z, z, p), 1.7);
    EXPECT_DOUBLE_EQ(rq_from_sqdist(2.0, {1.0, 1.0, 1.0}), 0.5);
    EXPECT_NEAR(rq_kernel(Point(0, 0), Point(0, std::sqrt(2.0)), {1.0, 1.0, 1.0}), 0.5, 1e-15);
}

TEST(Kernel, AzimuthWrapsAround) {
    const double a = deg2rad(-179.0), b = deg2rad(179.0);
    const double d2 = squared_distance(a, 0.0, b, 0.0);
    EXPECT_NEAR(d2, 0.0012183459618085397, 1e-15);  // chord of 2 degrees
    EXPECT_NEAR(d2, std::pow(deg2rad(2.0), 2), 2e-4 * d2);
    EXPECT_GT(std::pow(deg2rad(358.0), 2), 1000 * d2);
}

TEST(KernelProperty, SymmetricAndPsd) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const auto t = random_set(rng, 10);
        const auto p = random_kernel(rng);
        const auto K = gram(t.inputs, p);
        const auto Kab = gram(t.inputs, t.inputs, p);
        ASSERT_TRUE(K.isApprox(K.transpose(), 0.0));
        ASSERT_LT((K - Kab).cwiseAbs().maxCoeff(), 1e-14);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
        ASSERT_GE(es.eigenvalues().minCoeff(), -1e-8);
    }
}

TEST(Kernel, RejectsNonPositive) {
    EXPECT_THROW((KernelParams{0.0, 1.0, 1.0}).validate(), std::invalid_argument);
    EXPECT_THROW((KernelParams{1.0, -1.0, 1.0}).validate(), std::invalid_argument);
    EXPECT_THROW((KernelParams{1.0, 1.0, 0.0}).validate(), std::invalid_argument);
}

// ---- exact GP

TEST(ExactGp, ScalarInterpolates) {
    TrainingSet t{rows({{0.2, 0.1}}), Eigen::VectorXd::Ones(1), 1e-9};
    const auto pr = gp_predict(t, {1.0, 0.3, 1.0}, rows({{0.2, 0.1}}));
    EXPECT_NEAR(pr.mean[0], 1.0, 1e-5);
    EXPECT_NEAR(pr.variance[0], 0.0, 1e-5);
}

TEST(ExactGp, FarQueryRecoversPrior) {
    std::mt19937_64 rng(1);
    const auto t = random_set(rng, 12);
    const KernelParams p{1.3, 0.2, 1.0};
    const auto pr = gp_predict(t, p, rows({{0.0, 1e5}}));
    EXPECT_NEAR(pr.mean[0], 0.0, 1e-6);
    EXPECT_NEAR(pr.variance[0], 1.3, 1e-6);
}

TEST(ExactGp, LinearInTargets) {
    std::mt19937_64 rng(2);
    auto t = random_set(rng, 15);
    const auto q = random_set(rng, 6).inputs;
    const KernelParams p{1.0, 0.4, 1.5};
    const auto a = gp_predict(t, p, q);
    t.targets *= -3.5;
    const auto b = gp_predict(t, p, q);
    EXPECT_LT((b.mean - (-3.5) * a.mean).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((b.variance - a.variance).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ExactGp, MatchesScikitLearn) {
    TrainingSet t;
    t.inputs = rows({{-0.9, 0.0}, {-0.4, 0.1}, {0.0, 0.05}, {0.35, 0.2}, {0.8, 0.12}, {1.3, 0.0}, {1.9, 0.26}});
    t.targets.resize(7);
    t.targets << 0.5, 1.2, 2.0, 1.1, -0.3, 0.4, 0.9;
    t.noise_variance = 0.05;
    const KernelParams p{1.7, 0.45, 0.8};
    EXPECT_NEAR(log_marginal_likelihood(t, p), -8.6900277069706835, 1e-9);
    const auto pr = gp_predict(t, p, rows({{0.1, 0.1}, {2.9, 0.0}}));
    EXPECT_NEAR(pr.mean[0], 1.8333154631326001, 1e-9);
    EXPECT_NEAR(pr.mean[1], 0.36133644848027907, 1e-9);
    EXPECT_NEAR(pr.variance[0], 0.064763596925299982, 1e-9);
    EXPECT_NEAR(pr.variance[1], 1.5028038548901839, 1e-9);
}

TEST(Lml, ScalarGaussianDensity) {
    TrainingSet t{rows({{0.0, 0.0}}), Eigen::VectorXd::Zero(1), 0.25};
    EXPECT_NEAR(log_marginal_likelihood(t, {0.75, 0.2, 1.0}), -0.91893853320467267, 1e-14);
}

TEST(Lml, DecreasesWithLargerObservation) {
    TrainingSet t{rows({{0.0, 0.0}, {0.5, 0.1}}), Eigen::VectorXd::Zero(2), 0.1};
    const KernelParams p{1.0, 0.3, 1.0};
    double prev = log_marginal_likelihood(t, p);
    for (double y : {0.5, 1.0, 2.0, 4.0}) {
        t.targets[0] = y;
        const double cur = log_marginal_likelihood(t, p);
        EXPECT_LT(cur, prev);
        prev = cur;
    }
}

TEST(Lml, PermutationInvariant) {
    std::mt19937_64 rng(3);
    const auto t = random_set(rng, 25);
    const KernelParams p{1.1, 0.3, 2.0};
    Eigen::PermutationMatrix<Eigen::Dynamic> P(25);
    P.setIdentity();
    std::shuffle(P.indices().data(), P.indices().data() + 25, rng);
    TrainingSet s = t;
    s.inputs = P * t.inputs;
    s.targets = P * t.targets;
    EXPECT_NEAR(log_marginal_likelihood(s, p), log_marginal_likelihood(t, p), 1e-10);
}

TEST(Factorize, JitterRescuesSingularAndFailsOnGarbage) {
    Eigen::MatrixXd K = Eigen::MatrixXd::Ones(3, 3);
    const auto f = factorize(K);
    EXPECT_GT(f.jitter, 0.0);
    Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(3, 3);
    EXPECT_THROW(factorize(bad), std::runtime_error);
}

// ---- ELBO

TEST(Elbo, FullInducingSetEqualsLml) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = random_set(rng, 30 + trial);
        const auto p = random_kernel(rng);
        const auto m = model_with(t, p, t.inputs);
        const double lml = log_marginal_likelihood(t, p);
        EXPECT_NEAR(elbo(t, m), lml, 1e-6 * std::abs(lml));
        EXPECT_NEAR(nystrom_residual_trace(t, m), 0.0, 1e-6);
    }
}

TEST(ElboProperty, NeverAboveLml) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> n(5, 60);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = random_set(rng, n(rng), 0.01 + 0.1 * (trial % 5));
        const auto p = random_kernel(rng);
        std::uniform_int_distribution<int> msz(1, static_cast<int>(t.size()));
        const auto z = random_set(rng, msz(rng)).inputs;
        const double lml = log_marginal_likelihood(t, p);
        ASSERT_LE(elbo(t, model_with(t, p, z)), lml + 1e-8);
    }
}

TEST(ElboProperty, GradientMatchesCentralDifferences) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const auto t = random_set(rng, 25, 0.05);
        const auto z = random_set(rng, 6).inputs;
        const auto m = model_with(t, random_kernel(rng), z);
        const auto g = elbo_with_gradient(t, m);
        const Eigen::VectorXd p = FlatParams::pack(m);
        ASSERT_EQ(g.gradient.size(), p.size());
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double h = 1e-5;
            Eigen::VectorXd a = p, b = p;
            a[i] += h;
            b[i] -= h;
            const double fd = (elbo(t, FlatParams::unpack(a)) - elbo(t, FlatParams::unpack(b))) / (2 * h);
            ASSERT_NEAR(g.gradient[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "component " << i;
        }
        EXPECT_NEAR(g.value, elbo(t, m), 1e-12 * std::abs(g.value));
    }
}

// ---- fit / sgp_predict

TEST(Fit, FullInducingMatchesExactGp) {
    std::mt19937_64 rng(7);
    const auto t = random_set(rng, 20);
    const auto r = fit(t, 20, 1);
    const auto q = random_set(rng, 30).inputs;
    TrainingSet exact = t;
    exact.noise_variance = r.model.noise_variance;
    const auto a = gp_predict(exact, r.model.kernel, q);
    const auto b = sgp_predict(r.model, q);
    EXPECT_LT((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_LT((a.variance - b.variance).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_GE(r.final_elbo, r.initial_elbo);
}

TEST(Fit, RecoversLengthScaleFromPriorSample) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> az(-std::numbers::pi, std::numbers::pi), el(0.0, 0.26);
    const int n = 200;
    TrainingSet t;
    t.inputs.resize(n, 2);
    for (int i = 0; i < n; ++i) t.inputs.row(i) << az(rng), el(rng);
    const KernelParams truth{1.0, 0.3, 1.0};
    Eigen::MatrixXd K = gram(t.inputs, truth);
    K.diagonal().array() += 1e-8;
    Eigen::VectorXd w(n);
    std::normal_distribution<double> unit;
    for (auto& x : w) x = unit(rng);
    t.targets = Eigen::LLT<Eigen::MatrixXd>(K).matrixL() * w;
    t.noise_variance = 1e-4;
    FitOptions opt;
    opt.max_iterations = 400;
    const auto r = fit(t, 100, 3, opt);
    EXPECT_GT(r.model.kernel.length_scale, truth.length_scale / 2);
    EXPECT_LT(r.model.kernel.length_scale, truth.length_scale * 2);
}

TEST(Fit, ZeroTargetsGiveZeroMean) {
    std::mt19937_64 rng(9);
    auto t = random_set(rng, 60);
    t.targets.setZero();
    const auto r = fit(t, 20, 2);
    const auto pr = sgp_predict(r.model, random_set(rng, 50).inputs);
    EXPECT_LT(pr.mean.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Fit, DeterministicPerSeed) {
    std::mt19937_64 rng(10);
    const auto t = random_set(rng, 80);
    const auto a = fit(t, 25, 5);
    const auto b = fit(t, 25, 5);
    EXPECT_EQ(a.final_elbo, b.final_elbo);
    EXPECT_EQ(a.model.kernel.length_scale, b.model.kernel.length_scale);
    EXPECT_TRUE((a.model.inducing.array() == b.model.inducing.array()).all());
    EXPECT_TRUE((a.model.weights.array() == b.model.weights.array()).all());
}

TEST(Fit, InducingPointsStayInDomain) {
    std::mt19937_64 rng(11);
    const auto t = random_set(rng, 90);
    const auto r = fit(t, 30, 1);
    const double lo = t.inputs.col(1).minCoeff(), hi = t.inputs.col(1).maxCoeff();
    for (Eigen::Index a = 0; a < r.model.inducing.rows(); ++a) {
        EXPECT_GE(r.model.inducing(a, 0), -std::numbers::pi);
        EXPECT_LE(r.model.inducing(a, 0), std::numbers::pi);
        EXPECT_GE(r.model.inducing(a, 1), lo);
        EXPECT_LE(r.model.inducing(a, 1), hi);
    }
}

TEST(Fit, Rejects) {
    std::mt19937_64 rng(12);
    const auto t = random_set(rng, 10);
    EXPECT_THROW(fit(t, 0, 1), std::invalid_argument);
    EXPECT_THROW(fit(t, 11, 1), std::invalid_argument);
    EXPECT_THROW(sgp_predict(SgpModel{}, t.inputs), std::logic_error);
}

TEST(SgpPredict, InterpolatesDenseCluster) {
    // dense noise-free cluster of value c around the origin, zeros elsewhere
    const double c = 0.8;
    TrainingSet t;
    std::vector<std::array<double, 3>> pts;
    for (int i = -5; i <= 5; ++i)
        for (int j = 0; j <= 4; ++j) pts.push_back({0.01 * i, 0.01 * j, c});
    // zeros well away from the cluster
    for (int i = 0; i < 30; ++i) pts.push_back({1.0 + 4.0 * i / 30.0, 0.02, 0.0});
    t.inputs.resize(static_cast<Eigen::Index>(pts.size()), 2);
    t.targets.resize(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        t.inputs.row(static_cast<Eigen::Index>(i)) << pts[i][0], pts[i][1];
        t.targets[static_cast<Eigen::Index>(i)] = pts[i][2];
    }
    t.noise_variance = 1e-4;
    const auto r = fit(t, 30, 4);
    Inputs q(1, 2);
    q.row(0) = r.model.inducing.row(0);
    // pick the inducing point that sits inside the cluster
    for (Eigen::Index a = 0; a < r.model.inducing.rows(); ++a) {
        if (std::abs(r.model.inducing(a, 0)) < 0.03) q.row(0) = r.model.inducing.row(a);
    }
    ASSERT_LT(std::abs(q(0, 0)), 0.03);
    EXPECT_NEAR(sgp_predict(r.model, q).mean[0], c, 0.05 * c);
}

TEST(SgpPredict, FarQueryAndIdenticalQueries) {
    std::mt19937_64 rng(13);
    const auto t = random_set(rng, 50);
    const auto r = fit(t, 20, 1);
    const auto far = sgp_predict(r.model, rows({{0.0, 1e4}}));
    EXPECT_GE(far.variance[0], 0.9 * r.model.kernel.signal_variance);
    const auto same = sgp_predict(r.model, rows({{0.3, 0.1}, {0.3, 0.1}}));
    EXPECT_EQ(same.mean[0], same.mean[1]);
    EXPECT_EQ(same.variance[0], same.variance[1]);
    const auto all = sgp_predict(r.model, random_set(rng, 400).inputs);
    EXPECT_GE(all.variance.minCoeff(), 0.0);
}

TEST(SgpPredict, FullInducingEqualsExactOnRandomSets) {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = random_set(rng, 40, 0.02);
        const auto p = random_kernel(rng);
        auto m = model_with(t, p, t.inputs);
        m.condition(t);
        const auto q = random_set(rng, 25).inputs;
        const auto a = gp_predict(t, p, q);
        const auto b = sgp_predict(m, q);
        ASSERT_LT((a.mean - b.mean).cwiseAbs().maxCoeff(), 1e-5);
        ASSERT_LT((a.variance - b.variance).cwiseAbs().maxCoeff(), 1e-5);
    }
}

TEST(SgpModelJson, RoundTrip) {
    std::mt19937_64 rng(15);
    const auto t = random_set(rng, 30);
    const auto r = fit(t, 10, 1);
    auto back = sgp_model_from_json(nlohmann::json::parse(to_json(r.model).dump()));
    EXPECT_EQ(back.kernel.length_scale, r.model.kernel.length_scale);
    EXPECT_EQ(back.noise_variance, r.model.noise_variance);
    EXPECT_TRUE((back.inducing.array() == r.model.inducing.array()).all());
    back.condition(t);
    const auto q = random_set(rng, 5).inputs;
    EXPECT_LT((sgp_predict(back, q).mean - sgp_predict(r.model, q).mean).cwiseAbs().maxCoeff(), 1e-12);
}
