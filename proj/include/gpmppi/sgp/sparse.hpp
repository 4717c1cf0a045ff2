#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gpmppi/sgp/gp.hpp"
#include "gpmppi/sgp/kernel.hpp"

namespace gpmppi::sgp {

/// Variational sparse GP: kernel, noise and inducing inputs, plus the posterior caches
/// that make each prediction O(m^2).
struct SgpModel {
    KernelParams kernel;
    double noise_variance{0.01};
    Inputs inducing;

    // Posterior caches, set by condition(): mean = K_zm w, var = k_zz + K_zm C K_mz.
    Eigen::VectorXd weights;
    Eigen::MatrixXd variance_correction;
    bool conditioned{false};

    [[nodiscard]] Eigen::Index inducing_count() const { return inducing.rows(); }

    void condition(const TrainingSet& train);
};

namespace detail {

/// Shared factorizations of the collapsed bound for one (train, model) pair.
struct BoundTerms {
    Eigen::MatrixXd Kmm;  // without jitter
    Eigen::MatrixXd Kmn;
    Factor Lmm;           // chol(Kmm + jitter)
    Eigen::MatrixXd A;    // L^-1 Kmn / sigma
    Eigen::LLT<Eigen::MatrixXd> LB;  // chol(I + A A^T)
    Eigen::VectorXd c;    // LB^-1 A y / sigma
    double sigma2{0.0};

    BoundTerms(const TrainingSet& train, const KernelParams& kp, double noise_variance, const Inputs& Z) {
        sigma2 = std::max(noise_variance, kMinNoiseVariance);
        const double sigma = std::sqrt(sigma2);
        Kmm = gram(Z, kp);
        Kmn = gram(Z, train.inputs, kp);
        // Jitter only when the plain factor fails: even 1e-6 moves Q_nn visibly away from K_nn when Z = X.
        Lmm = factorize(Kmm, 0.0);
        A = Lmm.llt.matrixL().solve(Kmn) / sigma;
        Eigen::MatrixXd B = A * A.transpose();
        B.diagonal().array() += 1.0;
        LB.compute(B);
        if (LB.info() != Eigen::Success) throw std::runtime_error("sgp: factorization of I + A A^T failed");
        c = LB.matrixL().solve(A * train.targets) / sigma;
        const double n = static_cast<double>(train.size());
        const double residual = n * kp.signal_variance - sigma2 * A.squaredNorm();
        if (!(residual > -1e-6 * n * kp.signal_variance) || !c.allFinite()) {
            throw std::runtime_error("sgp: inducing set is numerically degenerate");
        }
    }

    [[nodiscard]] double bound(const TrainingSet& train, const KernelParams& kp) const {
        const double n = static_cast<double>(train.size());
        const double log_det_b = LB.matrixLLT().diagonal().array().log().sum();
        return -0.5 * n * std::log(kTwoPi) - log_det_b - 0.5 * n * std::log(sigma2) -
               0.5 * train.targets.squaredNorm() / sigma2 + 0.5 * c.squaredNorm() -
               0.5 * n * kp.signal_variance / sigma2 + 0.5 * A.squaredNorm();
    }
};

}  // namespace detail

inline void SgpModel::condition(const TrainingSet& train) {
    train.validate();
    kernel.validate();
    const detail::BoundTerms t(train, kernel, noise_variance, inducing);
    const Eigen::Index m = inducing.rows();
    const Eigen::MatrixXd Linv = t.Lmm.llt.matrixL().solve(Eigen::MatrixXd::Identity(m, m));
    weights = Linv.transpose() * t.LB.matrixU().solve(t.c);
    Eigen::MatrixXd core = t.LB.solve(Eigen::MatrixXd::Identity(m, m));
    core.diagonal().array() -= 1.0;
    variance_correction = Linv.transpose() * core * Linv;
    conditioned = true;
}

/// Collapsed variational lower bound
///   log N(y | 0, Q_nn + sigma^2 I) - trace(K_nn - Q_nn) / (2 sigma^2),  Q_nn = K_nm K_mm^-1 K_mn.
inline double elbo(const TrainingSet& train, const SgpModel& model) {
    train.validate();
    model.kernel.validate();
    if (model.inducing.rows() < 1) throw std::invalid_argument("elbo: needs at least one inducing point");
    return detail::BoundTerms(train, model.kernel, model.noise_variance, model.inducing).bound(train, model.kernel);
}

/// trace(K_nn - Q_nn), the part of the bound that vanishes when the inducing set spans the data.
inline double nystrom_residual_trace(const TrainingSet& train, const SgpModel& model) {
    const detail::BoundTerms t(train, model.kernel, model.noise_variance, model.inducing);
    return static_cast<double>(train.size()) * model.kernel.signal_variance - t.sigma2 * t.A.squaredNorm();
}

/// Unconstrained parameterization used by the optimizer:
/// [log sigma_f^2, log l, log alpha, log sigma^2, z_0 az, z_0 el, z_1 az, ...].
struct FlatParams {
    static constexpr Eigen::Index kHyper = 4;

    static Eigen::VectorXd pack(const SgpModel& m) {
        Eigen::VectorXd p(kHyper + 2 * m.inducing.rows());
        p[0] = std::log(m.kernel.signal_variance);
        p[1] = std::log(m.kernel.length_scale);
        p[2] = std::log(m.kernel.alpha);
        p[3] = std::log(std::max(m.noise_variance, kMinNoiseVariance));
        for (Eigen::Index a = 0; a < m.inducing.rows(); ++a) {
            p[kHyper + 2 * a] = m.inducing(a, 0);
            p[kHyper + 2 * a + 1] = m.inducing(a, 1);
        }
        return p;
    }

    static SgpModel unpack(const Eigen::VectorXd& p) {
        SgpModel m;
        m.kernel = KernelParams{std::exp(p[0]), std::exp(p[1]), std::exp(p[2])};
        m.noise_variance = std::exp(p[3]);
        const Eigen::Index count = (p.size() - kHyper) / 2;
        m.inducing.resize(count, 2);
        for (Eigen::Index a = 0; a < count; ++a) {
            m.inducing(a, 0) = p[kHyper + 2 * a];
            m.inducing(a, 1) = p[kHyper + 2 * a + 1];
        }
        return m;
    }
};

struct BoundWithGradient {
    double value{0.0};
    Eigen::VectorXd gradient;  // w.r.t. FlatParams
};

/// Collapsed bound and its analytic gradient w.r.t. the flat parameters. All products are
/// kept at O(n m^2); no n x n matrix is formed.
inline BoundWithGradient elbo_with_gradient(const TrainingSet& train, const SgpModel& model) {
    const detail::BoundTerms t(train, model.kernel, model.noise_variance, model.inducing);
    const KernelParams& kp = model.kernel;
    const Eigen::Index n = train.size();
    const Eigen::Index m = model.inducing.rows();
    const double s2 = t.sigma2;
    const double sigma = std::sqrt(s2);
    const Eigen::VectorXd& y = train.targets;

    BoundWithGradient out;
    out.value = t.bound(train, kp);

    // alpha = (Q_nn + s2 I)^-1 y
    const Eigen::MatrixXd Binv = t.LB.solve(Eigen::MatrixXd::Identity(m, m));
    const Eigen::VectorXd Ay = t.A * y;
    const Eigen::VectorXd alpha = (y - t.A.transpose() * (Binv * Ay)) / s2;
    // K_mn (Q_nn + s2 I)^-1 = L B^-1 A / sigma
    const auto& L = t.Lmm.llt.matrixL();
    const Eigen::MatrixXd U_Sinv = (L * (Binv * t.A)) / sigma;
    const Eigen::VectorXd Ualpha = t.Kmn * alpha;
    // U G with G = W/2 + I/(2 s2), W = alpha alpha^T - Sigma^-1
    const Eigen::MatrixXd UG = 0.5 * Ualpha * alpha.transpose() - 0.5 * U_Sinv + t.Kmn / (2.0 * s2);
    const Eigen::MatrixXd dU = 2.0 * t.Lmm.llt.solve(UG);
    const Eigen::MatrixXd UGUt = UG * t.Kmn.transpose();
    const Eigen::MatrixXd KinvUGUt = t.Lmm.llt.solve(UGUt);
    const Eigen::MatrixXd dKmm = -t.Lmm.llt.solve(KinvUGUt.transpose()).transpose();

    const double tr_sigma_inv = (static_cast<double>(n - m) + Binv.trace()) / s2;
    const double tr_w = alpha.squaredNorm() - tr_sigma_inv;
    const double residual = static_cast<double>(n) * kp.signal_variance - s2 * t.A.squaredNorm();

    out.gradient = Eigen::VectorXd::Zero(FlatParams::kHyper + 2 * m);
    auto& g = out.gradient;

    const double l2 = kp.length_scale * kp.length_scale;
    const double two_al2 = 2.0 * kp.alpha * l2;
    // Accumulates d/dtheta of one kernel entry weighted by `coef`; returns dk/d(d^2).
    auto accumulate = [&](double d2, double coef) {
        const double u = 1.0 + d2 / two_al2;
        const double k = kp.signal_variance * std::pow(u, -kp.alpha);
        g[0] += coef * k;
        g[1] += coef * k * d2 / (l2 * u);
        g[2] += coef * k * kp.alpha * (-std::log(u) + (u - 1.0) / u);
        return -k / (2.0 * l2 * u);
    };

    for (Eigen::Index a = 0; a < m; ++a) {
        const double za = model.inducing(a, 0);
        const double ze = model.inducing(a, 1);
        double gaz = 0.0;
        double gel = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double diff = za - train.inputs(j, 0);
            const double ca = azimuth_chord(diff);
            const double de = ze - train.inputs(j, 1);
            const double coef = dU(a, j);
            const double dk_dd2 = accumulate(ca * ca + de * de, coef);
            gaz += coef * dk_dd2 * 2.0 * std::sin(diff);
            gel += coef * dk_dd2 * 2.0 * de;
        }
        for (Eigen::Index b = 0; b < m; ++b) {
            const double diff = za - model.inducing(b, 0);
            const double ca = azimuth_chord(diff);
            const double de = ze - model.inducing(b, 1);
            const double dk_dd2 = accumulate(ca * ca + de * de, dKmm(a, b));
            const double sym = dKmm(a, b) + dKmm(b, a);
            gaz += sym * dk_dd2 * 2.0 * std::sin(diff);
            gel += sym * dk_dd2 * 2.0 * de;
        }
        g[FlatParams::kHyper + 2 * a] = gaz;
        g[FlatParams::kHyper + 2 * a + 1] = gel;
    }
    // diag(K_nn) enters only through the trace term
    g[0] += -0.5 * static_cast<double>(n) * kp.signal_variance / s2;
    // noise: d/dlog s2 = s2 * d/ds2
    g[3] = s2 * (0.5 * tr_w + residual / (2.0 * s2 * s2));
    if (model.noise_variance < kMinNoiseVariance) g[3] = 0.0;
    return out;
}

struct FitOptions {
    int max_iterations{200};
    double learning_rate{0.05};
    double inducing_learning_rate{0.02};
    /// Stop once the bound improved by less than this (relative) over `patience` iterations.
    double tolerance{1e-6};
    int patience{10};
    bool optimize_inducing{true};
    /// Elevation range the inducing inputs are kept in; defaults to the training range.
    std::optional<std::pair<double, double>> elevation_domain;
    /// Initial hyperparameters from an earlier fit; its inducing inputs too if `reuse_inducing`
    /// is set and the counts match.
    std::optional<SgpModel> warm_start;
    bool reuse_inducing{false};
    double initial_length_scale{0.2};
    double initial_alpha{1.0};
    double noise_ratio{0.01};
};

struct FitReport {
    SgpModel model;
    double initial_elbo{0.0};
    double final_elbo{0.0};
    int iterations{0};
    bool converged{false};
};

/// One training index per stratum of `count` equal strata; the position inside each stratum is seeded.
inline std::vector<Eigen::Index> stratified_subsample(Eigen::Index n, Eigen::Index count, std::uint64_t seed) {
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(count));
    std::mt19937_64 rng(seed);
    for (Eigen::Index s = 0; s < count; ++s) {
        const Eigen::Index lo = s * n / count;
        const Eigen::Index hi = (s + 1) * n / count;  // exclusive
        std::uniform_int_distribution<Eigen::Index> pick(lo, std::max(lo, hi - 1));
        idx.push_back(pick(rng));
    }
    return idx;
}

/// Maximizes the collapsed bound over kernel, noise and inducing inputs with Adam steps on the
/// log-parameters. Returns the best model seen (never worse than the initial one).
inline FitReport fit(const TrainingSet& train, std::size_t m_s, std::uint64_t seed, const FitOptions& opt = {}) {
    train.validate();
    if (m_s < 1) throw std::invalid_argument("fit: m_s must be >= 1");
    if (static_cast<Eigen::Index>(m_s) > train.size()) throw std::invalid_argument("fit: m_s exceeds training size");
    const Eigen::Index m = static_cast<Eigen::Index>(m_s);

    double el_lo = train.inputs.col(1).minCoeff();
    double el_hi = train.inputs.col(1).maxCoeff();
    if (opt.elevation_domain) std::tie(el_lo, el_hi) = *opt.elevation_domain;

    SgpModel init;
    if (opt.warm_start) {
        init.kernel = opt.warm_start->kernel;
        init.noise_variance = opt.warm_start->noise_variance;
    } else {
        const double mean = train.targets.mean();
        const double var = (train.targets.array() - mean).square().mean();
        init.kernel = KernelParams{std::max(var, 1e-4), opt.initial_length_scale, opt.initial_alpha};
        init.noise_variance = std::max(opt.noise_ratio * init.kernel.signal_variance, kMinNoiseVariance);
    }
    if (opt.warm_start && opt.reuse_inducing && opt.warm_start->inducing.rows() == m) {
        init.inducing = opt.warm_start->inducing;
    } else {
        init.inducing.resize(m, 2);
        const auto idx = stratified_subsample(train.size(), m, seed);
        for (Eigen::Index a = 0; a < m; ++a) init.inducing.row(a) = train.inputs.row(idx[static_cast<std::size_t>(a)]);
    }

    // Box limits on the log-hyperparameters keep the optimizer away from degenerate kernels.
    const double lo_sf = std::log(1e-6), hi_sf = std::log(1e4);
    const double lo_l = std::log(1e-3), hi_l = std::log(10.0);
    const double lo_a = std::log(1e-2), hi_a = std::log(1e3);
    const double lo_n = std::log(kMinNoiseVariance), hi_n = std::log(1e4);
    auto project = [&](Eigen::VectorXd& p) {
        p[0] = std::clamp(p[0], lo_sf, hi_sf);
        p[1] = std::clamp(p[1], lo_l, hi_l);
        p[2] = std::clamp(p[2], lo_a, hi_a);
        p[3] = std::clamp(p[3], lo_n, hi_n);
        for (Eigen::Index a = 0; a < m; ++a) {
            auto& az = p[FlatParams::kHyper + 2 * a];
            auto& el = p[FlatParams::kHyper + 2 * a + 1];
            az = wrap_angle(az);
            el = std::clamp(el, el_lo, el_hi);
        }
    };

    Eigen::VectorXd p = FlatParams::pack(init);
    project(p);

    FitReport report;
    BoundWithGradient cur;
    try {
        cur = elbo_with_gradient(train, FlatParams::unpack(p));
    } catch (const std::runtime_error&) {
        if (!opt.warm_start) throw;
        // The inherited inducing set does not suit this data; restart from a fresh subsample.
        FitOptions cold = opt;
        cold.warm_start.reset();
        return fit(train, m_s, seed, cold);
    }
    report.initial_elbo = cur.value;
    Eigen::VectorXd best_p = p;
    double best = cur.value;

    Eigen::VectorXd lr = Eigen::VectorXd::Constant(p.size(), opt.inducing_learning_rate);
    lr.head(FlatParams::kHyper).setConstant(opt.learning_rate);
    // With m_s = n the inducing set equals the data, where the bound is already tight; Adam would
    // otherwise amplify round-off gradients into real moves.
    if (!opt.optimize_inducing || m == train.size()) lr.tail(p.size() - FlatParams::kHyper).setZero();

    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(p.size());
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(p.size());
    double reference = best;
    int stall = 0;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        m1 = beta1 * m1 + (1.0 - beta1) * cur.gradient;
        m2 = beta2 * m2 + (1.0 - beta2) * cur.gradient.cwiseAbs2();
        const double c1 = 1.0 - std::pow(beta1, it + 1);
        const double c2 = 1.0 - std::pow(beta2, it + 1);
        const Eigen::VectorXd step =
            lr.cwiseProduct((m1 / c1).cwiseQuotient(((m2 / c2).cwiseSqrt().array() + eps).matrix()));
        Eigen::VectorXd next = p + step;  // ascent
        project(next);
        try {
            cur = elbo_with_gradient(train, FlatParams::unpack(next));
        } catch (const std::runtime_error&) {
            lr *= 0.5;
            continue;
        }
        p = next;
        if (!std::isfinite(cur.value)) {
            p = best_p;
            lr *= 0.5;
            cur = elbo_with_gradient(train, FlatParams::unpack(p));
            continue;
        }
        if (cur.value > best) {
            best = cur.value;
            best_p = p;
        }
        if (best - reference > opt.tolerance * (1.0 + std::abs(reference))) {
            reference = best;
            stall = 0;
        } else if (++stall >= opt.patience) {
            report.converged = true;
            ++it;
            break;
        }
    }
    report.iterations = it;
    report.final_elbo = best;
    report.model = FlatParams::unpack(best_p);
    report.model.condition(train);
    return report;
}

/// Variational predictive mean and latent variance; variance is clamped at zero.
inline Prediction sgp_predict(const SgpModel& model, const Inputs& queries) {
    if (!model.conditioned) throw std::logic_error("sgp_predict: model has not been conditioned on data");
    const Eigen::MatrixXd Kzm = gram(queries, model.inducing, model.kernel);
    Prediction out;
    out.mean = Kzm * model.weights;
    const Eigen::MatrixXd KC = Kzm * model.variance_correction;
    out.variance = (model.kernel.signal_variance + KC.cwiseProduct(Kzm).rowwise().sum().array()).max(0.0).matrix();
    return out;
}

inline nlohmann::json to_json(const SgpModel& m) {
    nlohmann::json z = nlohmann::json::array();
    for (Eigen::Index a = 0; a < m.inducing.rows(); ++a) z.push_back({m.inducing(a, 0), m.inducing(a, 1)});
    return {
        {"kernel", {{"signal_variance", m.kernel.signal_variance},
                    {"length_scale", m.kernel.length_scale},
                    {"alpha", m.kernel.alpha}}},
        {"noise_variance", m.noise_variance},
        {"inducing", std::move(z)},
    };
}

/// Restores hyperparameters and inducing inputs; call condition() before predicting.
inline SgpModel sgp_model_from_json(const nlohmann::json& j) {
    SgpModel m;
    const auto& k = j.at("kernel");
    m.kernel = KernelParams{k.at("signal_variance").get<double>(), k.at("length_scale").get<double>(),
                            k.at("alpha").get<double>()};
    m.kernel.validate();
    m.noise_variance = j.at("noise_variance").get<double>();
    const auto& z = j.at("inducing");
    m.inducing.resize(static_cast<Eigen::Index>(z.size()), 2);
    for (std::size_t a = 0; a < z.size(); ++a) {
        m.inducing(static_cast<Eigen::Index>(a), 0) = z[a].at(0).get<double>();
        m.inducing(static_cast<Eigen::Index>(a), 1) = z[a].at(1).get<double>();
    }
    return m;
}

}  // namespace gpmppi::sgp
