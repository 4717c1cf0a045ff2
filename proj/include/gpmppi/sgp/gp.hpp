#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "gpmppi/sgp/kernel.hpp"

namespace gpmppi::sgp {

struct TrainingSet {
    Inputs inputs;
    Eigen::VectorXd targets;
    double noise_variance{0.01};

    [[nodiscard]] Eigen::Index size() const { return inputs.rows(); }
    [[nodiscard]] bool empty() const { return inputs.rows() == 0; }

    void validate() const {
        if (inputs.rows() != targets.size()) throw std::invalid_argument("training set: inputs/targets size mismatch");
        if (inputs.rows() < 1) throw std::invalid_argument("training set: needs at least one point");
        if (!(noise_variance > 0.0)) throw std::invalid_argument("training set: noise variance must be positive");
    }
};

/// Latent-function predictive mean and variance per query.
struct Prediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

inline constexpr double kMinNoiseVariance = 1e-6;

/// Exact GP posterior with a zero prior mean.
inline Prediction gp_predict(const TrainingSet& train, const KernelParams& params, const Inputs& queries) {
    train.validate();
    params.validate();
    Eigen::MatrixXd K = gram(train.inputs, params);
    K.diagonal().array() += std::max(train.noise_variance, kMinNoiseVariance);
    const Factor f = factorize(K);
    const Eigen::MatrixXd Kzn = gram(queries, train.inputs, params);
    Prediction out;
    out.mean = Kzn * f.llt.solve(train.targets);
    const Eigen::MatrixXd V = f.llt.matrixL().solve(Kzn.transpose());
    out.variance = (params.signal_variance - V.colwise().squaredNorm().transpose().array()).max(0.0).matrix();
    return out;
}

/// log N(y | 0, K_nn + sigma^2 I).
inline double log_marginal_likelihood(const TrainingSet& train, const KernelParams& params) {
    train.validate();
    params.validate();
    Eigen::MatrixXd K = gram(train.inputs, params);
    K.diagonal().array() += std::max(train.noise_variance, kMinNoiseVariance);
    const Factor f = factorize(K);
    const Eigen::VectorXd a = f.llt.matrixL().solve(train.targets);
    const double n = static_cast<double>(train.size());
    const double logdet = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * a.squaredNorm() - 0.5 * logdet - 0.5 * n * std::log(kTwoPi);
}

}  // namespace gpmppi::sgp
