#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "gpmppi/common.hpp"

namespace gpmppi::sgp {

/// Inputs are rows of (azimuth, elevation) in radians.
using Inputs = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using Point = Eigen::RowVector2d;

/// Rational quadratic kernel sigma_f^2 (1 + d^2 / (2 alpha l^2))^(-alpha).
struct KernelParams {
    double signal_variance{1.0};
    double length_scale{0.2};
    double alpha{1.0};

    [[nodiscard]] bool valid() const { return signal_variance > 0.0 && length_scale > 0.0 && alpha > 0.0; }
    void validate() const {
        if (!valid()) throw std::invalid_argument("rq kernel: parameters must be strictly positive");
    }
};

/// Squared input distance. Azimuth enters through the chord 2 sin(da/2): periodic, equal to the
/// wrapped difference to first order, and (unlike the arc length) it keeps the RQ kernel positive
/// definite on the circle.
inline double azimuth_chord(double da) { return 2.0 * std::sin(0.5 * da); }

inline double squared_distance(double az1, double el1, double az2, double el2) {
    const double ca = azimuth_chord(az1 - az2);
    const double de = el1 - el2;
    return ca * ca + de * de;
}

inline double squared_distance(const Point& a, const Point& b) { return squared_distance(a[0], a[1], b[0], b[1]); }

inline double rq_from_sqdist(double d2, const KernelParams& p) {
    return p.signal_variance * std::pow(1.0 + d2 / (2.0 * p.alpha * p.length_scale * p.length_scale), -p.alpha);
}

inline double rq_kernel(const Point& a, const Point& b, const KernelParams& p) {
    return rq_from_sqdist(squared_distance(a, b), p);
}

inline Eigen::MatrixXd gram(const Inputs& a, const Inputs& b, const KernelParams& p) {
    Eigen::MatrixXd K(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            K(i, j) = rq_from_sqdist(squared_distance(a(i, 0), a(i, 1), b(j, 0), b(j, 1)), p);
        }
    }
    return K;
}

inline Eigen::MatrixXd gram(const Inputs& a, const KernelParams& p) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        K(j, j) = p.signal_variance;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            K(i, j) = rq_from_sqdist(squared_distance(a(i, 0), a(i, 1), a(j, 0), a(j, 1)), p);
            K(j, i) = K(i, j);
        }
    }
    return K;
}

/// Result of a Cholesky factorization with the jitter that made it succeed.
struct Factor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter{0.0};
};

/// Factorizes K, adding diagonal jitter 1e-10 -> 1e-8 -> 1e-6 -> 1e-5 -> 1e-4 if the plain factor fails or
/// is numerically singular (smallest squared pivot below `min_pivot` times the largest
/// diagonal entry). Throws std::runtime_error when even 1e-4 is not enough.
inline Factor factorize(const Eigen::MatrixXd& K, double min_pivot = 1e-12) {
    const double scale = std::max(K.diagonal().maxCoeff(), std::numeric_limits<double>::min());
    for (double jitter : {0.0, 1e-10, 1e-8, 1e-6, 1e-5, 1e-4}) {
        Factor f;
        f.jitter = jitter;
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += jitter;
        f.llt.compute(Kj);
        if (f.llt.info() != Eigen::Success) continue;
        const Eigen::VectorXd d = f.llt.matrixLLT().diagonal();
        if (!d.allFinite()) continue;
        if (jitter == 0.0 && d.minCoeff() * d.minCoeff() < min_pivot * scale) continue;
        return f;
    }
    throw std::runtime_error("cholesky factorization failed after jitter escalation to 1e-4");
}

}  // namespace gpmppi::sgp
