#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gpmppi/mppi/types.hpp"

namespace gpmppi::mppi {

/// Least-squares polynomial smoothing with a fixed odd window. Interior samples use the
/// centered window; samples within half a window of either end use the truncated window
/// (only the samples that exist) and evaluate the local fit at their own position.
class SavitzkyGolay {
public:
    SavitzkyGolay(std::size_t length, int order, int window) : length_(length), order_(order), window_(window) {
        if (order < 0) throw std::invalid_argument("savitzky_golay: negative polynomial order");
        if (window % 2 == 0) throw std::invalid_argument("savitzky_golay: window must be odd");
        if (window <= order) throw std::invalid_argument("savitzky_golay: window must exceed the order");
        if (static_cast<std::size_t>(window) > length) throw std::invalid_argument("savitzky_golay: window > length");
        const int half = window / 2;
        rows_.resize(length);
        for (std::size_t k = 0; k < length; ++k) {
            const int lo = std::max(0, static_cast<int>(k) - half);
            const int hi = std::min(static_cast<int>(length) - 1, static_cast<int>(k) + half);
            rows_[k] = {lo, fit_row(lo, hi, static_cast<int>(k))};
        }
    }

    /// Convolution coefficients of the centered window (symmetric for interior points).
    [[nodiscard]] static Eigen::VectorXd centered_coefficients(int order, int window) {
        return fit_row(0, window - 1, window / 2, order);
    }

    [[nodiscard]] std::vector<double> apply(const std::vector<double>& x) const {
        if (x.size() != length_) throw std::invalid_argument("savitzky_golay: length mismatch");
        std::vector<double> y(length_);
        for (std::size_t k = 0; k < length_; ++k) {
            const auto& [lo, c] = rows_[k];
            double s = 0.0;
            for (Eigen::Index i = 0; i < c.size(); ++i) s += c[i] * x[static_cast<std::size_t>(lo + i)];
            y[k] = s;
        }
        return y;
    }

    [[nodiscard]] ControlSequence apply(const ControlSequence& U) const {
        std::vector<double> v(U.size());
        std::vector<double> w(U.size());
        for (std::size_t k = 0; k < U.size(); ++k) {
            v[k] = U[k].v;
            w[k] = U[k].omega;
        }
        v = apply(v);
        w = apply(w);
        ControlSequence out = U;
        for (std::size_t k = 0; k < U.size(); ++k) out[k] = {v[k], w[k]};
        return out;
    }

    [[nodiscard]] std::size_t length() const { return length_; }
    [[nodiscard]] int order() const { return order_; }
    [[nodiscard]] int window() const { return window_; }

private:
    [[nodiscard]] Eigen::VectorXd fit_row(int lo, int hi, int at) const { return fit_row(lo, hi, at, order_); }

    /// Row of the hat matrix: weights c with sum_i c_i x_{lo+i} = p(at), p the LS fit on [lo, hi].
    static Eigen::VectorXd fit_row(int lo, int hi, int at, int order) {
        const int n = hi - lo + 1;
        const int deg = std::min(order, n - 1);
        Eigen::MatrixXd V(n, deg + 1);
        for (int i = 0; i < n; ++i) {
            const double t = static_cast<double>(lo + i - at);
            double p = 1.0;
            for (int j = 0; j <= deg; ++j) {
                V(i, j) = p;
                p *= t;
            }
        }
        // p(at) is the constant coefficient since t is centered on `at`.
        const Eigen::MatrixXd pinv = V.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(n, n));
        return pinv.row(0).transpose();
    }

    std::size_t length_;
    int order_;
    int window_;
    std::vector<std::pair<int, Eigen::VectorXd>> rows_;
};

inline ControlSequence sg_filter(const ControlSequence& U, int poly_order, int window) {
    return SavitzkyGolay(U.size(), poly_order, window).apply(U);
}

}  // namespace gpmppi::mppi
