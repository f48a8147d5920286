#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "grople/error.hpp"
#include "grople/label_embedding.hpp"

namespace grople {

/// Sparse linear map from feature space onto the embedded points, with the
/// correlation penalty matrix R used during fitting. `zero_entries` records
/// how many entries of Z were exactly zero when the fit finished.
struct FeatureMap {
    Eigen::MatrixXd Z; // D x d
    double alpha = 0.0;
    double beta = 0.0;
    Eigen::MatrixXd R; // d x d, symmetric, zero diagonal, entries in [0, 2]
    Eigen::Index zero_entries = 0;
};

/// R = 1 - C with C the Pearson correlation between columns of U. A
/// zero-variance column correlates 0 with every other column (so R = 1
/// there); the diagonal is forced to 0.
inline Eigen::MatrixXd correlation_penalty(const Eigen::MatrixXd& U) {
    const Eigen::Index n = U.rows();
    const Eigen::Index d = U.cols();
    if (n < 2) throw value_error("correlation penalty needs at least 2 rows");

    const Eigen::RowVectorXd mean = U.colwise().mean();
    const Eigen::MatrixXd centered = U.rowwise() - mean;
    Eigen::VectorXd norm(d);
    for (Eigen::Index j = 0; j < d; ++j) norm(j) = centered.col(j).norm();

    Eigen::MatrixXd R(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        R(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < d; ++j) {
            double corr = 0.0;
            if (norm(i) > 0.0 && norm(j) > 0.0)
                corr = centered.col(i).dot(centered.col(j)) / (norm(i) * norm(j));
            // Rounding can push |corr| a few ulps past 1; snap so duplicated
            // (or exactly negated) columns give R of exactly 0 (or 2).
            constexpr double snap = 16.0 * std::numeric_limits<double>::epsilon();
            if (corr > 1.0 - snap) corr = 1.0;
            if (corr < -1.0 + snap) corr = -1.0;
            const double r = 1.0 - corr;
            R(i, j) = r;
            R(j, i) = r;
        }
    }
    return R;
}

/// Gradient of ||X Z - U||_F^2 + alpha * trace(R Z^T Z) in Z.
inline Eigen::MatrixXd feature_smooth_gradient(const Eigen::MatrixXd& X,
                                               const Eigen::MatrixXd& U,
                                               const Eigen::MatrixXd& Z,
                                               const Eigen::MatrixXd& R, double alpha) {
    if (X.rows() != U.rows() || X.cols() != Z.rows() || Z.cols() != U.cols() ||
        R.rows() != Z.cols() || R.cols() != Z.cols())
        throw dimension_error("feature_smooth_gradient: shapes do not conform (X " +
                              std::to_string(X.rows()) + "x" + std::to_string(X.cols()) +
                              ", U " + std::to_string(U.rows()) + "x" + std::to_string(U.cols()) +
                              ", Z " + std::to_string(Z.rows()) + "x" + std::to_string(Z.cols()) +
                              ", R " + std::to_string(R.rows()) + "x" + std::to_string(R.cols()) +
                              ")");
    return 2.0 * (X.transpose() * (X * Z - U)) + 2.0 * alpha * (Z * R);
}

/// Elementwise soft threshold sign(m) max(|m| - t, 0), the prox of t ||.||_1.
inline Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& M, double t) {
    if (t < 0.0) throw value_error("soft threshold must be nonnegative");
    return M.unaryExpr([t](double m) {
        const double mag = std::abs(m) - t;
        return mag > 0.0 ? (m > 0.0 ? mag : -mag) : 0.0;
    });
}

/// Smooth + l1 objective of the feature-space embedding.
inline double feature_objective(const Eigen::MatrixXd& X, const Eigen::MatrixXd& U,
                                const Eigen::MatrixXd& Z, const Eigen::MatrixXd& R,
                                double alpha, double beta) {
    return (X * Z - U).squaredNorm() + alpha * (R * (Z.transpose() * Z)).trace() +
           beta * Z.cwiseAbs().sum();
}

/// Accelerated proximal gradient for Eq.-(5)-style fitting: same momentum
/// schedule as the label-side solver, step 1/L_Z with
/// L_Z = 2(||X^T X||_F + alpha ||R||_F), prox = soft threshold at beta/L_Z.
/// Z is initialized from a ridge solve with gamma = 1e-4 trace(X^T X)/D.
inline FeatureMap fit_feature_map(const Eigen::MatrixXd& X, const Eigen::MatrixXd& U,
                                  double alpha, double beta, const ApgSettings& settings = {}) {
    if (X.rows() != U.rows())
        throw dimension_error("fit_feature_map: X and U row counts differ (" +
                              std::to_string(X.rows()) + " vs " + std::to_string(U.rows()) + ")");
    if (alpha < 0.0 || beta < 0.0) throw value_error("alpha, beta must be nonnegative");
    if (settings.max_iterations < 1) throw value_error("max_iterations must be >= 1");
    if (!(settings.tolerance > 0.0)) throw value_error("tolerance must be positive");

    const Eigen::Index D = X.cols();
    FeatureMap map;
    map.alpha = alpha;
    map.beta = beta;
    map.R = correlation_penalty(U);

    const Eigen::MatrixXd xtx = X.transpose() * X;
    const Eigen::MatrixXd xtu = X.transpose() * U;
    const double lip = 2.0 * (xtx.norm() + alpha * map.R.norm());
    if (lip == 0.0)
        throw numerical_error("fit_feature_map: zero feature matrix, gradient step undefined");

    const double gamma = 1e-4 * xtx.trace() / static_cast<double>(D);
    const Eigen::MatrixXd z_init = detail::spd_solve(xtx, gamma, xtu, "fit_feature_map init");

    Eigen::MatrixXd z_prev = z_init;
    Eigen::MatrixXd z = z_init;
    const double f_init = feature_objective(X, U, z_init, map.R, alpha, beta);
    Eigen::MatrixXd best = z_init;
    double f_best = f_init;

    const double step = 1.0 / lip;
    const double threshold = beta / lip;
    double b_prev = 1.0, b = 1.0;

    for (int t = 0; t < settings.max_iterations; ++t) {
        const Eigen::MatrixXd extrapolated = z + ((b_prev - 1.0) / b) * (z - z_prev);
        Eigen::MatrixXd next = soft_threshold(
            extrapolated -
                step * (2.0 * (xtx * extrapolated - xtu) + 2.0 * alpha * (extrapolated * map.R)),
            threshold);
        if (next.hasNaN()) throw numerical_error("fit_feature_map: NaN in iterates");

        const double change = (next - z).norm() / (1.0 + z.norm());
        z_prev = std::move(z);
        z = std::move(next);
        b_prev = b;
        b = (1.0 + std::sqrt(1.0 + 4.0 * b * b)) / 2.0;

        if (settings.track_best) {
            const double f = feature_objective(X, U, z, map.R, alpha, beta);
            if (f < f_best) {
                f_best = f;
                best = z;
            }
        }
        if (change < settings.tolerance) break;
    }

    if (settings.track_best) {
        map.Z = std::move(best);
    } else if (feature_objective(X, U, z, map.R, alpha, beta) > f_init) {
        map.Z = z_init;
    } else {
        map.Z = std::move(z);
    }
    map.zero_entries = (map.Z.array() == 0.0).count();
    return map;
}

} // namespace grople
