#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "grople/error.hpp"
#include "grople/grouping.hpp"
#include "grople/rng.hpp"

namespace grople {

/// Inner-solver controls for the accelerated proximal gradient loop.
/// `gamma` is the ridge used only to initialize V^k; when unset it defaults
/// to lambda1 at the outer level (0 for standalone calls).
struct ApgSettings {
    int max_iterations = 500;
    double tolerance = 1e-5;
    std::optional<double> gamma;
    bool track_best = false;
};

struct FitSettings {
    ApgSettings apg;
    int max_outer_iterations = 50;
    double outer_tolerance = 1e-5;
};

/// Result of the alternating minimization: basis U (N x d), coefficients V
/// (d x L, columns in the original label order), the partition that defines
/// the per-group blocks, and the recorded outer objective values.
struct LabelEmbeddingModel {
    Eigen::MatrixXd U;
    Eigen::MatrixXd V;
    GroupPartition partition;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    int d = 0;
    std::vector<double> objective_history;
    std::uint64_t seed = 0;
};

namespace detail {

inline Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& M,
                                      const std::vector<Eigen::Index>& cols) {
    Eigen::MatrixXd out(M.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        out.col(static_cast<Eigen::Index>(j)) = M.col(cols[j]);
    return out;
}

inline void scatter_columns(Eigen::MatrixXd& M, const std::vector<Eigen::Index>& cols,
                            const Eigen::MatrixXd& block) {
    for (std::size_t j = 0; j < cols.size(); ++j)
        M.col(cols[j]) = block.col(static_cast<Eigen::Index>(j));
}

/// Solves (S + ridge I) X = B for symmetric positive semidefinite S.
inline Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& S, double ridge,
                                 const Eigen::MatrixXd& B, const char* context) {
    Eigen::MatrixXd lhs = S;
    lhs.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
    if (ldlt.info() != Eigen::Success)
        throw numerical_error(std::string(context) + ": LDLT factorization failed");
    if (ridge == 0.0) {
        const Eigen::VectorXd d = ldlt.vectorD();
        const double dmax = d.cwiseAbs().maxCoeff();
        const double tol = std::numeric_limits<double>::epsilon() *
                           static_cast<double>(lhs.rows()) * std::max(dmax, 1.0);
        if (dmax == 0.0 || d.cwiseAbs().minCoeff() <= tol)
            throw numerical_error(std::string(context) +
                                  ": singular system; use a positive ridge (lambda1 > 0)");
    }
    return ldlt.solve(B);
}

inline double l21_norm(const Eigen::MatrixXd& M) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) sum += M.row(i).norm();
    return sum;
}

} // namespace detail

/// Closed-form basis update U = Y V^T (V V^T + lambda1 I)^{-1}, computed via
/// a symmetric solve. With lambda1 = 0 a singular V V^T is rejected.
inline Eigen::MatrixXd update_basis(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& V,
                                    double lambda1) {
    if (V.cols() != Y.cols())
        throw dimension_error("update_basis: V has " + std::to_string(V.cols()) +
                              " columns, Y has " + std::to_string(Y.cols()));
    if (lambda1 < 0.0) throw value_error("lambda1 must be nonnegative");
    // (V V^T + l1 I) U^T = V Y^T, transposed afterwards.
    const Eigen::MatrixXd gram = V * V.transpose();
    const Eigen::MatrixXd Ut =
        detail::spd_solve(gram, lambda1, V * Y.transpose(), "update_basis");
    Eigen::MatrixXd U = Ut.transpose();

    const double residual = (2.0 * ((U * V - Y) * V.transpose() + lambda1 * U)).norm();
    if (!(residual <= 1e-8 * (1.0 + Y.norm()))) {
        if (lambda1 == 0.0)
            throw numerical_error(
                "update_basis: singular system; use a positive ridge (lambda1 > 0)");
        throw numerical_error("update_basis: solve did not reach first-order optimality");
    }
    return U;
}

/// Frobenius-norm Lipschitz bound ||2 U^T U||_F of the smooth gradient.
inline double lipschitz_constant(const Eigen::MatrixXd& U) {
    return 2.0 * (U.transpose() * U).norm();
}

/// Gradient of ||Y^k - U V^k||_F^2 in V^k.
inline Eigen::MatrixXd smooth_gradient(const Eigen::MatrixXd& U, const Eigen::MatrixXd& Yk,
                                       const Eigen::MatrixXd& Vk) {
    if (U.rows() != Yk.rows() || U.cols() != Vk.rows() || Vk.cols() != Yk.cols())
        throw dimension_error("smooth_gradient: U " + std::to_string(U.rows()) + "x" +
                              std::to_string(U.cols()) + ", Yk " + std::to_string(Yk.rows()) +
                              "x" + std::to_string(Yk.cols()) + ", Vk " +
                              std::to_string(Vk.rows()) + "x" + std::to_string(Vk.cols()) +
                              " do not conform");
    return 2.0 * (U.transpose() * (U * Vk) - U.transpose() * Yk);
}

/// Row-wise shrinkage v -> v (||v|| - t)_+ / ||v||, the prox of t ||.||_2
/// applied to each row. Zero rows stay zero.
inline Eigen::MatrixXd row_shrinkage(const Eigen::MatrixXd& M, double t) {
    if (t < 0.0) throw value_error("shrinkage threshold must be nonnegative");
    Eigen::MatrixXd out(M.rows(), M.cols());
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        const double norm = M.row(i).norm();
        if (norm <= t) {
            out.row(i).setZero();
        } else {
            out.row(i) = M.row(i) * ((norm - t) / norm);
        }
    }
    return out;
}

/// Per-group composite objective ||Yk - U Vk||_F^2 + lambda2 ||Vk||_{2,1}.
inline double group_objective(const Eigen::MatrixXd& U, const Eigen::MatrixXd& Yk,
                              const Eigen::MatrixXd& Vk, double lambda2) {
    return (Yk - U * Vk).squaredNorm() + lambda2 * detail::l21_norm(Vk);
}

/// Accelerated proximal gradient for one group block: FISTA momentum
/// b_t = (1 + sqrt(1 + 4 b_{t-1}^2)) / 2, step 1/L_g with the Frobenius
/// Lipschitz bound, prox = row shrinkage at lambda2/L_g. Initialized from
/// the ridge solution (U^T U + gamma I)^{-1} U^T Y^k; returns the last
/// iterate (or the best one seen when track_best is set), never one worse
/// than the initializer.
inline Eigen::MatrixXd apg_fit_group(const Eigen::MatrixXd& U, const Eigen::MatrixXd& Yk,
                                     double lambda2, const ApgSettings& settings = {}) {
    if (U.rows() != Yk.rows())
        throw dimension_error("apg_fit_group: U and Y^k row counts differ");
    if (lambda2 < 0.0) throw value_error("lambda2 must be nonnegative");
    if (settings.max_iterations < 1) throw value_error("max_iterations must be >= 1");
    if (!(settings.tolerance > 0.0)) throw value_error("tolerance must be positive");

    const double lip = lipschitz_constant(U);
    if (lip == 0.0)
        throw numerical_error("apg_fit_group: U is zero, so the gradient step is undefined");

    const double gamma = settings.gamma.value_or(0.0);
    if (gamma < 0.0) throw value_error("gamma must be nonnegative");

    const Eigen::MatrixXd gram = U.transpose() * U;
    const Eigen::MatrixXd uty = U.transpose() * Yk;
    const Eigen::MatrixXd v_init = detail::spd_solve(gram, gamma, uty, "apg_fit_group init");
    Eigen::MatrixXd v_prev = v_init;
    Eigen::MatrixXd v = v_init;

    const double f_init = group_objective(U, Yk, v_init, lambda2);
    Eigen::MatrixXd best = v_init;
    double f_best = f_init;

    const double step = 1.0 / lip;
    const double threshold = lambda2 / lip;
    double b_prev = 1.0, b = 1.0;

    for (int t = 0; t < settings.max_iterations; ++t) {
        const Eigen::MatrixXd extrapolated = v + ((b_prev - 1.0) / b) * (v - v_prev);
        Eigen::MatrixXd next = row_shrinkage(
            extrapolated - step * (2.0 * (gram * extrapolated - uty)), threshold);
        if (next.hasNaN())
            throw numerical_error("apg_fit_group: NaN in iterates");

        const double change = (next - v).norm() / (1.0 + v.norm());
        v_prev = std::move(v);
        v = std::move(next);
        b_prev = b;
        b = (1.0 + std::sqrt(1.0 + 4.0 * b * b)) / 2.0;

        if (settings.track_best) {
            const double f = group_objective(U, Yk, v, lambda2);
            if (f < f_best) {
                f_best = f;
                best = v;
            }
        }
        if (change < settings.tolerance) break;
    }

    if (settings.track_best) return best;
    // Never hand back an iterate worse than the initializer.
    if (group_objective(U, Yk, v, lambda2) > f_init) return v_init;
    return v;
}

/// Eq.-style objective: sum_k ||Y^k - U V^k||_F^2 + lambda1 ||U||_F^2
/// + lambda2 sum_k ||V^k||_{2,1}, with blocks taken from the partition.
inline double embedding_objective(const Eigen::MatrixXd& Y, const GroupPartition& partition,
                                  const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                                  double lambda1, double lambda2) {
    if (static_cast<Eigen::Index>(partition.assignment.size()) != Y.cols())
        throw dimension_error("partition size does not match label count");
    if (U.rows() != Y.rows() || U.cols() != V.rows() || V.cols() != Y.cols())
        throw dimension_error("embedding_objective: U/V/Y shapes do not conform");

    double value = (Y - U * V).squaredNorm() + lambda1 * U.squaredNorm();
    for (const auto& cols : partition.members())
        value += lambda2 * detail::l21_norm(detail::gather_columns(V, cols));
    return value;
}

/// Alternating minimization for the group-sparse label embedding: per-group
/// APG updates of V^k followed by the closed-form U update, repeated until
/// the relative objective change drops below the outer tolerance.
inline LabelEmbeddingModel fit_label_embedding(const Eigen::MatrixXd& Y,
                                               const GroupPartition& partition, int d,
                                               double lambda1, double lambda2,
                                               const FitSettings& settings, std::uint64_t seed) {
    if (d < 1) throw value_error("latent dimension d must be >= 1");
    if (lambda1 < 0.0 || lambda2 < 0.0) throw value_error("lambda1, lambda2 must be nonnegative");
    if (static_cast<Eigen::Index>(partition.assignment.size()) != Y.cols())
        throw dimension_error("partition size does not match label count");

    const Eigen::Index N = Y.rows();
    const Eigen::Index L = Y.cols();
    const auto groups = partition.members();

    ApgSettings apg = settings.apg;
    if (!apg.gamma) apg.gamma = lambda1;

    LabelEmbeddingModel model;
    model.partition = partition;
    model.lambda1 = lambda1;
    model.lambda2 = lambda2;
    model.d = d;
    model.seed = seed;

    // Seeded standard-normal init. A tiny scale (e.g. 0.01) would make
    // every row of 2 U^T Y^k fall under the shrinkage threshold at
    // lambda2 = 1, collapsing the very first V update to zero.
    Rng rng(mix_seed(seed, 0x656d6264)); // "embd"
    model.U = gaussian_matrix(N, d, 1.0, rng);
    model.V = Eigen::MatrixXd::Zero(d, L);

    std::vector<Eigen::MatrixXd> blocks(groups.size());
    bool have_blocks = false;
    double f_prev = std::numeric_limits<double>::infinity();

    for (int outer = 0; outer < settings.max_outer_iterations; ++outer) {
        for (std::size_t k = 0; k < groups.size(); ++k) {
            const Eigen::MatrixXd Yk = detail::gather_columns(Y, groups[k]);
            Eigen::MatrixXd Vk = apg_fit_group(model.U, Yk, lambda2, apg);
            if (have_blocks &&
                group_objective(model.U, Yk, Vk, lambda2) >
                    group_objective(model.U, Yk, blocks[k], lambda2)) {
                Vk = blocks[k];
            }
            blocks[k] = std::move(Vk);
            detail::scatter_columns(model.V, groups[k], blocks[k]);
        }
        have_blocks = true;

        model.U = update_basis(Y, model.V, lambda1);

        const double f = embedding_objective(Y, partition, model.U, model.V, lambda1, lambda2);
        model.objective_history.push_back(f);
        // A huge lambda2 can legitimately zero V (and with it U); the fit is
        // then at the degenerate stationary point and cannot move.
        if (model.U.isZero(0.0)) break;
        if (std::isfinite(f_prev) &&
            std::abs(f_prev - f) < settings.outer_tolerance * (1.0 + std::abs(f_prev)))
            break;
        f_prev = f;
    }
    return model;
}

/// Nonzero-row mask of each group block: group_index,row_index,is_nonzero,
/// where a row counts as nonzero when its 2-norm exceeds 1e-8.
inline void write_sparsity_csv(std::ostream& out, const Eigen::MatrixXd& V,
                               const GroupPartition& partition) {
    if (static_cast<Eigen::Index>(partition.assignment.size()) != V.cols())
        throw dimension_error("partition size does not match V column count");
    out << "group_index,row_index,is_nonzero\n";
    const auto groups = partition.members();
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const Eigen::MatrixXd block = detail::gather_columns(V, groups[k]);
        for (Eigen::Index r = 0; r < block.rows(); ++r)
            out << k << "," << r << "," << (block.row(r).norm() > 1e-8 ? 1 : 0) << "\n";
    }
}

} // namespace grople
