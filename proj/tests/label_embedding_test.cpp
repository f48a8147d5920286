#include <cmath>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "grople/label_embedding.hpp"
#include "support.hpp"

using namespace grople;

namespace {

GroupPartition trivial_partition(Eigen::Index L) {
    GroupPartition p;
    p.group_count = 1;
    p.assignment.assign(static_cast<std::size_t>(L), 0);
    return p;
}

GroupPartition split_partition(Eigen::Index L, Eigen::Index first_group) {
    GroupPartition p;
    p.group_count = 2;
    for (Eigen::Index j = 0; j < L; ++j) p.assignment.push_back(j < first_group ? 0 : 1);
    return p;
}

} // namespace

TEST_CASE("update_basis: identity coefficient matrix returns Y") {
    const Eigen::MatrixXd Y = testsupport::random_matrix(6, 4, 1);
    const Eigen::MatrixXd U = update_basis(Y, Eigen::MatrixXd::Identity(4, 4), 0.0);
    CHECK(testsupport::relative_error(U, Y) < 1e-12);
}

TEST_CASE("update_basis: scalar hand case 2*1/(1+1) = 1") {
    Eigen::MatrixXd Y(1, 1), V(1, 1);
    Y << 2.0;
    V << 1.0;
    const Eigen::MatrixXd U = update_basis(Y, V, 1.0);
    CHECK(U(0, 0) == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("update_basis: gradient residual below the stated bound") {
    for (std::uint64_t s = 0; s < 25; ++s) {
        grople::Rng rng(1000 + s);
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.index(10));
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.index(8));
        const Eigen::Index l = 1 + static_cast<Eigen::Index>(rng.index(8));
        const Eigen::MatrixXd Y = testsupport::random_matrix(n, l, 2000 + s);
        const Eigen::MatrixXd V = testsupport::random_matrix(d, l, 3000 + s);
        const double lambda1 = s % 3 == 0 ? 0.0 : 0.05 * static_cast<double>(s);
        if (lambda1 == 0.0 && d > l) continue; // V V^T necessarily singular
        const Eigen::MatrixXd U = update_basis(Y, V, lambda1);
        const double residual = (2.0 * ((U * V - Y) * V.transpose() + lambda1 * U)).norm();
        CHECK(residual <= 1e-8 * (1.0 + Y.norm()));
    }
}

TEST_CASE("update_basis: singular system with lambda1 = 0 is rejected") {
    Eigen::MatrixXd V(2, 2);
    V << 1, 1, 0, 0; // rank 1
    const Eigen::MatrixXd Y = testsupport::random_matrix(3, 2, 4);
    try {
        update_basis(Y, V, 0.0);
        FAIL("expected numerical_error");
    } catch (const numerical_error& e) {
        CHECK(std::string(e.what()).find("lambda1 > 0") != std::string::npos);
    }
}

TEST_CASE("lipschitz_constant: zero, hand value, quadratic scaling") {
    CHECK(lipschitz_constant(Eigen::MatrixXd::Zero(3, 2)) == 0.0);
    CHECK(lipschitz_constant(Eigen::MatrixXd::Identity(2, 2)) ==
          Catch::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-14));
    CHECK(lipschitz_constant(Eigen::MatrixXd::Identity(2, 2)) ==
          Catch::Approx(2.828427).margin(1e-6));
    const Eigen::MatrixXd U = testsupport::random_matrix(5, 3, 5);
    CHECK(lipschitz_constant(3.0 * U) == Catch::Approx(9.0 * lipschitz_constant(U)));
}

TEST_CASE("smooth_gradient: stationarity, hand value, shape check") {
    const Eigen::MatrixXd U = testsupport::random_matrix(6, 3, 6);
    const Eigen::MatrixXd Yk = testsupport::random_matrix(6, 4, 7);
    const Eigen::MatrixXd Vk = detail::spd_solve(U.transpose() * U, 0.0, U.transpose() * Yk,
                                                 "test");
    CHECK(smooth_gradient(U, Yk, Vk).norm() < 1e-10);

    Eigen::MatrixXd u1(1, 1), y1(1, 1), v1(1, 1);
    u1 << 1.0;
    y1 << 1.0;
    v1 << 0.0;
    CHECK(smooth_gradient(u1, y1, v1)(0, 0) == -2.0);

    CHECK_THROWS_AS(smooth_gradient(U, Yk, Eigen::MatrixXd::Zero(2, 4)), dimension_error);
}

TEST_CASE("smooth_gradient matches central finite differences") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Eigen::MatrixXd U = testsupport::random_matrix(3, 3, 5000 + s);
        const Eigen::MatrixXd Yk = testsupport::random_matrix(3, 4, 6000 + s);
        const Eigen::MatrixXd Vk = testsupport::random_matrix(3, 4, 7000 + s);
        const auto f = [&](const Eigen::MatrixXd& V) { return (Yk - U * V).squaredNorm(); };
        const Eigen::MatrixXd fd = testsupport::finite_difference_gradient(f, Vk);
        CHECK(testsupport::relative_error(smooth_gradient(U, Yk, Vk), fd) < 1e-5);
    }
    // and on sizes up to 8x8
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Eigen::MatrixXd U = testsupport::random_matrix(8, 8, 8000 + s);
        const Eigen::MatrixXd Yk = testsupport::random_matrix(8, 8, 8100 + s);
        const Eigen::MatrixXd Vk = testsupport::random_matrix(8, 8, 8200 + s);
        const auto f = [&](const Eigen::MatrixXd& V) { return (Yk - U * V).squaredNorm(); };
        const Eigen::MatrixXd fd = testsupport::finite_difference_gradient(f, Vk);
        CHECK(testsupport::relative_error(smooth_gradient(U, Yk, Vk), fd) < 1e-4);
    }
}

TEST_CASE("row_shrinkage: hand row, clamp, identity") {
    Eigen::MatrixXd M(1, 2);
    M << 3.0, 4.0;
    const Eigen::MatrixXd S = row_shrinkage(M, 1.0);
    CHECK(S(0, 0) == Catch::Approx(2.4).epsilon(1e-14));
    CHECK(S(0, 1) == Catch::Approx(3.2).epsilon(1e-14));

    CHECK(row_shrinkage(M, 5.0).isZero(0.0));
    CHECK(row_shrinkage(M, 6.0).isZero(0.0));
    CHECK(row_shrinkage(M, 0.0) == M);
    CHECK(row_shrinkage(Eigen::MatrixXd::Zero(2, 3), 1.0).isZero(0.0));
}

TEST_CASE("row_shrinkage satisfies the prox subgradient condition") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        grople::Rng rng(9000 + s);
        const Eigen::MatrixXd M = testsupport::random_matrix(4, 3, 9100 + s, 2.0);
        const double t = rng.real() * 2.0;
        const Eigen::MatrixXd W = row_shrinkage(M, t);
        for (Eigen::Index i = 0; i < M.rows(); ++i) {
            const Eigen::RowVectorXd w = W.row(i);
            const Eigen::RowVectorXd m = M.row(i);
            if (w.norm() > 0.0) {
                // 0 = t*w/||w|| + (w - m)
                const Eigen::RowVectorXd resid = t * w / w.norm() + (w - m);
                CHECK(resid.norm() < 1e-9);
            } else {
                // 0 in subdifferential iff ||m|| <= t
                CHECK(m.norm() <= t + 1e-12);
            }
        }
    }
}

TEST_CASE("row_shrinkage matches the dense 2-vector grid oracle") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        grople::Rng rng(9500 + s);
        Eigen::MatrixXd M(1, 2);
        M << 4.0 * (rng.real() - 0.5), 4.0 * (rng.real() - 0.5);
        const double t = rng.real();
        const Eigen::Vector2d oracle = testsupport::prox_l2_grid(M.row(0).transpose(), t, 201);
        const Eigen::MatrixXd got = row_shrinkage(M, t);
        const double grid_step = 2.0 * (M.row(0).norm() + t + 1.0) / 200.0;
        CHECK(std::abs(got(0, 0) - oracle(0)) <= grid_step);
        CHECK(std::abs(got(0, 1) - oracle(1)) <= grid_step);
    }
}

TEST_CASE("apg_fit_group with lambda2 = 0 matches the normal equations") {
    const Eigen::MatrixXd U = testsupport::random_matrix(10, 4, 10);
    const Eigen::MatrixXd Yk = testsupport::random_matrix(10, 5, 11);
    const Eigen::MatrixXd direct =
        detail::spd_solve(U.transpose() * U, 0.0, U.transpose() * Yk, "oracle");
    ApgSettings settings;
    settings.gamma = 0.0;
    const Eigen::MatrixXd got = apg_fit_group(U, Yk, 0.0, settings);
    CHECK((got - direct).norm() < 1e-4);
}

TEST_CASE("apg_fit_group: large lambda2 zeroes every row") {
    const Eigen::MatrixXd U = testsupport::random_matrix(8, 3, 12);
    const Eigen::MatrixXd Yk = testsupport::random_sign_matrix(8, 4, 13);
    const Eigen::MatrixXd uty = U.transpose() * Yk;
    double row_max = 0.0;
    for (Eigen::Index i = 0; i < uty.rows(); ++i) row_max = std::max(row_max, uty.row(i).norm());
    ApgSettings settings;
    settings.gamma = 0.0;
    const Eigen::MatrixXd got = apg_fit_group(U, Yk, 2.0 * row_max * 10.0, settings);
    CHECK(got.isZero(0.0));
}

TEST_CASE("apg_fit_group never returns an iterate worse than its initializer") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        grople::Rng rng(11000 + s);
        const Eigen::MatrixXd U = testsupport::random_matrix(7, 3, 11100 + s);
        const Eigen::MatrixXd Yk = testsupport::random_matrix(7, 4, 11200 + s);
        const double lambda2 = 3.0 * rng.real();
        ApgSettings settings;
        settings.gamma = 0.1;
        const Eigen::MatrixXd init =
            detail::spd_solve(U.transpose() * U, 0.1, U.transpose() * Yk, "init");
        const Eigen::MatrixXd got = apg_fit_group(U, Yk, lambda2, settings);
        CHECK(group_objective(U, Yk, got, lambda2) <=
              group_objective(U, Yk, init, lambda2) + 1e-10);
    }
}

TEST_CASE("apg_fit_group rejects a zero basis and NaN inputs") {
    const Eigen::MatrixXd Yk = testsupport::random_matrix(4, 2, 14);
    CHECK_THROWS_AS(apg_fit_group(Eigen::MatrixXd::Zero(4, 2), Yk, 1.0), numerical_error);
}

TEST_CASE("objective: hand values") {
    const Eigen::MatrixXd Y = testsupport::random_sign_matrix(5, 4, 15);
    const auto part = trivial_partition(4);
    CHECK(embedding_objective(Y, part, Eigen::MatrixXd::Zero(5, 2),
                              Eigen::MatrixXd::Zero(2, 4), 0.0, 0.0) == Y.squaredNorm());

    // exact factorization with no regularization
    Eigen::MatrixXd U(2, 1), V(1, 2);
    U << 1, -1;
    V << 1, -1;
    Eigen::MatrixXd Y2 = U * V;
    CHECK(embedding_objective(Y2, trivial_partition(2), U, V, 0.0, 0.0) == 0.0);

    // 2x2 hand instance: 0 + 1*2 + 1*sqrt(2)
    CHECK(embedding_objective(Y2, trivial_partition(2), U, V, 1.0, 1.0) ==
          Catch::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-14));
    CHECK(embedding_objective(Y2, trivial_partition(2), U, V, 1.0, 1.0) ==
          Catch::Approx(3.414214).margin(1e-6));
}

TEST_CASE("objective: partition-consistency of the l21 term") {
    // Evaluating per-group blocks equals the scattered-V evaluation exactly.
    const Eigen::MatrixXd Y = testsupport::random_matrix(6, 5, 16);
    const Eigen::MatrixXd U = testsupport::random_matrix(6, 3, 17);
    const Eigen::MatrixXd V = testsupport::random_matrix(3, 5, 18);
    GroupPartition part;
    part.group_count = 2;
    part.assignment = {0, 1, 0, 1, 1};

    double manual = (Y - U * V).squaredNorm() + 0.7 * U.squaredNorm();
    for (const auto& cols : part.members()) {
        const Eigen::MatrixXd block = detail::gather_columns(V, cols);
        double row_norm_sum = 0.0;
        for (Eigen::Index r = 0; r < block.rows(); ++r) row_norm_sum += block.row(r).norm();
        manual += 1.3 * row_norm_sum;
    }
    CHECK(embedding_objective(Y, part, U, V, 0.7, 1.3) == manual);
}

TEST_CASE("fit_label_embedding: exact recovery at full rank (SVD oracle)") {
    const Eigen::MatrixXd A = testsupport::random_matrix(30, 3, 19);
    const Eigen::MatrixXd B = testsupport::random_matrix(3, 10, 20);
    const Eigen::MatrixXd Y = A * B; // rank 3
    CHECK(testsupport::truncated_svd_error(Y, 3) < 1e-10);

    const auto model = fit_label_embedding(Y, trivial_partition(10), 3, 0.0, 0.0, {}, 7);
    const double rel = (Y - model.U * model.V).norm() / Y.norm();
    CHECK(rel < 1e-3);
    CHECK(testsupport::history_non_increasing(model.objective_history));
}

TEST_CASE("fit_label_embedding: paper defaults are accepted") {
    const Eigen::MatrixXd Y = testsupport::random_sign_matrix(40, 12, 21);
    const auto part = split_partition(12, 6);
    const auto model = fit_label_embedding(Y, part, 100, 0.001, 1.0, {}, 3);
    CHECK(model.U.rows() == 40);
    CHECK(model.U.cols() == 100);
    CHECK(model.V.rows() == 100);
    CHECK(model.V.cols() == 12);
    CHECK(testsupport::history_non_increasing(model.objective_history));
}

TEST_CASE("fit_label_embedding: all-(-1) labels with large lambda2 go row-sparse") {
    const Eigen::MatrixXd Y = Eigen::MatrixXd::Constant(6, 4, -1.0);
    // Sweep lambda2: the number of nonzero rows of V must not increase, and
    // a large lambda2 leaves at most one active row (rank-1 structure).
    Eigen::Index last_nonzero = 100;
    for (const double lambda2 : {0.1, 1.0, 8.0}) {
        const auto model = fit_label_embedding(Y, trivial_partition(4), 4, 0.01, lambda2, {}, 5);
        Eigen::Index nonzero = 0;
        for (Eigen::Index r = 0; r < model.V.rows(); ++r)
            if (model.V.row(r).norm() > 1e-8) ++nonzero;
        CHECK(nonzero <= last_nonzero);
        last_nonzero = nonzero;
        CHECK(testsupport::history_non_increasing(model.objective_history));
    }
    CHECK(last_nonzero <= 1);
}

TEST_CASE("fit_label_embedding: monotone objective on random instances") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Eigen::MatrixXd Y = testsupport::random_sign_matrix(15, 6, 12000 + s);
        const auto model =
            fit_label_embedding(Y, split_partition(6, 3), 4, 0.01, 0.5, {}, 13000 + s);
        CHECK(testsupport::history_non_increasing(model.objective_history));
    }
}

TEST_CASE("fit_label_embedding is deterministic in the seed") {
    const Eigen::MatrixXd Y = testsupport::random_sign_matrix(12, 5, 22);
    const auto a = fit_label_embedding(Y, split_partition(5, 2), 3, 0.01, 0.3, {}, 99);
    const auto b = fit_label_embedding(Y, split_partition(5, 2), 3, 0.01, 0.3, {}, 99);
    CHECK(a.U == b.U);
    CHECK(a.V == b.V);
    CHECK(a.objective_history == b.objective_history);
}

TEST_CASE("sparsity mask export emits one section per group") {
    Eigen::MatrixXd V(3, 4);
    V << 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 2, 2;
    GroupPartition part;
    part.group_count = 2;
    part.assignment = {0, 0, 1, 1};
    std::ostringstream out;
    write_sparsity_csv(out, V, part);
    const std::string expect =
        "group_index,row_index,is_nonzero\n"
        "0,0,1\n0,1,0\n0,2,0\n"
        "1,0,0\n1,1,0\n1,2,1\n";
    CHECK(out.str() == expect);
}
