#include <limits>

#include <catch2/catch_amalgamated.hpp>

#include "grople/metrics.hpp"
#include "support.hpp"

using namespace grople;

namespace {

Eigen::MatrixXd rowvec(std::initializer_list<double> vals) {
    Eigen::MatrixXd m(1, static_cast<Eigen::Index>(vals.size()));
    Eigen::Index j = 0;
    for (double v : vals) m(0, j++) = v;
    return m;
}

} // namespace

TEST_CASE("accuracy: hand values and conventions") {
    CHECK(accuracy(rowvec({1, -1, 1}), rowvec({1, 1, -1})) == 1.0 / 3.0);
    const Eigen::MatrixXd Y = testsupport::random_sign_matrix(12, 5, 1);
    CHECK(accuracy(Y, Y) == 1.0);
    CHECK(accuracy(rowvec({-1, -1}), rowvec({-1, -1})) == 1.0);

    MetricOptions skip;
    skip.empty_instance = EmptyInstancePolicy::skip;
    Eigen::MatrixXd Y2(2, 2), Yhat2(2, 2);
    Y2 << 1, -1, -1, -1;
    Yhat2 << 1, 1, -1, -1;
    CHECK(accuracy(Y2, Yhat2) == 0.75);      // (1/2 + 1) / 2
    CHECK(accuracy(Y2, Yhat2, skip) == 0.5); // degenerate second instance dropped
}

TEST_CASE("example F1: hand values and conventions") {
    CHECK(example_f1(rowvec({1, -1, 1}), rowvec({1, 1, -1})) == 0.5);
    const Eigen::MatrixXd Y = testsupport::random_sign_matrix(10, 4, 2);
    CHECK(example_f1(Y, Y) == 1.0);
    // actual positives but nothing predicted -> 0 for that instance
    CHECK(example_f1(rowvec({1, 1}), rowvec({-1, -1})) == 0.0);
    CHECK(example_f1(rowvec({-1, -1}), rowvec({-1, -1})) == 1.0);
}

TEST_CASE("macro F1: degenerate labels contribute zero by default") {
    Eigen::MatrixXd Y(2, 2), Yhat(2, 2);
    Y << 1, -1, -1, -1;
    Yhat << 1, -1, -1, -1;
    CHECK(macro_f1(Y, Yhat) == 0.5);

    MetricOptions skip;
    skip.empty_label = EmptyLabelPolicy::skip;
    CHECK(macro_f1(Y, Yhat, skip) == 1.0);

    // all predictions wrong-signed -> 0
    const Eigen::MatrixXd S = testsupport::random_sign_matrix(8, 3, 3);
    CHECK(macro_f1(S, (-S).eval()) == 0.0);
    // perfect nontrivial prediction with every label populated -> 1
    Eigen::MatrixXd P(2, 2);
    P << 1, 1, -1, 1;
    CHECK(macro_f1(P, P) == 1.0);
}

TEST_CASE("micro F1: hand value, perfect and all-negative cases") {
    Eigen::MatrixXd Y(2, 2), Yhat(2, 2);
    Y << 1, -1, -1, 1;
    Yhat << 1, 1, -1, -1;
    CHECK(micro_f1(Y, Yhat) == 0.5);
    const Eigen::MatrixXd S = testsupport::random_sign_matrix(9, 6, 4);
    CHECK(micro_f1(S, S) == 1.0);
    CHECK(micro_f1(Eigen::MatrixXd::Constant(3, 3, -1.0),
                   Eigen::MatrixXd::Constant(3, 3, -1.0)) == 1.0);
}

TEST_CASE("metrics reject shape mismatches") {
    CHECK_THROWS_AS(accuracy(Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Ones(2, 3)),
                    dimension_error);
    CHECK_THROWS_AS(micro_f1(Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Ones(3, 2)),
                    dimension_error);
}

TEST_CASE("metrics are invariant under identical column permutations") {
    const Eigen::MatrixXd Y = testsupport::random_sign_matrix(15, 6, 5);
    const Eigen::MatrixXd Yhat = testsupport::random_sign_matrix(15, 6, 6);
    std::vector<Eigen::Index> perm{3, 0, 5, 1, 4, 2};
    Eigen::MatrixXd Yp(15, 6), Yhp(15, 6);
    for (Eigen::Index j = 0; j < 6; ++j) {
        Yp.col(j) = Y.col(perm[static_cast<std::size_t>(j)]);
        Yhp.col(j) = Yhat.col(perm[static_cast<std::size_t>(j)]);
    }
    CHECK(accuracy(Y, Yhat) == Catch::Approx(accuracy(Yp, Yhp)).epsilon(1e-14));
    CHECK(example_f1(Y, Yhat) == Catch::Approx(example_f1(Yp, Yhp)).epsilon(1e-14));
    CHECK(macro_f1(Y, Yhat) == Catch::Approx(macro_f1(Yp, Yhp)).epsilon(1e-14));
    CHECK(micro_f1(Y, Yhat) == micro_f1(Yp, Yhp));
}

TEST_CASE("example F1 equals accuracy on single-positive instances") {
    grople::Rng rng(17);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Constant(30, 5, -1.0);
    Eigen::MatrixXd Yhat = Y;
    for (Eigen::Index i = 0; i < 30; ++i) {
        Y(i, static_cast<Eigen::Index>(rng.index(5))) = 1.0;
        Yhat(i, static_cast<Eigen::Index>(rng.index(5))) = 1.0;
    }
    CHECK(accuracy(Y, Yhat) == example_f1(Y, Yhat));
}

TEST_CASE("micro F1 stays in [0, 1] on random inputs") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto Y = testsupport::random_sign_matrix(7, 4, 100 + s);
        const auto Yh = testsupport::random_sign_matrix(7, 4, 200 + s);
        const double v = micro_f1(Y, Yh);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("average ranks use mid-rank ties") {
    Eigen::MatrixXd scores(3, 1);
    scores << 0.9, 0.7, 0.7;
    const auto table = average_ranks(scores, {"a", "b", "c"}, true);
    CHECK(table.ranks(0, 0) == 1.0);
    CHECK(table.ranks(1, 0) == 2.5);
    CHECK(table.ranks(2, 0) == 2.5);
}

TEST_CASE("full ties give everyone (K+1)/2 and rank sums are exact") {
    Eigen::MatrixXd scores = Eigen::MatrixXd::Constant(4, 3, 0.5);
    const auto table = average_ranks(scores, {}, true);
    for (Eigen::Index m = 0; m < 4; ++m)
        for (Eigen::Index d = 0; d < 3; ++d) CHECK(table.ranks(m, d) == 2.5);

    for (std::uint64_t s = 0; s < 10; ++s) {
        Eigen::MatrixXd random = testsupport::random_matrix(5, 4, 300 + s);
        // introduce ties
        random(1, 0) = random(0, 0);
        random(4, 2) = random(2, 2);
        const auto t = average_ranks(random, {}, s % 2 == 0);
        for (Eigen::Index d = 0; d < 4; ++d)
            CHECK(t.ranks.col(d).sum() == 15.0); // 5*6/2, exact in halves
    }
}

TEST_CASE("missing score cells are rejected") {
    Eigen::MatrixXd scores(2, 2);
    scores << 1.0, 0.5, 0.25, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(average_ranks(scores, {}, true), value_error);
}

TEST_CASE("Friedman statistic: no-effect and hand cases") {
    Eigen::MatrixXd equal = Eigen::MatrixXd::Constant(3, 4, 1.0);
    const auto t0 = average_ranks(equal, {}, true);
    const auto f0 = friedman_statistic(t0);
    CHECK(f0.chi2 == 0.0);
    REQUIRE(f0.ff.has_value());
    CHECK(*f0.ff == 0.0);

    // K=2, N=4, method A always best: chi2 = 4 and the Iman-Davenport
    // denominator N(K-1) - chi2 collapses to zero.
    Eigen::MatrixXd scores(2, 4);
    scores << 1, 1, 1, 1, 0, 0, 0, 0;
    const auto t1 = average_ranks(scores, {"A", "B"}, true);
    const auto f1 = friedman_statistic(t1);
    CHECK(f1.chi2 == 4.0);
    CHECK_FALSE(f1.ff.has_value());
    CHECK_THROWS_AS(friedman_statistic_strict(t1), value_error);
}

TEST_CASE("Nemenyi critical difference") {
    CHECK(nemenyi_cd(8, 11, 3.031) == Catch::Approx(3.1658).margin(1e-4));
    CHECK(nemenyi_cd(5, 3, 0.0) == 0.0);
    CHECK(nemenyi_cd(2, 6, 1.0) == Catch::Approx(0.40825).margin(1e-5));
    CHECK(nemenyi_q05(8) == 3.031);
    CHECK_THROWS_AS(nemenyi_q05(11), value_error);
}
