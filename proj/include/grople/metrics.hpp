#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "grople/error.hpp"

namespace grople {

/// The per-instance metrics are 0/0-undefined when both the actual and the
/// predicted positive sets are empty; per-label F1 is undefined when a label
/// never occurs and is never predicted. The defaults below reward exact
/// agreement on instances (count as 1) and ignore dead labels (count as 0);
/// `skip` drops the degenerate rows/columns from the average instead.
enum class EmptyInstancePolicy { score_one, skip };
enum class EmptyLabelPolicy { zero, skip };

struct MetricOptions {
    EmptyInstancePolicy empty_instance = EmptyInstancePolicy::score_one;
    EmptyLabelPolicy empty_label = EmptyLabelPolicy::zero;
};

struct MetricReport {
    double accuracy = 0.0;
    double example_f1 = 0.0;
    double macro_f1 = 0.0;
    double micro_f1 = 0.0;
    Eigen::Index n_test = 0;
    Eigen::Index n_labels = 0;
};

namespace detail {

inline void check_label_matrices(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& Yhat) {
    if (Y.rows() != Yhat.rows() || Y.cols() != Yhat.cols())
        throw dimension_error("label matrices are " + std::to_string(Y.rows()) + "x" +
                              std::to_string(Y.cols()) + " vs " + std::to_string(Yhat.rows()) +
                              "x" + std::to_string(Yhat.cols()));
}

} // namespace detail

/// Mean over instances of |y AND yhat| / |y OR yhat| on the positive sets.
inline double accuracy(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& Yhat,
                       const MetricOptions& opts = {}) {
    detail::check_label_matrices(Y, Yhat);
    double sum = 0.0;
    Eigen::Index counted = 0;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        int inter = 0, uni = 0;
        for (Eigen::Index j = 0; j < Y.cols(); ++j) {
            const bool a = Y(i, j) > 0, p = Yhat(i, j) > 0;
            inter += (a && p);
            uni += (a || p);
        }
        if (uni == 0) {
            if (opts.empty_instance == EmptyInstancePolicy::skip) continue;
            sum += 1.0;
        } else {
            sum += static_cast<double>(inter) / static_cast<double>(uni);
        }
        ++counted;
    }
    return counted == 0 ? 1.0 : sum / static_cast<double>(counted);
}

/// Mean over instances of the per-example F1 = 2TP/(2TP+FP+FN).
inline double example_f1(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& Yhat,
                         const MetricOptions& opts = {}) {
    detail::check_label_matrices(Y, Yhat);
    double sum = 0.0;
    Eigen::Index counted = 0;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        int tp = 0, fp = 0, fn = 0;
        for (Eigen::Index j = 0; j < Y.cols(); ++j) {
            const bool a = Y(i, j) > 0, p = Yhat(i, j) > 0;
            tp += (a && p);
            fp += (!a && p);
            fn += (a && !p);
        }
        if (tp + fp + fn == 0) {
            if (opts.empty_instance == EmptyInstancePolicy::skip) continue;
            sum += 1.0;
        } else {
            sum += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
        }
        ++counted;
    }
    return counted == 0 ? 1.0 : sum / static_cast<double>(counted);
}

/// Mean over labels of the per-label F1 = 2TP/(2TP+FP+FN).
inline double macro_f1(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& Yhat,
                       const MetricOptions& opts = {}) {
    detail::check_label_matrices(Y, Yhat);
    double sum = 0.0;
    Eigen::Index counted = 0;
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
        int tp = 0, fp = 0, fn = 0;
        for (Eigen::Index i = 0; i < Y.rows(); ++i) {
            const bool a = Y(i, j) > 0, p = Yhat(i, j) > 0;
            tp += (a && p);
            fp += (!a && p);
            fn += (a && !p);
        }
        if (tp + fp + fn == 0) {
            if (opts.empty_label == EmptyLabelPolicy::skip) continue;
            // contributes 0
        } else {
            sum += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
        }
        ++counted;
    }
    return counted == 0 ? 1.0 : sum / static_cast<double>(counted);
}

/// F1 with TP/FP/FN pooled over every (instance, label) cell.
inline double micro_f1(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& Yhat,
                       const MetricOptions& = {}) {
    detail::check_label_matrices(Y, Yhat);
    long tp = 0, fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        for (Eigen::Index j = 0; j < Y.cols(); ++j) {
            const bool a = Y(i, j) > 0, p = Yhat(i, j) > 0;
            tp += (a && p);
            fp += (!a && p);
            fn += (a && !p);
        }
    }
    const long denom = 2 * tp + fp + fn;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

inline MetricReport evaluate_all(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& Yhat,
                                 const MetricOptions& opts = {}) {
    MetricReport r;
    r.accuracy = accuracy(Y, Yhat, opts);
    r.example_f1 = example_f1(Y, Yhat, opts);
    r.macro_f1 = macro_f1(Y, Yhat, opts);
    r.micro_f1 = micro_f1(Y, Yhat, opts);
    r.n_test = Y.rows();
    r.n_labels = Y.cols();
    return r;
}

// --- Rank aggregation and comparison statistics. ---

/// Scores and derived ranks for `methods x datasets` comparisons. Ranks are
/// per dataset with 1 = best; ties get the mean of the tied positions, so
/// each dataset's ranks sum to K(K+1)/2 exactly.
struct RankTable {
    std::vector<std::string> methods;
    Eigen::MatrixXd scores;        // methods x datasets
    Eigen::MatrixXd ranks;         // methods x datasets
    Eigen::VectorXd average_ranks; // per method
    int method_count = 0;
    int dataset_count = 0;
};

inline RankTable average_ranks(const Eigen::MatrixXd& scores,
                               std::vector<std::string> methods, bool higher_is_better) {
    const int K = static_cast<int>(scores.rows());
    const int N = static_cast<int>(scores.cols());
    if (K < 2) throw value_error("rank aggregation needs at least 2 methods");
    if (N < 1) throw value_error("rank aggregation needs at least 1 dataset");
    if (!methods.empty() && static_cast<int>(methods.size()) != K)
        throw dimension_error("method name count does not match score rows");
    if (!scores.allFinite()) throw value_error("score table has a missing or non-finite cell");

    RankTable table;
    table.methods = std::move(methods);
    table.scores = scores;
    table.ranks.resize(K, N);
    table.method_count = K;
    table.dataset_count = N;

    std::vector<int> order(static_cast<std::size_t>(K));
    for (int d = 0; d < N; ++d) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double sa = scores(a, d), sb = scores(b, d);
            if (sa != sb) return higher_is_better ? sa > sb : sa < sb;
            return a < b;
        });
        int i = 0;
        while (i < K) {
            int j = i;
            while (j + 1 < K && scores(order[j + 1], d) == scores(order[i], d)) ++j;
            const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (int t = i; t <= j; ++t) table.ranks(order[t], d) = mid;
            i = j + 1;
        }
    }
    table.average_ranks = table.ranks.rowwise().mean();
    return table;
}

struct FriedmanResult {
    double chi2 = 0.0;        // Friedman chi-squared statistic
    std::optional<double> ff; // Iman-Davenport F statistic; empty when N(K-1) == chi2
};

inline FriedmanResult friedman_statistic(const RankTable& table) {
    const int K = table.method_count;
    const int N = table.dataset_count;
    if (K < 2 || N < 2)
        throw value_error("Friedman test needs >= 2 methods and >= 2 datasets");
    const double sum_r2 = table.average_ranks.array().square().sum();
    FriedmanResult res;
    res.chi2 = 12.0 * N / (K * (K + 1.0)) * (sum_r2 - K * (K + 1.0) * (K + 1.0) / 4.0);
    const double denom = N * (K - 1.0) - res.chi2;
    if (denom != 0.0) res.ff = (N - 1.0) * res.chi2 / denom;
    return res;
}

/// As above but requires a usable F statistic.
inline std::pair<double, double> friedman_statistic_strict(const RankTable& table) {
    const FriedmanResult res = friedman_statistic(table);
    if (!res.ff)
        throw value_error("Iman-Davenport statistic degenerates: N(K-1) equals chi^2");
    return {res.chi2, *res.ff};
}

/// Nemenyi critical difference q_alpha * sqrt(K(K+1)/(6N)).
inline double nemenyi_cd(int K, int N, double q_alpha) {
    if (K < 2) throw value_error("Nemenyi CD needs at least 2 methods");
    if (N < 1) throw value_error("Nemenyi CD needs at least 1 dataset");
    if (q_alpha < 0) throw value_error("q_alpha must be nonnegative");
    return q_alpha * std::sqrt(K * (K + 1.0) / (6.0 * N));
}

/// Studentized-range constants for the Nemenyi test at alpha = 0.05,
/// K in [2, 10] (Demsar 2006, Table 5).
inline double nemenyi_q05(int K) {
    static constexpr double q[] = {1.960, 2.343, 2.569, 2.728, 2.850,
                                   2.949, 3.031, 3.102, 3.164};
    if (K < 2 || K > 10)
        throw value_error("q_alpha lookup covers K in [2, 10]; pass q_alpha explicitly");
    return q[K - 2];
}

} // namespace grople
