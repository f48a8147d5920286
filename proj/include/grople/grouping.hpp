#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "grople/dataset.hpp"
#include "grople/error.hpp"
#include "grople/rng.hpp"

namespace grople {

/// Heat-kernel affinity between label columns, with per-label local scales.
struct AffinityMatrix {
    Eigen::MatrixXd A;            // L x L, symmetric, entries in (0, 1]
    Eigen::VectorXd local_scales; // sigma_i, positive
};

/// Assignment of each of L labels to one of K groups; every group non-empty.
struct GroupPartition {
    std::vector<int> assignment;
    int group_count = 0;

    Eigen::Index n_labels() const { return static_cast<Eigen::Index>(assignment.size()); }

    /// Label column indices per group, ascending within each group.
    std::vector<std::vector<Eigen::Index>> members() const {
        std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(group_count));
        for (std::size_t i = 0; i < assignment.size(); ++i)
            out[static_cast<std::size_t>(assignment[i])].push_back(
                static_cast<Eigen::Index>(i));
        return out;
    }

    bool operator==(const GroupPartition&) const = default;
};

/// A_ij = exp(-||Y_i - Y_j||^2 / (sigma_i sigma_j)) over label columns,
/// sigma_i = distance to the nn-th nearest other column. Zero scales
/// (duplicate columns) fall back to the smallest positive scale, or 1.
inline AffinityMatrix self_tuning_affinity(const Eigen::MatrixXd& Y, int nn = 7) {
    const Eigen::Index L = Y.cols();
    if (L < 2) throw value_error("affinity needs at least 2 label columns");
    if (nn < 1 || nn > L - 1)
        throw value_error("neighbor order must satisfy 1 <= nn <= L-1 (got " +
                          std::to_string(nn) + ")");

    Eigen::MatrixXd sq_dist(L, L);
    for (Eigen::Index i = 0; i < L; ++i) {
        sq_dist(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < L; ++j) {
            const double d2 = (Y.col(i) - Y.col(j)).squaredNorm();
            sq_dist(i, j) = d2;
            sq_dist(j, i) = d2;
        }
    }

    AffinityMatrix out;
    out.local_scales.resize(L);
    std::vector<double> dists(static_cast<std::size_t>(L - 1));
    for (Eigen::Index i = 0; i < L; ++i) {
        std::size_t t = 0;
        for (Eigen::Index j = 0; j < L; ++j)
            if (j != i) dists[t++] = std::sqrt(sq_dist(i, j));
        std::nth_element(dists.begin(), dists.begin() + (nn - 1), dists.end());
        out.local_scales(i) = dists[static_cast<std::size_t>(nn - 1)];
    }

    double smallest_positive = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < L; ++i)
        if (out.local_scales(i) > 0.0)
            smallest_positive = std::min(smallest_positive, out.local_scales(i));
    if (!std::isfinite(smallest_positive)) smallest_positive = 1.0;
    for (Eigen::Index i = 0; i < L; ++i)
        if (out.local_scales(i) == 0.0) out.local_scales(i) = smallest_positive;

    out.A.resize(L, L);
    for (Eigen::Index i = 0; i < L; ++i) {
        out.A(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < L; ++j) {
            const double a =
                std::exp(-sq_dist(i, j) / (out.local_scales(i) * out.local_scales(j)));
            out.A(i, j) = a;
            out.A(j, i) = a;
        }
    }
    return out;
}

/// D^{-1/2} A D^{-1/2} with D_ii = sum_j A_ij.
inline Eigen::MatrixXd normalized_affinity(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw dimension_error("affinity matrix must be square");
    Eigen::VectorXd inv_sqrt_deg(A.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double deg = A.row(i).sum();
        if (deg <= 0.0)
            throw value_error("label " + std::to_string(i) +
                              " is disconnected (zero affinity row sum)");
        inv_sqrt_deg(i) = 1.0 / std::sqrt(deg);
    }
    return inv_sqrt_deg.asDiagonal() * A * inv_sqrt_deg.asDiagonal();
}

inline Eigen::MatrixXd normalized_affinity(const AffinityMatrix& aff) {
    return normalized_affinity(aff.A);
}

/// Eigenvectors of the K algebraically largest eigenvalues (largest first),
/// rows rescaled to unit norm afterwards. Column signs are canonicalized so
/// the result is stable under label permutations.
inline Eigen::MatrixXd spectral_embedding(const Eigen::MatrixXd& M, int K) {
    const Eigen::Index L = M.rows();
    if (M.cols() != L) throw dimension_error("normalized affinity must be square");
    if (K < 1 || static_cast<Eigen::Index>(K) > L)
        throw value_error("group count must satisfy 1 <= K <= L");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M);
    if (solver.info() != Eigen::Success)
        throw numerical_error("symmetric eigendecomposition did not converge");

    Eigen::MatrixXd E(L, K);
    for (int c = 0; c < K; ++c) {
        // Eigen sorts eigenvalues ascending; take from the top.
        Eigen::VectorXd v = solver.eigenvectors().col(L - 1 - c);
        Eigen::Index max_idx = 0;
        v.cwiseAbs().maxCoeff(&max_idx);
        if (v(max_idx) < 0.0) v = -v;
        E.col(c) = v;
    }
    for (Eigen::Index i = 0; i < L; ++i) {
        const double norm = E.row(i).norm();
        if (norm > 0.0) E.row(i) /= norm;
    }
    return E;
}

namespace detail {

inline double point_sq_dist(const Eigen::MatrixXd& pts, Eigen::Index i,
                            const Eigen::RowVectorXd& c) {
    return (pts.row(i) - c).squaredNorm();
}

struct KMeansRun {
    std::vector<int> assignment;
    double wcss = std::numeric_limits<double>::infinity();
};

inline KMeansRun kmeans_single(const Eigen::MatrixXd& pts, int K, std::uint64_t seed,
                               int max_iters) {
    const Eigen::Index n = pts.rows();
    Rng rng(seed);

    // k-means++ seeding.
    Eigen::MatrixXd centers(K, pts.cols());
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);
    {
        const Eigen::Index first = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
        centers.row(0) = pts.row(first);
        chosen[static_cast<std::size_t>(first)] = true;
        Eigen::VectorXd d2(n);
        for (Eigen::Index i = 0; i < n; ++i)
            d2(i) = point_sq_dist(pts, i, centers.row(0));
        for (int c = 1; c < K; ++c) {
            const double total = d2.sum();
            Eigen::Index pick = -1;
            if (total > 0.0) {
                const double target = rng.real() * total;
                double acc = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    acc += d2(i);
                    if (acc >= target) {
                        pick = i;
                        break;
                    }
                }
                if (pick < 0) pick = n - 1;
            } else {
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (!chosen[static_cast<std::size_t>(i)]) {
                        pick = i;
                        break;
                    }
                }
                if (pick < 0) pick = 0;
            }
            centers.row(c) = pts.row(pick);
            chosen[static_cast<std::size_t>(pick)] = true;
            for (Eigen::Index i = 0; i < n; ++i)
                d2(i) = std::min(d2(i), point_sq_dist(pts, i, centers.row(c)));
        }
    }

    KMeansRun run;
    run.assignment.assign(static_cast<std::size_t>(n), 0);
    std::vector<int> previous;
    std::vector<int> sizes(static_cast<std::size_t>(K), 0);

    for (int iter = 0; iter < max_iters; ++iter) {
        // Assignment step; ties go to the lowest center index.
        std::fill(sizes.begin(), sizes.end(), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = point_sq_dist(pts, i, centers.row(0));
            for (int c = 1; c < K; ++c) {
                const double d = point_sq_dist(pts, i, centers.row(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            run.assignment[static_cast<std::size_t>(i)] = best;
        }
        for (int a : run.assignment) ++sizes[static_cast<std::size_t>(a)];

        // Repair empty clusters with the point farthest from its centroid,
        // taken from a cluster that can spare one.
        for (int c = 0; c < K; ++c) {
            if (sizes[static_cast<std::size_t>(c)] > 0) continue;
            Eigen::Index far = -1;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int a = run.assignment[static_cast<std::size_t>(i)];
                if (sizes[static_cast<std::size_t>(a)] <= 1) continue;
                const double d = point_sq_dist(pts, i, centers.row(a));
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far < 0) continue; // cannot happen while K <= n
            --sizes[static_cast<std::size_t>(run.assignment[static_cast<std::size_t>(far)])];
            run.assignment[static_cast<std::size_t>(far)] = c;
            ++sizes[static_cast<std::size_t>(c)];
            centers.row(c) = pts.row(far);
        }

        if (run.assignment == previous) break;
        previous = run.assignment;

        // Update step.
        centers.setZero();
        for (Eigen::Index i = 0; i < n; ++i)
            centers.row(run.assignment[static_cast<std::size_t>(i)]) += pts.row(i);
        for (int c = 0; c < K; ++c)
            if (sizes[static_cast<std::size_t>(c)] > 0)
                centers.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    }

    // Final centroids from final assignment, then the objective.
    centers.setZero();
    std::fill(sizes.begin(), sizes.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        centers.row(run.assignment[static_cast<std::size_t>(i)]) += pts.row(i);
        ++sizes[static_cast<std::size_t>(run.assignment[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < K; ++c)
        if (sizes[static_cast<std::size_t>(c)] > 0)
            centers.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    run.wcss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        run.wcss += point_sq_dist(pts, i, centers.row(run.assignment[static_cast<std::size_t>(i)]));
    return run;
}

/// Renumber groups by first occurrence so equal clusterings compare equal.
inline void canonical_relabel(std::vector<int>& assignment, int K) {
    std::vector<int> remap(static_cast<std::size_t>(K), -1);
    int next = 0;
    for (int& a : assignment) {
        if (remap[static_cast<std::size_t>(a)] < 0) remap[static_cast<std::size_t>(a)] = next++;
        a = remap[static_cast<std::size_t>(a)];
    }
}

} // namespace detail

/// Lloyd's algorithm from k-means++ seeding, best of `restarts` runs by
/// within-cluster sum of squares (ties to the lowest restart index).
inline GroupPartition kmeans_assign(const Eigen::MatrixXd& points, int K, std::uint64_t seed,
                                    int restarts = 10, int max_iters = 300) {
    const Eigen::Index n = points.rows();
    if (K < 1 || static_cast<Eigen::Index>(K) > n)
        throw value_error("cluster count must satisfy 1 <= K <= point count");
    if (restarts < 1) throw value_error("restarts must be >= 1");

    detail::KMeansRun best;
    for (int r = 0; r < restarts; ++r) {
        detail::KMeansRun run =
            detail::kmeans_single(points, K, mix_seed(seed, 0x6b6d31 + static_cast<std::uint64_t>(r)),
                                  max_iters);
        if (run.wcss < best.wcss) best = std::move(run);
    }

    GroupPartition part;
    part.group_count = K;
    part.assignment = std::move(best.assignment);
    detail::canonical_relabel(part.assignment, K);
    return part;
}

/// Full grouping stage: affinity, normalization, spectral embedding, then
/// k-means on the embedding rows. K = 1 short-circuits to a single group.
/// The embedding rows are fed to k-means in canonical (lexicographic) order
/// so the result is stable under label permutations.
inline GroupPartition group_labels(const Eigen::MatrixXd& Y, int K, std::uint64_t seed,
                                   int nn = 7, int restarts = 10) {
    const Eigen::Index L = Y.cols();
    if (K < 1 || static_cast<Eigen::Index>(K) > L)
        throw value_error("group count must satisfy 1 <= K <= L (got K=" + std::to_string(K) +
                          ", L=" + std::to_string(L) + ")");
    GroupPartition part;
    part.group_count = K;
    part.assignment.assign(static_cast<std::size_t>(L), 0);
    if (K == 1) return part;

    // The default neighbor order (7) can exceed L-1 on small label sets.
    const int effective_nn = static_cast<int>(std::min<Eigen::Index>(nn, L - 1));
    const AffinityMatrix aff = self_tuning_affinity(Y, effective_nn);
    const Eigen::MatrixXd M = normalized_affinity(aff);
    const Eigen::MatrixXd E = spectral_embedding(M, K);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(L));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index c = 0; c < E.cols(); ++c) {
            if (E(a, c) != E(b, c)) return E(a, c) < E(b, c);
        }
        return a < b;
    });
    Eigen::MatrixXd sorted(L, E.cols());
    for (Eigen::Index i = 0; i < L; ++i) sorted.row(i) = E.row(order[static_cast<std::size_t>(i)]);

    const GroupPartition sorted_part = kmeans_assign(sorted, K, seed, restarts);
    for (Eigen::Index i = 0; i < L; ++i)
        part.assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
            sorted_part.assignment[static_cast<std::size_t>(i)];
    detail::canonical_relabel(part.assignment, K);
    return part;
}

/// CSV export: label_name,group_index.
inline void write_partition_csv(std::ostream& out, const GroupPartition& part,
                                const std::vector<std::string>& label_names) {
    if (static_cast<Eigen::Index>(label_names.size()) != part.n_labels())
        throw dimension_error("label name count does not match partition size");
    out << "label_name,group_index\n";
    for (std::size_t i = 0; i < label_names.size(); ++i)
        out << detail::csv_quote(label_names[i]) << "," << part.assignment[i] << "\n";
}

} // namespace grople
