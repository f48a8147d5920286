#pragma once

// Shared test oracles. Everything here is deliberately independent of the
// implementation paths it checks: gradients come from finite differences,
// prox results from dense grid search, k-means from exhaustive enumeration,
// low-rank reconstruction from an SVD.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>
#include <json.hpp>

#include "grople/rng.hpp"

namespace testsupport {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                     double scale = 1.0) {
    grople::Rng rng(seed);
    return grople::gaussian_matrix(rows, cols, scale, rng);
}

/// Random matrix with entries in {-1, +1}.
inline Eigen::MatrixXd random_sign_matrix(Eigen::Index rows, Eigen::Index cols,
                                          std::uint64_t seed) {
    grople::Rng rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.real() < 0.5 ? -1.0 : 1.0;
    return m;
}

/// Central finite differences of a scalar function of a matrix argument.
inline Eigen::MatrixXd finite_difference_gradient(
    const std::function<double(const Eigen::MatrixXd&)>& f, const Eigen::MatrixXd& at,
    double step = 1e-5) {
    Eigen::MatrixXd grad(at.rows(), at.cols());
    Eigen::MatrixXd probe = at;
    for (Eigen::Index i = 0; i < at.rows(); ++i) {
        for (Eigen::Index j = 0; j < at.cols(); ++j) {
            probe(i, j) = at(i, j) + step;
            const double up = f(probe);
            probe(i, j) = at(i, j) - step;
            const double down = f(probe);
            probe(i, j) = at(i, j);
            grad(i, j) = (up - down) / (2.0 * step);
        }
    }
    return grad;
}

inline double relative_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
    return (got - want).norm() / std::max(1e-12, want.norm());
}

/// Exhaustive 2-cluster k-means objective: best within-cluster sum of
/// squares over every assignment with two non-empty clusters.
inline double brute_force_wcss_k2(const Eigen::MatrixXd& points) {
    const int n = static_cast<int>(points.rows());
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
        Eigen::RowVectorXd c0 = Eigen::RowVectorXd::Zero(points.cols());
        Eigen::RowVectorXd c1 = c0;
        int n0 = 0, n1 = 0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) {
                c1 += points.row(i);
                ++n1;
            } else {
                c0 += points.row(i);
                ++n0;
            }
        }
        c0 /= n0;
        c1 /= n1;
        double wcss = 0.0;
        for (int i = 0; i < n; ++i)
            wcss += (mask & (1u << i)) ? (points.row(i) - c1).squaredNorm()
                                       : (points.row(i) - c0).squaredNorm();
        best = std::min(best, wcss);
    }
    return best;
}

inline double wcss_of(const Eigen::MatrixXd& points, const std::vector<int>& assignment,
                      int K) {
    Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(K, points.cols());
    std::vector<int> sizes(static_cast<std::size_t>(K), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        centers.row(assignment[static_cast<std::size_t>(i)]) += points.row(i);
        ++sizes[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < K; ++c)
        if (sizes[static_cast<std::size_t>(c)] > 0) centers.row(c) /= sizes[static_cast<std::size_t>(c)];
    double wcss = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        wcss += (points.row(i) - centers.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
    return wcss;
}

/// Grid-search argmin of t*|w| + 0.5*(w-m)^2 over a dense 1-D grid.
inline double prox_l1_grid(double m, double t, int grid_points = 10000) {
    const double radius = std::abs(m) + t + 1.0;
    double best_w = 0.0, best_f = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_points; ++i) {
        const double w = -radius + 2.0 * radius * i / (grid_points - 1);
        const double f = t * std::abs(w) + 0.5 * (w - m) * (w - m);
        if (f < best_f) {
            best_f = f;
            best_w = w;
        }
    }
    return best_w;
}

/// Grid-search argmin of t*||w|| + 0.5*||w-m||^2 over a dense 2-D grid.
inline Eigen::Vector2d prox_l2_grid(const Eigen::Vector2d& m, double t, int per_axis = 101) {
    const double radius = m.norm() + t + 1.0;
    Eigen::Vector2d best_w = Eigen::Vector2d::Zero();
    double best_f = std::numeric_limits<double>::infinity();
    for (int i = 0; i < per_axis; ++i) {
        for (int j = 0; j < per_axis; ++j) {
            Eigen::Vector2d w(-radius + 2.0 * radius * i / (per_axis - 1),
                              -radius + 2.0 * radius * j / (per_axis - 1));
            const double f = t * w.norm() + 0.5 * (w - m).squaredNorm();
            if (f < best_f) {
                best_f = f;
                best_w = w;
            }
        }
    }
    return best_w;
}

/// Best rank-d reconstruction error via SVD, the oracle for exact recovery.
inline double truncated_svd_error(const Eigen::MatrixXd& Y, int d) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Y);
    const auto& s = svd.singularValues();
    double err2 = 0.0;
    for (Eigen::Index i = d; i < s.size(); ++i) err2 += s(i) * s(i);
    return std::sqrt(err2);
}

inline bool history_non_increasing(const std::vector<double>& history) {
    if (history.empty()) return false;
    const double slack = 1e-10 * (1.0 + history.front());
    for (std::size_t i = 1; i < history.size(); ++i)
        if (history[i] > history[i - 1] + slack) return false;
    return true;
}

/// Partition equality modulo group relabeling.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    std::vector<int> map_ab(a.size(), -1), map_ba(b.size(), -1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (map_ab[static_cast<std::size_t>(a[i])] < 0) map_ab[static_cast<std::size_t>(a[i])] = b[i];
        if (map_ba[static_cast<std::size_t>(b[i])] < 0) map_ba[static_cast<std::size_t>(b[i])] = a[i];
        if (map_ab[static_cast<std::size_t>(a[i])] != b[i] ||
            map_ba[static_cast<std::size_t>(b[i])] != a[i])
            return false;
    }
    return true;
}

/// Minimal JSON Schema checker covering the subset used by the shipped
/// schemas: type, properties, required, items, enum, additionalProperties,
/// and local "$ref": "#/definitions/..." references.
inline bool schema_validate_at(const nlohmann::json& root, const nlohmann::json& schema,
                               const nlohmann::json& value, std::string* why);

inline bool schema_validate(const nlohmann::json& schema, const nlohmann::json& value,
                            std::string* why = nullptr) {
    return schema_validate_at(schema, schema, value, why);
}

inline bool schema_validate_at(const nlohmann::json& root, const nlohmann::json& schema_in,
                               const nlohmann::json& value, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    const nlohmann::json* resolved = &schema_in;
    if (schema_in.contains("$ref")) {
        const std::string ref = schema_in.at("$ref").get<std::string>();
        if (ref.rfind("#/", 0) != 0) return fail("unsupported $ref " + ref);
        const nlohmann::json* target = &root;
        std::size_t start = 2;
        while (start < ref.size()) {
            const auto slash = ref.find('/', start);
            const std::string key = ref.substr(start, slash == std::string::npos
                                                          ? std::string::npos
                                                          : slash - start);
            if (!target->contains(key)) return fail("dangling $ref " + ref);
            target = &target->at(key);
            if (slash == std::string::npos) break;
            start = slash + 1;
        }
        resolved = target;
    }
    const nlohmann::json& schema = *resolved;
    if (schema.contains("enum")) {
        for (const auto& v : schema.at("enum"))
            if (v == value) return true;
        return fail("value not in enum");
    }
    if (schema.contains("type")) {
        const std::string type = schema.at("type").get<std::string>();
        const bool ok = (type == "object" && value.is_object()) ||
                        (type == "array" && value.is_array()) ||
                        (type == "string" && value.is_string()) ||
                        (type == "number" && value.is_number()) ||
                        (type == "integer" && value.is_number_integer()) ||
                        (type == "boolean" && value.is_boolean()) ||
                        (type == "null" && value.is_null());
        if (!ok) return fail("expected type " + type);
    }
    if (value.is_object()) {
        if (schema.contains("required")) {
            for (const auto& key : schema.at("required"))
                if (!value.contains(key.get<std::string>()))
                    return fail("missing required key " + key.get<std::string>());
        }
        if (schema.contains("properties")) {
            for (const auto& [key, sub] : schema.at("properties").items()) {
                if (value.contains(key) && !schema_validate_at(root, sub, value.at(key), why))
                    return fail("property " + key + ": " + (why ? *why : ""));
            }
            if (schema.value("additionalProperties", true) == false) {
                for (const auto& [key, v] : value.items()) {
                    (void)v;
                    if (!schema.at("properties").contains(key))
                        return fail("unexpected property " + key);
                }
            }
        }
    }
    if (value.is_array() && schema.contains("items")) {
        for (const auto& item : value)
            if (!schema_validate_at(root, schema.at("items"), item, why))
                return fail("array item: " + (why ? *why : ""));
    }
    return true;
}

} // namespace testsupport
