#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "grople/baseline.hpp"
#include "grople/dataset.hpp"
#include "grople/error.hpp"
#include "grople/feature_embedding.hpp"
#include "grople/grouping.hpp"
#include "grople/label_embedding.hpp"
#include "grople/metrics.hpp"
#include "grople/serialization.hpp"

namespace grople {

/// Paper defaults: d = 100, K = 10, lambda1 = 0.001, lambda2 = 1.
struct GropleParams {
    int d = 100;
    int K = 10;
    double lambda1 = 1e-3;
    double lambda2 = 1.0;
    double alpha = 1.0;
    double beta = 1.0;
    int nn = 7;
    int kmeans_restarts = 10;
    bool standardize = false;
    bool bias_column = false;
    bool keep_u = false;
    bool calibrate_thresholds = false;
    FitSettings solver;
};

/// End-to-end classifier: feature map Z composed with decoding matrix V.
/// U is retained only when keep_u was set at fit time.
struct GropleClassifier {
    GropleParams params;
    Eigen::MatrixXd Z; // D(+bias) x d
    Eigen::MatrixXd V; // d x L
    GroupPartition partition;
    std::vector<std::string> label_names;
    std::optional<Standardizer> standardization;
    std::optional<Eigen::VectorXd> thresholds; // per label, subtracted from scores
    std::optional<Eigen::MatrixXd> U;
    std::vector<double> objective_history;
    std::uint64_t seed = 0;
};

/// Entrywise sign with sign(0) = -1.
inline Eigen::MatrixXd decide(const Eigen::MatrixXd& scores) {
    return scores.unaryExpr([](double s) { return s > 0.0 ? 1.0 : -1.0; });
}

namespace detail {

inline Eigen::MatrixXd with_bias(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd out(X.rows(), X.cols() + 1);
    out.leftCols(X.cols()) = X;
    out.col(X.cols()).setOnes();
    return out;
}

inline Eigen::MatrixXd prepare_inputs(const Eigen::MatrixXd& X,
                                      const std::optional<Standardizer>& standardization,
                                      bool bias_column) {
    Eigen::MatrixXd out = standardization ? standardization->transform(X) : X;
    return bias_column ? with_bias(out) : std::move(out);
}

/// Per-label threshold maximizing that label's F1 on the training scores;
/// candidates are midpoints between consecutive sorted scores. Ties go to
/// the smaller threshold.
inline Eigen::VectorXd calibrate_thresholds(const Eigen::MatrixXd& scores,
                                            const Eigen::MatrixXd& Y) {
    const Eigen::Index n = scores.rows();
    Eigen::VectorXd thresholds(scores.cols());
    std::vector<double> sorted(static_cast<std::size_t>(n));
    for (Eigen::Index l = 0; l < scores.cols(); ++l) {
        for (Eigen::Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = scores(i, l);
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> candidates{0.0};
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
            if (sorted[i] != sorted[i + 1]) candidates.push_back((sorted[i] + sorted[i + 1]) / 2);
        candidates.push_back(sorted.back() + 1.0);

        double best_t = 0.0, best_f1 = -1.0;
        for (const double t : candidates) {
            int tp = 0, fp = 0, fn = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const bool p = scores(i, l) - t > 0.0;
                const bool a = Y(i, l) > 0.0;
                tp += (a && p);
                fp += (!a && p);
                fn += (a && !p);
            }
            const double f1 = (tp + fp + fn == 0) ? 1.0 : 2.0 * tp / double(2 * tp + fp + fn);
            if (f1 > best_f1 || (f1 == best_f1 && t < best_t)) {
                best_f1 = f1;
                best_t = t;
            }
        }
        thresholds(l) = best_t;
    }
    return thresholds;
}

} // namespace detail

/// Reuse store for grid searches: grid cells that share (K) reuse the label
/// grouping, cells that share (d, K, lambda1, lambda2) reuse the whole label
/// embedding. Only valid across fits of the same training data and seed.
/// Not thread-safe for insertion; pre-fill before concurrent fits.
struct EmbeddingCache {
    std::map<int, GroupPartition> partitions;
    std::map<std::tuple<int, int, double, double>, LabelEmbeddingModel> embeddings;
};

/// The three-stage pipeline: spectral label grouping, group-sparse label
/// embedding, then the sparse feature-space map onto the embedded points.
inline GropleClassifier fit_grople(const MultiLabelDataset& train, const GropleParams& params,
                                   std::uint64_t seed, EmbeddingCache* cache = nullptr) {
    if (train.n_instances() < 1) throw value_error("training set is empty");
    if (params.K > train.n_labels())
        throw value_error("group count K=" + std::to_string(params.K) + " exceeds label count L=" +
                          std::to_string(train.n_labels()));
    if (params.K < 1) throw value_error("group count must be >= 1");

    GropleClassifier model;
    model.params = params;
    model.label_names = train.label_names;
    model.seed = seed;

    if (params.standardize) model.standardization = Standardizer::fit(train.X);
    const Eigen::MatrixXd X =
        detail::prepare_inputs(train.X, model.standardization, params.bias_column);

    if (cache && cache->partitions.count(params.K)) {
        model.partition = cache->partitions.at(params.K);
    } else {
        model.partition = group_labels(train.Y, params.K, mix_seed(seed, 0x67727570), params.nn,
                                       params.kmeans_restarts);
        if (cache) cache->partitions.emplace(params.K, model.partition);
    }

    const std::tuple<int, int, double, double> key{params.d, params.K, params.lambda1,
                                                   params.lambda2};
    const LabelEmbeddingModel* embedding = nullptr;
    LabelEmbeddingModel local;
    if (cache && cache->embeddings.count(key)) {
        embedding = &cache->embeddings.at(key);
    } else {
        local = fit_label_embedding(train.Y, model.partition, params.d, params.lambda1,
                                    params.lambda2, params.solver, mix_seed(seed, 0x656d6264));
        embedding = cache ? &cache->embeddings.emplace(key, std::move(local)).first->second
                          : &local;
    }
    model.V = embedding->V;
    model.objective_history = embedding->objective_history;

    const FeatureMap map =
        fit_feature_map(X, embedding->U, params.alpha, params.beta, params.solver.apg);
    model.Z = map.Z;
    if (params.keep_u) model.U = embedding->U;

    if (params.calibrate_thresholds)
        model.thresholds = detail::calibrate_thresholds(X * model.Z * model.V, train.Y);
    return model;
}

/// Raw decoding scores X Z V (after stored standardization / bias column).
inline Eigen::MatrixXd score(const GropleClassifier& model, const Eigen::MatrixXd& X_test) {
    const Eigen::MatrixXd X =
        detail::prepare_inputs(X_test, model.standardization, model.params.bias_column);
    if (X.cols() != model.Z.rows())
        throw dimension_error("score: input has " + std::to_string(X.cols()) +
                              " features, model expects " + std::to_string(model.Z.rows()));
    Eigen::MatrixXd s = X * model.Z * model.V;
    if (model.thresholds) s.rowwise() -= model.thresholds->transpose();
    return s;
}

inline Eigen::MatrixXd predict(const GropleClassifier& model, const Eigen::MatrixXd& X_test) {
    return decide(score(model, X_test));
}

// --- A tagged wrapper so the CLI and harness can treat both methods
// uniformly and share one model-file envelope. ---

struct RidgeBRClassifier {
    RidgeBRModel ridge;
    std::vector<std::string> label_names;
    std::optional<Standardizer> standardization;
    bool bias_column = false;
    std::uint64_t seed = 0;
};

inline RidgeBRClassifier fit_ridge_br_classifier(const MultiLabelDataset& train, double lambda,
                                                 bool standardize, bool bias_column,
                                                 std::uint64_t seed) {
    RidgeBRClassifier model;
    model.label_names = train.label_names;
    model.bias_column = bias_column;
    model.seed = seed;
    if (standardize) model.standardization = Standardizer::fit(train.X);
    const Eigen::MatrixXd X = detail::prepare_inputs(train.X, model.standardization, bias_column);
    model.ridge = fit_ridge_br(X, train.Y, lambda);
    return model;
}

inline Eigen::MatrixXd score(const RidgeBRClassifier& model, const Eigen::MatrixXd& X_test) {
    const Eigen::MatrixXd X =
        detail::prepare_inputs(X_test, model.standardization, model.bias_column);
    return ridge_br_scores(model.ridge, X);
}

inline Eigen::MatrixXd predict(const RidgeBRClassifier& model, const Eigen::MatrixXd& X_test) {
    return decide(score(model, X_test));
}

using AnyClassifier = std::variant<GropleClassifier, RidgeBRClassifier>;

inline Eigen::MatrixXd score(const AnyClassifier& model, const Eigen::MatrixXd& X_test) {
    return std::visit([&](const auto& m) { return score(m, X_test); }, model);
}

inline Eigen::MatrixXd predict(const AnyClassifier& model, const Eigen::MatrixXd& X_test) {
    return decide(score(model, X_test));
}

inline const std::vector<std::string>& label_names(const AnyClassifier& model) {
    return std::visit([](const auto& m) -> const std::vector<std::string>& { return m.label_names; },
                      model);
}

// --- Model file (format_version 1). ---

namespace detail {

inline json standardizer_to_json(const std::optional<Standardizer>& s) {
    if (!s) return nullptr;
    return json{{"mean", vector_to_json(s->mean)}, {"scale", vector_to_json(s->scale)}};
}

inline std::optional<Standardizer> standardizer_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    Standardizer s;
    s.mean = vector_from_json(j.at("mean"));
    s.scale = vector_from_json(j.at("scale"));
    return s;
}

} // namespace detail

inline json model_to_json(const GropleClassifier& m) {
    json hp{{"d", m.params.d},
            {"K", m.params.K},
            {"lambda1", m.params.lambda1},
            {"lambda2", m.params.lambda2},
            {"alpha", m.params.alpha},
            {"beta", m.params.beta},
            {"nn", m.params.nn},
            {"kmeans_restarts", m.params.kmeans_restarts},
            {"standardize", m.params.standardize},
            {"bias_column", m.params.bias_column},
            {"keep_u", m.params.keep_u},
            {"calibrate_thresholds", m.params.calibrate_thresholds}};
    json j{{"format_version", 1},
           {"method", "grople"},
           {"hyperparameters", std::move(hp)},
           {"label_names", m.label_names},
           {"partition", partition_to_json(m.partition)},
           {"Z", matrix_to_json(m.Z)},
           {"V", matrix_to_json(m.V)},
           {"standardization", detail::standardizer_to_json(m.standardization)},
           {"objective_history", m.objective_history},
           {"seed", m.seed}};
    j["thresholds"] = m.thresholds ? vector_to_json(*m.thresholds) : json(nullptr);
    j["U"] = m.U ? matrix_to_json(*m.U) : json(nullptr);
    return j;
}

inline json model_to_json(const RidgeBRClassifier& m) {
    return json{{"format_version", 1},
                {"method", "ridge-br"},
                {"hyperparameters", json{{"lambda", m.ridge.lambda},
                                         {"standardize", m.standardization.has_value()},
                                         {"bias_column", m.bias_column}}},
                {"label_names", m.label_names},
                {"W", matrix_to_json(m.ridge.W)},
                {"standardization", detail::standardizer_to_json(m.standardization)},
                {"seed", m.seed}};
}

inline json model_to_json(const AnyClassifier& m) {
    return std::visit([](const auto& model) { return model_to_json(model); }, m);
}

inline AnyClassifier model_from_json(const json& j) {
    if (!j.is_object() || !j.contains("format_version"))
        throw parse_error("not a model file (missing format_version)");
    if (j.at("format_version").get<int>() != 1)
        throw parse_error("unsupported model format_version");
    const std::string method = j.at("method").get<std::string>();

    if (method == "ridge-br") {
        RidgeBRClassifier m;
        m.ridge.W = matrix_from_json(j.at("W"));
        m.ridge.lambda = j.at("hyperparameters").at("lambda").get<double>();
        m.label_names = j.at("label_names").get<std::vector<std::string>>();
        m.standardization = detail::standardizer_from_json(j.at("standardization"));
        m.bias_column = j.at("hyperparameters").at("bias_column").get<bool>();
        m.seed = j.at("seed").get<std::uint64_t>();
        return m;
    }
    if (method != "grople") throw parse_error("unknown model method '" + method + "'");

    GropleClassifier m;
    const json& hp = j.at("hyperparameters");
    m.params.d = hp.at("d").get<int>();
    m.params.K = hp.at("K").get<int>();
    m.params.lambda1 = hp.at("lambda1").get<double>();
    m.params.lambda2 = hp.at("lambda2").get<double>();
    m.params.alpha = hp.at("alpha").get<double>();
    m.params.beta = hp.at("beta").get<double>();
    m.params.nn = hp.at("nn").get<int>();
    m.params.kmeans_restarts = hp.at("kmeans_restarts").get<int>();
    m.params.standardize = hp.at("standardize").get<bool>();
    m.params.bias_column = hp.at("bias_column").get<bool>();
    m.params.keep_u = hp.at("keep_u").get<bool>();
    m.params.calibrate_thresholds = hp.at("calibrate_thresholds").get<bool>();
    m.label_names = j.at("label_names").get<std::vector<std::string>>();
    m.partition = partition_from_json(j.at("partition"));
    m.Z = matrix_from_json(j.at("Z"));
    m.V = matrix_from_json(j.at("V"));
    m.standardization = detail::standardizer_from_json(j.at("standardization"));
    m.objective_history = j.at("objective_history").get<std::vector<double>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("thresholds").is_null()) m.thresholds = vector_from_json(j.at("thresholds"));
    if (!j.at("U").is_null()) m.U = matrix_from_json(j.at("U"));
    if (m.Z.cols() != m.V.rows())
        throw parse_error("model Z and V dimensions do not compose");
    if (m.V.cols() != static_cast<Eigen::Index>(m.label_names.size()))
        throw parse_error("model V column count does not match label names");
    return m;
}

inline void save_model(const std::filesystem::path& path, const AnyClassifier& model) {
    save_json_file(path, model_to_json(model));
}

inline AnyClassifier load_model(const std::filesystem::path& path) {
    return model_from_json(load_json_file(path));
}

} // namespace grople
