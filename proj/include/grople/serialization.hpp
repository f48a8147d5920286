#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "grople/error.hpp"
#include "grople/grouping.hpp"
#include "grople/label_embedding.hpp"

namespace grople {

using json = nlohmann::json;

/// Shape-annotated row-major array encoding used for every real matrix in
/// the model and report files.
inline json matrix_to_json(const Eigen::MatrixXd& M) {
    json data = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) data.push_back(M(i, j));
    return json{{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw parse_error("matrix value must be {rows, cols, data}");
    const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw parse_error("matrix data length does not match rows*cols");
    Eigen::MatrixXd M(rows, cols);
    std::size_t t = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j2 = 0; j2 < cols; ++j2) M(i, j2) = data[t++].get<double>();
    return M;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

inline json partition_to_json(const GroupPartition& p) {
    return json{{"K", p.group_count}, {"assignment", p.assignment}};
}

inline GroupPartition partition_from_json(const json& j) {
    GroupPartition p;
    p.group_count = j.at("K").get<int>();
    p.assignment = j.at("assignment").get<std::vector<int>>();
    std::vector<bool> seen(static_cast<std::size_t>(std::max(p.group_count, 0)), false);
    for (int a : p.assignment) {
        if (a < 0 || a >= p.group_count) throw parse_error("partition assignment out of range");
        seen[static_cast<std::size_t>(a)] = true;
    }
    for (std::size_t k = 0; k < seen.size(); ++k)
        if (!seen[k]) throw parse_error("partition group " + std::to_string(k) + " is empty");
    return p;
}

inline json embedding_to_json(const LabelEmbeddingModel& m) {
    return json{{"U", matrix_to_json(m.U)},
                {"V", matrix_to_json(m.V)},
                {"partition", partition_to_json(m.partition)},
                {"lambda1", m.lambda1},
                {"lambda2", m.lambda2},
                {"d", m.d},
                {"objective_history", m.objective_history},
                {"seed", m.seed}};
}

inline LabelEmbeddingModel embedding_from_json(const json& j) {
    LabelEmbeddingModel m;
    m.U = matrix_from_json(j.at("U"));
    m.V = matrix_from_json(j.at("V"));
    m.partition = partition_from_json(j.at("partition"));
    m.lambda1 = j.at("lambda1").get<double>();
    m.lambda2 = j.at("lambda2").get<double>();
    m.d = j.at("d").get<int>();
    m.objective_history = j.at("objective_history").get<std::vector<double>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
}

inline json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot read " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw parse_error(path.string() + ": " + e.what());
    }
    return j;
}

inline void save_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

} // namespace grople
