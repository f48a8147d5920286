#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "grople/error.hpp"
#include "grople/label_embedding.hpp"

namespace grople {

/// Ridge binary-relevance sanity baseline: one shared closed-form solve for
/// all labels, decoded with the same sign rule as the main method.
struct RidgeBRModel {
    Eigen::MatrixXd W; // D x L
    double lambda = 0.0;
};

inline RidgeBRModel fit_ridge_br(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                 double lambda) {
    if (X.rows() != Y.rows())
        throw dimension_error("fit_ridge_br: X and Y row counts differ");
    if (!(lambda > 0.0)) throw value_error("ridge weight must be positive");
    RidgeBRModel model;
    model.lambda = lambda;
    model.W = detail::spd_solve(X.transpose() * X, lambda, X.transpose() * Y, "fit_ridge_br");
    return model;
}

inline Eigen::MatrixXd ridge_br_scores(const RidgeBRModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.W.rows())
        throw dimension_error("ridge_br_scores: X has " + std::to_string(X.cols()) +
                              " features, model expects " + std::to_string(model.W.rows()));
    return X * model.W;
}

} // namespace grople
