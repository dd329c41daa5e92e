#pragma once

#include "lpllp/core.hpp"

#include <cmath>
#include <string>

namespace lpllp {

/// Similarity matrix W and its row-normalized form S = D^-1 W.
struct RowStochasticGraph {
    Matrix weights;     // W, symmetric, zero diagonal
    Matrix transition;  // S, rows sum to 1
    Vector degree;      // D_ii = sum_j W_ij

    Index size() const noexcept { return weights.rows(); }
};

/// Gaussian kernel W_ij = exp(-gamma * ||x_i - x_j||^2) with W_ii = 0.
inline Matrix compute_similarity(const Matrix& points, double gamma_kernel) {
    if (!(gamma_kernel > 0.0) || !std::isfinite(gamma_kernel))
        throw InvalidInput("kernel bandwidth must be a positive finite number");
    const Index n = points.rows();
    Matrix w(n, n);
    for (Index i = 0; i < n; ++i) {
        w(i, i) = 0.0;
        for (Index j = i + 1; j < n; ++j) {
            const double dist2 = (points.row(i) - points.row(j)).squaredNorm();
            if (!std::isfinite(dist2))
                throw InvalidInput("non-finite distance between instances " + std::to_string(i) +
                                   " and " + std::to_string(j));
            const double v = std::exp(-gamma_kernel * dist2);
            w(i, j) = v;
            w(j, i) = v;
        }
    }
    return w;
}

inline Matrix compute_similarity(const Dataset& ds, double gamma_kernel) {
    return compute_similarity(ds.points, gamma_kernel);
}

/// Throws InvalidInput on a zero-degree row: an isolated vertex has no
/// transition distribution. Lower the bandwidth or densify the data.
inline RowStochasticGraph row_normalize(Matrix w) {
    if (w.rows() != w.cols()) throw InvalidInput("similarity matrix must be square");
    Vector degree = w.rowwise().sum();
    for (Index i = 0; i < degree.size(); ++i)
        if (!(degree(i) > 0.0) || !std::isfinite(degree(i)))
            throw InvalidInput("instance " + std::to_string(i) +
                               " has zero degree in the similarity graph");
    Matrix s = degree.cwiseInverse().asDiagonal() * w;
    return RowStochasticGraph{std::move(w), std::move(s), std::move(degree)};
}

inline RowStochasticGraph build_graph(const Matrix& points, double gamma_kernel) {
    return row_normalize(compute_similarity(points, gamma_kernel));
}

/// Column-wise z-score. Constant columns are centred but left unscaled.
inline Matrix standardize(const Matrix& points) {
    Matrix out = points;
    const double n = static_cast<double>(points.rows());
    for (Index j = 0; j < points.cols(); ++j) {
        const double mean = points.col(j).mean();
        out.col(j).array() -= mean;
        const double sd = n > 1 ? std::sqrt(out.col(j).squaredNorm() / (n - 1.0)) : 0.0;
        if (sd > 0.0) out.col(j) /= sd;
    }
    return out;
}

}  // namespace lpllp
