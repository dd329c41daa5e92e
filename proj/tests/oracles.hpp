#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the solver paths it is used to check.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Random row-stochastic matrix with zero diagonal and strictly positive
/// off-diagonal rows.
inline Matrix random_stochastic(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Matrix w = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) w(i, j) = w(j, i) = u(rng);
    for (int i = 0; i < n; ++i) w.row(i) /= w.row(i).sum();
    return w;
}

/// sum_i sum_j s_ij (f_i - f_j)^2 + mu sum_i (f_i - y_i)^2 by a double loop.
inline double objective_double_loop(const Vector& f, const Matrix& s, const Vector& y, double mu) {
    double smooth = 0.0;
    for (int i = 0; i < f.size(); ++i)
        for (int j = 0; j < f.size(); ++j) smooth += s(i, j) * (f(i) - f(j)) * (f(i) - f(j));
    double fit = 0.0;
    for (int i = 0; i < f.size(); ++i) fit += (f(i) - y(i)) * (f(i) - y(i));
    return smooth + mu * fit;
}

/// sum_{k=0}^{terms} (alpha S)^k Y.
inline Matrix neumann_series(const Matrix& s, const Matrix& y, double alpha, int terms) {
    Matrix term = y;
    Matrix sum = y;
    for (int k = 1; k <= terms; ++k) {
        term = alpha * (s * term);
        sum += term;
    }
    return sum;
}

/// Projection onto the simplex by enumerating every support set: for a
/// support A, the KKT point is v_A - (sum v_A - 1)/|A|, zero elsewhere. The
/// feasible candidate nearest to v is the projection. Exponential in c.
inline Vector simplex_projection_enumerate(const Vector& v) {
    const int c = static_cast<int>(v.size());
    Vector best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask < (1u << c); ++mask) {
        double sum = 0.0;
        int count = 0;
        for (int j = 0; j < c; ++j)
            if (mask & (1u << j)) {
                sum += v(j);
                ++count;
            }
        const double shift = (sum - 1.0) / count;
        Vector p = Vector::Zero(c);
        bool feasible = true;
        for (int j = 0; j < c; ++j)
            if (mask & (1u << j)) {
                p(j) = v(j) - shift;
                if (p(j) < -1e-15) feasible = false;
            }
        if (!feasible) continue;
        const double d = (p - v).squaredNorm();
        if (d < best_dist) {
            best_dist = d;
            best = p;
        }
    }
    return best;
}

/// Leave-one-out 1-nearest-neighbour accuracy.
inline double loo_1nn_accuracy(const Matrix& x, const std::vector<int>& y) {
    const int n = static_cast<int>(x.rows());
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int label = -1;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = (x.row(i) - x.row(j)).squaredNorm();
            if (d < best) {
                best = d;
                label = y[static_cast<std::size_t>(j)];
            }
        }
        hits += label == y[static_cast<std::size_t>(i)];
    }
    return static_cast<double>(hits) / n;
}

/// Training accuracy of a logistic regression fit by full-batch gradient
/// descent on standardized features with an intercept.
inline double logistic_regression_accuracy(const Matrix& x, const std::vector<int>& y, int epochs = 2000) {
    const int n = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    Matrix z(n, d + 1);
    for (int j = 0; j < d; ++j) {
        const double mean = x.col(j).mean();
        const double sd = std::sqrt((x.col(j).array() - mean).square().sum() / (n - 1));
        z.col(j) = (x.col(j).array() - mean) / sd;
    }
    z.col(d).setOnes();
    Vector t(n);
    for (int i = 0; i < n; ++i) t(i) = y[static_cast<std::size_t>(i)];
    Vector w = Vector::Zero(d + 1);
    for (int e = 0; e < epochs; ++e) {
        const Vector p = (1.0 + (-(z * w).array()).exp()).inverse().matrix();
        w -= 0.5 * z.transpose() * (p - t) / n;
    }
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += ((z.row(i).dot(w) >= 0.0) ? 1 : 0) == y[static_cast<std::size_t>(i)];
    return static_cast<double>(hits) / n;
}

}  // namespace oracle
