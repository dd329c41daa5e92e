#pragma once

#include "lpllp/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace lpllp {

// =============================================================================
// Single projections
// =============================================================================

/// Euclidean projection onto {f : sum_{i in B_k} f_i = b_k for all k}: each
/// bag is shifted uniformly by its mass deficit divided by the bag size.
inline Vector project_bag_mass(const Vector& f, const BagStructure& bags, const Vector& target) {
    if (f.size() != bags.num_instances()) throw InvalidInput("soft labels and bags differ in length");
    if (target.size() != bags.num_bags()) throw InvalidInput("mass target length differs from bag count");
    Vector out = f;
    for (Index k = 0; k < bags.num_bags(); ++k) {
        const auto& members = bags.members(k);
        double sum = 0.0;
        for (Index i : members) sum += f(i);
        const double shift = (target(k) - sum) / static_cast<double>(members.size());
        for (Index i : members) out(i) += shift;
    }
    return out;
}

/// Column-wise mass projection; `targets` is K x c (bag k, class h).
inline Matrix project_bag_mass(const Matrix& f, const BagStructure& bags, const Matrix& targets) {
    if (f.rows() != bags.num_instances()) throw InvalidInput("soft labels and bags differ in length");
    if (targets.rows() != bags.num_bags() || targets.cols() != f.cols())
        throw InvalidInput("mass target table has the wrong shape");
    Matrix out = f;
    for (Index k = 0; k < bags.num_bags(); ++k) {
        const auto& members = bags.members(k);
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(f.cols());
        for (Index i : members) sum += f.row(i);
        const Eigen::RowVectorXd shift =
            (targets.row(k) - sum) / static_cast<double>(members.size());
        for (Index i : members) out.row(i) += shift;
    }
    return out;
}

/// Clamp onto [0, 1]^n.
inline Vector project_box(const Vector& f) { return f.cwiseMax(0.0).cwiseMin(1.0); }

/// Euclidean projection of one vector onto the probability simplex
/// (sort, find the largest active prefix, threshold).
inline Eigen::RowVectorXd project_simplex(const Eigen::RowVectorXd& v) {
    const Index c = v.size();
    std::vector<double> sorted(v.data(), v.data() + c);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (Index j = 0; j < c; ++j) {
        cumulative += sorted[static_cast<std::size_t>(j)];
        const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (sorted[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

inline Matrix project_row_simplex(const Matrix& f) {
    Matrix out(f.rows(), f.cols());
    for (Index i = 0; i < f.rows(); ++i) out.row(i) = project_simplex(f.row(i));
    return out;
}

// =============================================================================
// Feasibility residuals
// =============================================================================

inline double mass_violation(const Vector& f, const BagStructure& bags, const Vector& target) {
    double worst = 0.0;
    for (Index k = 0; k < bags.num_bags(); ++k) {
        double sum = 0.0;
        for (Index i : bags.members(k)) sum += f(i);
        worst = std::max(worst, std::abs(sum - target(k)));
    }
    return worst;
}

inline double mass_violation(const Matrix& f, const BagStructure& bags, const Matrix& targets) {
    double worst = 0.0;
    for (Index k = 0; k < bags.num_bags(); ++k) {
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(f.cols());
        for (Index i : bags.members(k)) sum += f.row(i);
        worst = std::max(worst, (sum - targets.row(k)).cwiseAbs().maxCoeff());
    }
    return worst;
}

inline double box_violation(const Vector& f) {
    if (f.size() == 0) return 0.0;
    return std::max({0.0, -f.minCoeff(), f.maxCoeff() - 1.0});
}

inline double simplex_violation(const Matrix& f) {
    if (f.size() == 0) return 0.0;
    const double negative = std::max(0.0, -f.minCoeff());
    const double sums = (f.rowwise().sum().array() - 1.0).abs().maxCoeff();
    return std::max(negative, sums);
}

// =============================================================================
// Alternating projections
// =============================================================================

template <typename T>
struct ProjectionOutcome {
    T value;
    int iterations = 0;
    double residual = 0.0;
};

struct ProjectionOptions {
    double tol = 1e-6;
    int max_iter = 1000;
};

namespace detail {

inline void check_projection_options(const ProjectionOptions& opt) {
    if (!(opt.tol > 0.0)) throw InvalidInput("projection tolerance must be positive");
    if (opt.max_iter < 1) throw InvalidInput("projection max_iter must be at least 1");
}

}  // namespace detail

/// Binary case: alternate mass projection then box projection until the
/// mass residual of the boxed iterate is within tolerance. The returned
/// iterate always lies in the box exactly.
inline ProjectionOutcome<Vector> alternating_projections(Vector f, const BagStructure& bags,
                                                         const Vector& target,
                                                         const ProjectionOptions& opt = {}) {
    detail::check_projection_options(opt);
    if (!f.allFinite()) throw InvalidInput("soft labels contain non-finite values");
    double residual = 0.0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        f = project_box(project_bag_mass(f, bags, target));
        residual = std::max(mass_violation(f, bags, target), box_violation(f));
        if (residual <= opt.tol) return {std::move(f), it, residual};
    }
    throw NonConvergence("alternating projections did not reach the bag-mass constraints",
                         opt.max_iter, residual, f);
}

/// Multiclass case: per-class mass projection then row-simplex projection.
/// `targets` is K x c; consistent targets have row k summing to |B_k|.
inline ProjectionOutcome<Matrix> alternating_projections(Matrix f, const BagStructure& bags,
                                                         const Matrix& targets,
                                                         const ProjectionOptions& opt = {}) {
    detail::check_projection_options(opt);
    if (!f.allFinite()) throw InvalidInput("soft labels contain non-finite values");
    double residual = 0.0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        f = project_row_simplex(project_bag_mass(f, bags, targets));
        residual = std::max(mass_violation(f, bags, targets), simplex_violation(f));
        if (residual <= opt.tol) return {std::move(f), it, residual};
    }
    throw NonConvergence("alternating projections did not reach the bag-mass constraints",
                         opt.max_iter, residual, f);
}

}  // namespace lpllp
