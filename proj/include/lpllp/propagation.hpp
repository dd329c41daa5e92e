#pragma once

// Graph label propagation solvers: the semi-supervised closed form and its
// fixed-point iteration, the bag-constrained propagation loop, decision
// rules, the one-step weighted k-NN estimate and the regularization objective.

#include "lpllp/core.hpp"
#include "lpllp/graph.hpp"
#include "lpllp/projections.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lpllp {

enum class InnerSolver { closed_form, power_iteration };

struct PropagationConfig {
    double alpha = 0.5;
    InnerSolver inner_solver = InnerSolver::closed_form;
    double outer_tol = 1e-5;
    int outer_max_iter = 200;
    double ap_tol = 1e-6;
    int ap_max_iter = 1000;
    // Multiply each resolvent step by (1 - alpha). Off by default: the mass
    // projection re-fixes the scale every outer step.
    bool scale_resolvent = false;
    // Only used by InnerSolver::power_iteration.
    double power_tol = 1e-12;
    int power_max_iter = 100000;
    bool record_objective = false;
    double mu_reg = 1.0;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
        if (!(outer_tol > 0.0)) throw InvalidInput("outer_tol must be positive");
        if (outer_max_iter < 1) throw InvalidInput("outer_max_iter must be at least 1");
        if (!(ap_tol > 0.0)) throw InvalidInput("ap_tol must be positive");
        if (ap_max_iter < 1) throw InvalidInput("ap_max_iter must be at least 1");
        if (!(power_tol > 0.0)) throw InvalidInput("power_tol must be positive");
        if (power_max_iter < 1) throw InvalidInput("power_max_iter must be at least 1");
        if (!(mu_reg >= 0.0)) throw InvalidInput("mu_reg must be non-negative");
    }
};

struct PropagationDiagnostics {
    int outer_iterations = 0;
    double outer_residual = 0.0;
    std::vector<int> ap_iterations;
    std::vector<double> residual_trace;
    std::vector<double> objective_trace;
};

template <typename T>
struct PropagationResult {
    T soft_labels;
    PropagationDiagnostics diagnostics;
};

struct IterativeSolution {
    Matrix value;
    int iterations = 0;
    double residual = 0.0;
};

namespace detail {

inline void check_transition(const Matrix& s) {
    if (s.rows() != s.cols()) throw InvalidInput("transition matrix must be square");
    if (!s.allFinite()) throw InvalidInput("transition matrix contains non-finite entries");
}

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
}

}  // namespace detail

// =============================================================================
// Resolvent (I - alpha S)^-1
// =============================================================================

/// Applies (I - alpha S)^-1 to right-hand sides. The closed-form variant
/// factorizes once; the iterative variant sums the Neumann series by the
/// fixed-point iteration x <- alpha S x + rhs.
class Resolvent {
public:
    Resolvent(const Matrix& s, double alpha, InnerSolver solver = InnerSolver::closed_form,
              double power_tol = 1e-12, int power_max_iter = 100000)
        : s_(s), alpha_(alpha), solver_(solver), power_tol_(power_tol),
          power_max_iter_(power_max_iter) {
        detail::check_transition(s);
        detail::check_alpha(alpha);
        if (solver_ == InnerSolver::closed_form) {
            const Index n = s.rows();
            lu_.compute(Matrix::Identity(n, n) - alpha * s);
            rcond_ = lu_.rcond();
            if (!(rcond_ > 1e-13))
                throw Error("system (I - alpha S) is ill-conditioned (reciprocal condition estimate " +
                            std::to_string(rcond_) + ")");
        }
    }

    double alpha() const noexcept { return alpha_; }
    double rcond() const noexcept { return rcond_; }

    IterativeSolution solve(const Matrix& rhs) const {
        if (rhs.rows() != s_.rows()) throw InvalidInput("right-hand side has the wrong row count");
        if (solver_ == InnerSolver::closed_form) return {lu_.solve(rhs), 1, 0.0};
        Matrix x = rhs;
        double delta = 0.0;
        for (int it = 1; it <= power_max_iter_; ++it) {
            Matrix next = alpha_ * (s_ * x) + rhs;
            delta = (next - x).cwiseAbs().maxCoeff();
            x = std::move(next);
            if (delta <= power_tol_) return {std::move(x), it, delta};
        }
        throw NonConvergence("resolvent fixed-point iteration exceeded its iteration cap",
                             power_max_iter_, delta, x);
    }

private:
    Matrix s_;
    double alpha_;
    InnerSolver solver_;
    double power_tol_;
    int power_max_iter_;
    Eigen::PartialPivLU<Matrix> lu_;
    double rcond_ = std::numeric_limits<double>::quiet_NaN();
};

// =============================================================================
// Semi-supervised label propagation
// =============================================================================

/// F* = (1 - alpha)(I - alpha S)^-1 Y, via an LU solve.
inline Matrix propagate_closed_form(const Matrix& s, const Matrix& y, double alpha) {
    Resolvent r(s, alpha);
    return (1.0 - alpha) * r.solve(y).value;
}

/// Iterates F(t+1) = alpha S F(t) + (1 - alpha) Y from F(0) = Y until the
/// sup-norm step falls to `tol`.
inline IterativeSolution propagate_power_iteration(const Matrix& s, const Matrix& y, double alpha,
                                                   double tol, int max_iter) {
    detail::check_transition(s);
    detail::check_alpha(alpha);
    if (y.rows() != s.rows()) throw InvalidInput("label matrix has the wrong row count");
    if (!(tol > 0.0)) throw InvalidInput("tolerance must be positive");
    if (max_iter < 1) throw InvalidInput("max_iter must be at least 1");
    const Matrix prior = (1.0 - alpha) * y;
    Matrix f = y;
    double delta = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        Matrix next = alpha * (s * f) + prior;
        delta = (next - f).cwiseAbs().maxCoeff();
        f = std::move(next);
        if (delta <= tol) return {std::move(f), it, delta};
    }
    throw NonConvergence("label propagation iteration exceeded its iteration cap", max_iter, delta, f);
}

/// One-hot n x c encoding of class ids.
inline Matrix one_hot(const Labels& labels, int num_classes) {
    Matrix y = Matrix::Zero(static_cast<Index>(labels.size()), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) throw InvalidInput("label out of range");
        y(static_cast<Index>(i), labels[i]) = 1.0;
    }
    return y;
}

// =============================================================================
// Decisions
// =============================================================================

/// 1 iff f_i >= 0.5 (a tie goes to the positive class).
inline Labels decide_labels(const Vector& f) {
    Labels out(static_cast<std::size_t>(f.size()));
    for (Index i = 0; i < f.size(); ++i) out[static_cast<std::size_t>(i)] = f(i) >= 0.5 ? 1 : 0;
    return out;
}

/// Row-wise argmax; ties go to the lowest class id.
inline Labels decide_labels_multiclass(const Matrix& f) {
    Labels out(static_cast<std::size_t>(f.rows()));
    for (Index i = 0; i < f.rows(); ++i) {
        Index best = 0;
        for (Index h = 1; h < f.cols(); ++h)
            if (f(i, h) > f(i, best)) best = h;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

// =============================================================================
// Baseline and objective
// =============================================================================

/// One-step weighted neighbour vote f_i = sum_j S_ij y_j.
inline Vector weighted_knn_baseline(const Matrix& s, const Vector& soft_labels) {
    detail::check_transition(s);
    if (soft_labels.size() != s.rows()) throw InvalidInput("soft labels have the wrong length");
    return s * soft_labels;
}

inline Vector weighted_knn_baseline(const RowStochasticGraph& g, const Vector& soft_labels) {
    return weighted_knn_baseline(g.transition, soft_labels);
}

/// Q(f) = sum_ij s_ij (f_i - f_j)^2 + mu * sum_i (f_i - y_i)^2.
/// Matrix arguments are summed over columns.
inline double evaluate_objective(const Matrix& f, const Matrix& s, const Matrix& y_ref, double mu_reg) {
    detail::check_transition(s);
    if (f.rows() != s.rows() || y_ref.rows() != f.rows() || y_ref.cols() != f.cols())
        throw InvalidInput("objective arguments have inconsistent shapes");
    if (!(mu_reg >= 0.0)) throw InvalidInput("mu_reg must be non-negative");
    // sum_ij s_ij (f_i - f_j)^2 = sum_i r_i f_i^2 + sum_j c_j f_j^2 - 2 f^T S f
    const Vector row_sums = s.rowwise().sum();
    const Vector col_sums = s.colwise().sum().transpose();
    const Vector sq = f.rowwise().squaredNorm();
    const double smooth = row_sums.dot(sq) + col_sums.dot(sq) - 2.0 * (f.transpose() * s * f).trace();
    return smooth + mu_reg * (f - y_ref).squaredNorm();
}

// =============================================================================
// Propagation with label proportions
// =============================================================================

/// Prior soft labels: every member of bag k takes the bag's positive-class
/// proportion.
inline Vector init_soft_labels(const BagStructure& bags) {
    Vector f(bags.num_instances());
    for (Index i = 0; i < f.size(); ++i) f(i) = bags.proportions()(bags.bag_of(i), 1);
    return f;
}

/// Multiclass prior: each row is its bag's proportion vector.
inline Matrix init_soft_matrix(const BagStructure& bags) {
    Matrix f(bags.num_instances(), bags.num_classes());
    for (Index i = 0; i < f.rows(); ++i) f.row(i) = bags.proportions().row(bags.bag_of(i));
    return f;
}

namespace detail {

template <typename T, typename Target>
PropagationResult<T> run_lp_llp(const Matrix& s, const BagStructure& bags,
                                const PropagationConfig& cfg, T prior, const Target& target) {
    cfg.validate();
    detail::check_transition(s);
    if (s.rows() != bags.num_instances())
        throw InvalidInput("graph size differs from the number of bagged instances");

    const Resolvent resolvent(s, cfg.alpha, cfg.inner_solver, cfg.power_tol, cfg.power_max_iter);
    const ProjectionOptions ap{cfg.ap_tol, cfg.ap_max_iter};
    const double scale = cfg.scale_resolvent ? 1.0 - cfg.alpha : 1.0;

    PropagationDiagnostics diag;
    T f = prior;
    if (cfg.record_objective) diag.objective_trace.push_back(evaluate_objective(f, s, prior, cfg.mu_reg));

    for (int t = 1; t <= cfg.outer_max_iter; ++t) {
        T propagated = scale * resolvent.solve(f).value;
        auto projected = alternating_projections(std::move(propagated), bags, target, ap);
        const double delta = (projected.value - f).cwiseAbs().maxCoeff();
        f = std::move(projected.value);

        diag.outer_iterations = t;
        diag.outer_residual = delta;
        diag.ap_iterations.push_back(projected.iterations);
        diag.residual_trace.push_back(delta);
        if (cfg.record_objective)
            diag.objective_trace.push_back(evaluate_objective(f, s, prior, cfg.mu_reg));
        if (delta <= cfg.outer_tol) return {std::move(f), std::move(diag)};
    }
    throw NonConvergence("bag-constrained propagation did not converge", cfg.outer_max_iter,
                         diag.outer_residual, f);
}

}  // namespace detail

/// Binary propagation with label proportions. Alternates a resolvent step
/// f <- (I - alpha S)^-1 f with alternating projections onto the bag-mass
/// constraints intersected with [0, 1]^n, starting from the bag priors,
/// until successive iterates agree to `outer_tol` in sup norm.
inline PropagationResult<Vector> lp_llp(const Matrix& s, const BagStructure& bags,
                                        const PropagationConfig& cfg = {}) {
    if (bags.num_classes() != 2)
        throw InvalidInput("binary propagation needs a two-class bag structure; use lp_llp_multiclass");
    return detail::run_lp_llp<Vector>(s, bags, cfg, init_soft_labels(bags), bags.target_mass(1));
}

/// Multiclass variant: rows of F live on the simplex and the mass of class h
/// in bag k is pinned to its count.
inline PropagationResult<Matrix> lp_llp_multiclass(const Matrix& s, const BagStructure& bags,
                                                   const PropagationConfig& cfg = {}) {
    return detail::run_lp_llp<Matrix>(s, bags, cfg, init_soft_matrix(bags), bags.counts());
}

}  // namespace lpllp
