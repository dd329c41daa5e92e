#pragma once

#include "lpllp/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace lpllp {

// =============================================================================
// Synthetic datasets
// =============================================================================

/// Four unit-variance Gaussian clusters centred on the corners (0,0), (10,0),
/// (0,10), (10,10), stored in that corner order, n_total/4 points each.
/// Diagonal corners share a class: {(0,0),(10,10)} -> 0, the others -> 1.
inline Dataset gen_xor(Index n_total, RngSeed seed, double side = 10.0) {
    if (n_total < 4) throw InvalidInput("XOR dataset needs at least 4 points");
    if (n_total % 4 != 0) throw InvalidInput("XOR dataset size must be divisible by 4");
    constexpr double corners[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    constexpr int classes[4] = {0, 1, 1, 0};

    Rng rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const Index per = n_total / 4;

    Dataset ds;
    ds.points.resize(n_total, 2);
    Labels labels(static_cast<std::size_t>(n_total));
    for (Index c = 0; c < 4; ++c) {
        for (Index j = 0; j < per; ++j) {
            const Index i = c * per + j;
            ds.points(i, 0) = side * corners[c][0] + noise(rng);
            ds.points(i, 1) = side * corners[c][1] + noise(rng);
            labels[static_cast<std::size_t>(i)] = classes[c];
        }
    }
    ds.true_labels = std::move(labels);
    return ds;
}

struct HalfKernelParams {
    double inner_radius = 5.0;
    double outer_radius = 8.0;
    double noise_sd = 0.5;
};

/// Two nested half-ring arcs: class k has n_total/2 points at
/// r_k (cos t, sin t) + N(0, noise_sd^2 I) with t ~ U[0, pi].
/// Class 0 occupies the inner arc and is stored first.
inline Dataset gen_half_kernel(Index n_total, RngSeed seed, const HalfKernelParams& p = {}) {
    if (n_total < 2 || n_total % 2 != 0)
        throw InvalidInput("half-kernel dataset size must be even and at least 2");
    if (!(p.noise_sd >= 0.0)) throw InvalidInput("noise_sd must be non-negative");
    if (!(p.inner_radius > 0.0 && p.outer_radius > p.inner_radius))
        throw InvalidInput("half-kernel radii must satisfy 0 < inner < outer");

    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    std::normal_distribution<double> noise(0.0, 1.0);
    const Index per = n_total / 2;

    Dataset ds;
    ds.points.resize(n_total, 2);
    Labels labels(static_cast<std::size_t>(n_total));
    for (int cls = 0; cls < 2; ++cls) {
        const double r = cls == 0 ? p.inner_radius : p.outer_radius;
        for (Index j = 0; j < per; ++j) {
            const Index i = cls * per + j;
            const double t = angle(rng);
            const double ex = noise(rng);
            const double ey = noise(rng);
            ds.points(i, 0) = r * std::cos(t) + p.noise_sd * ex;
            ds.points(i, 1) = r * std::sin(t) + p.noise_sd * ey;
            labels[static_cast<std::size_t>(i)] = cls;
        }
    }
    ds.true_labels = std::move(labels);
    return ds;
}

// =============================================================================
// Bag assignment
// =============================================================================

/// Binary bag layout: positive-class proportion per bag and optional fixed
/// bag sizes. Empty `bag_sizes` lets assign_bags pick a near-equal split.
struct BagSpec {
    std::vector<double> proportions;
    std::vector<Index> bag_sizes;
    std::string label = "custom";

    Index num_bags() const noexcept { return static_cast<Index>(proportions.size()); }

    void validate() const {
        if (proportions.empty()) throw InvalidInput("bag spec needs at least one bag");
        for (double p : proportions)
            if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("bag proportion outside [0, 1]");
        if (!bag_sizes.empty() && bag_sizes.size() != proportions.size())
            throw InvalidInput("bag spec lists " + std::to_string(bag_sizes.size()) + " sizes for " +
                               std::to_string(proportions.size()) + " bags");
        for (Index s : bag_sizes)
            if (s < 1) throw InvalidInput("bag sizes must be positive");
    }
};

/// Configuration A: positive proportions (0.60, 0.40, 0.50).
inline BagSpec bag_spec_a() { return BagSpec{{0.60, 0.40, 0.50}, {}, "A"}; }
/// Configuration B: positive proportions (0.85, 0.25, 0.40).
inline BagSpec bag_spec_b() { return BagSpec{{0.85, 0.25, 0.40}, {}, "B"}; }

inline BagSpec bag_spec_by_name(const std::string& name) {
    if (name == "A") return bag_spec_a();
    if (name == "B") return bag_spec_b();
    throw InvalidInput("unknown bag configuration '" + name + "' (expected A or B)");
}

class InfeasibleSpec : public InvalidInput {
public:
    InfeasibleSpec(const std::string& what, long long positive_deficit, long long negative_deficit)
        : InvalidInput(what + " (positive deficit " + std::to_string(positive_deficit) +
                       ", negative deficit " + std::to_string(negative_deficit) + ")"),
          positive_deficit_(positive_deficit), negative_deficit_(negative_deficit) {}

    long long positive_deficit() const noexcept { return positive_deficit_; }
    long long negative_deficit() const noexcept { return negative_deficit_; }

private:
    long long positive_deficit_;
    long long negative_deficit_;
};

/// Sizes and positive counts realizing a BagSpec on a label pool.
struct BagPlan {
    std::vector<Index> sizes;
    std::vector<Index> positives;
};

namespace detail {

// Positive counts c with |pi * s - c| <= 0.5 and 0 <= c <= s.
inline std::pair<Index, Index> admissible_positives(double pi, Index size) {
    const double target = pi * static_cast<double>(size);
    const double eps = 1e-9;
    const Index lo = std::max<Index>(0, static_cast<Index>(std::ceil(target - 0.5 - eps)));
    const Index hi = std::min<Index>(size, static_cast<Index>(std::floor(target + 0.5 + eps)));
    return {lo, hi};
}

// Given fixed sizes, choose admissible positive counts summing to `pool`:
// start from the lower bounds, then add one to the bags with the largest
// fractional remainder first. Empty when the pool is out of range.
inline std::optional<std::vector<Index>> fit_positive_counts(const std::vector<double>& pis,
                                                             const std::vector<Index>& sizes,
                                                             Index pool) {
    const std::size_t k = sizes.size();
    std::vector<Index> lo(k), hi(k);
    Index sum_lo = 0, sum_hi = 0;
    for (std::size_t j = 0; j < k; ++j) {
        std::tie(lo[j], hi[j]) = admissible_positives(pis[j], sizes[j]);
        if (lo[j] > hi[j]) return std::nullopt;
        sum_lo += lo[j];
        sum_hi += hi[j];
    }
    if (pool < sum_lo || pool > sum_hi) return std::nullopt;

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ra = pis[a] * static_cast<double>(sizes[a]) - static_cast<double>(lo[a]);
        const double rb = pis[b] * static_cast<double>(sizes[b]) - static_cast<double>(lo[b]);
        return ra > rb;
    });
    std::vector<Index> counts = lo;
    Index remaining = pool - sum_lo;
    for (std::size_t j : order) {
        if (remaining == 0) break;
        const Index add = std::min(remaining, hi[j] - lo[j]);
        counts[j] += add;
        remaining -= add;
    }
    return counts;
}

// Enumerates size perturbations with max |delta| == radius and zero total,
// in a fixed lexicographic order.
inline bool visit_offsets(std::vector<Index>& delta, std::size_t pos, Index radius, Index budget,
                          bool hit, const auto& visit) {
    const std::size_t k = delta.size();
    if (pos + 1 == k) {
        const Index last = -budget;
        if (std::abs(last) > radius) return false;
        if (!hit && std::abs(last) != radius) return false;
        delta[pos] = last;
        return visit(delta);
    }
    for (Index d = -radius; d <= radius; ++d) {
        delta[pos] = d;
        if (visit_offsets(delta, pos + 1, radius, budget + d, hit || std::abs(d) == radius, visit))
            return true;
    }
    return false;
}

}  // namespace detail

/// Finds bag sizes and positive counts for `spec` on a pool of `n` instances
/// with `positives` positives. Fixed sizes are taken as given; otherwise the
/// near-equal split is searched outward one unit at a time until every bag
/// can hold round(pi_k |B_k|) positives and the totals match the pool.
inline BagPlan plan_bags(const BagSpec& spec, Index n, Index positives) {
    spec.validate();
    const std::size_t k = spec.proportions.size();
    if (static_cast<Index>(k) > n) throw InvalidInput("more bags than instances");
    if (positives < 0 || positives > n) throw InvalidInput("positive count outside [0, n]");

    auto deficits = [&](const std::vector<Index>& sizes) {
        long long want = 0;
        for (std::size_t j = 0; j < k; ++j)
            want += std::llround(spec.proportions[j] * static_cast<double>(sizes[j]));
        const long long pos_def = std::max<long long>(0, want - positives);
        const long long neg_def = std::max<long long>(0, (n - want) - (n - positives));
        return std::pair{pos_def, neg_def};
    };

    if (!spec.bag_sizes.empty()) {
        Index total = 0;
        for (Index s : spec.bag_sizes) total += s;
        if (total != n)
            throw InvalidInput("bag sizes sum to " + std::to_string(total) + " but the pool has " +
                               std::to_string(n) + " instances");
        if (auto counts = detail::fit_positive_counts(spec.proportions, spec.bag_sizes, positives))
            return {spec.bag_sizes, *counts};
        const auto [p, q] = deficits(spec.bag_sizes);
        throw InfeasibleSpec("label pool cannot satisfy the bag proportions", p, q);
    }

    std::vector<Index> base(k, n / static_cast<Index>(k));
    for (std::size_t j = 0; j < static_cast<std::size_t>(n % static_cast<Index>(k)); ++j) ++base[j];

    if (auto counts = detail::fit_positive_counts(spec.proportions, base, positives))
        return {base, *counts};
    if (k > 1) {
        // Every split with non-empty bags is reachable within this radius.
        const Index max_radius = n - static_cast<Index>(k) + 1 - *std::min_element(base.begin(), base.end());
        std::vector<Index> delta(k, 0);
        long long budget = 20'000'000;
        for (Index radius = 1; radius <= max_radius && budget > 0; ++radius) {
            std::optional<BagPlan> found;
            detail::visit_offsets(delta, 0, radius, 0, false, [&](const std::vector<Index>& d) {
                if (--budget < 0) return true;
                std::vector<Index> sizes(k);
                for (std::size_t j = 0; j < k; ++j) {
                    sizes[j] = base[j] + d[j];
                    if (sizes[j] < 1) return false;
                }
                if (auto counts = detail::fit_positive_counts(spec.proportions, sizes, positives)) {
                    found = BagPlan{sizes, *counts};
                    return true;
                }
                return false;
            });
            if (found) return *found;
        }
    }
    const auto [p, q] = deficits(base);
    throw InfeasibleSpec("no bag size split satisfies the proportions on this label pool", p, q);
}

/// Random bag assignment of the instances listed in `pool` (indices into
/// `labels`, binary) that realizes `spec`. Returns the bag id per pool entry.
inline std::vector<int> assign_bags_subset(const Labels& labels, const std::vector<Index>& pool,
                                           const BagSpec& spec, RngSeed seed) {
    std::vector<Index> pos, neg;
    for (Index i : pool) {
        const int y = labels.at(static_cast<std::size_t>(i));
        if (y == 1) pos.push_back(i);
        else if (y == 0) neg.push_back(i);
        else throw InvalidInput("bag assignment needs binary labels");
    }
    const BagPlan plan = plan_bags(spec, static_cast<Index>(pool.size()), static_cast<Index>(pos.size()));

    Rng rng = make_rng(seed);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);

    std::vector<int> bag_of_index(labels.size(), -1);
    std::size_t next_pos = 0, next_neg = 0;
    for (std::size_t j = 0; j < plan.sizes.size(); ++j) {
        for (Index c = 0; c < plan.positives[j]; ++c) bag_of_index[static_cast<std::size_t>(pos[next_pos++])] = static_cast<int>(j);
        for (Index c = 0; c < plan.sizes[j] - plan.positives[j]; ++c)
            bag_of_index[static_cast<std::size_t>(neg[next_neg++])] = static_cast<int>(j);
    }
    std::vector<int> out;
    out.reserve(pool.size());
    for (Index i : pool) out.push_back(bag_of_index[static_cast<std::size_t>(i)]);
    return out;
}

/// Random bag assignment over the whole dataset.
inline BagStructure assign_bags(const Dataset& ds, const BagSpec& spec, RngSeed seed) {
    if (!ds.true_labels) throw InvalidInput("bag assignment needs ground-truth labels");
    if (ds.num_classes != 2) throw InvalidInput("bag specs describe binary datasets only");
    std::vector<Index> pool(static_cast<std::size_t>(ds.n()));
    std::iota(pool.begin(), pool.end(), Index{0});
    return make_bag_structure(assign_bags_subset(*ds.true_labels, pool, spec, seed), *ds.true_labels, 2);
}

}  // namespace lpllp
