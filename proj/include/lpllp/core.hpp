#pragma once

// Shared domain types for learning with label proportions: datasets, bag
// partitions with their class proportions, seeds, and CSV interchange.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace lpllp {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

// =============================================================================
// Errors
// =============================================================================

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Raised by iterative solvers that hit their iteration cap above tolerance.
/// The last iterate is kept so callers can decide whether to accept it.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, int iterations, double residual,
                   Matrix last_iterate = {})
        : Error(what + " (iterations=" + std::to_string(iterations) +
                ", residual=" + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual),
          last_iterate_(std::move(last_iterate)) {}

    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }
    const Matrix& last_iterate() const noexcept { return last_iterate_; }

private:
    int iterations_;
    double residual_;
    Matrix last_iterate_;
};

// =============================================================================
// Seeds
// =============================================================================

struct RngSeed {
    std::uint64_t value = 0;

    friend bool operator==(RngSeed, RngSeed) = default;
};

using Rng = std::mt19937_64;

/// splitmix64 finalizer; mixes a base seed with a stream id so that derived
/// streams are decorrelated and independent of evaluation order.
inline RngSeed derive_seed(RngSeed base, std::uint64_t stream) noexcept {
    std::uint64_t z = base.value + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return RngSeed{z ^ (z >> 31)};
}

inline Rng make_rng(RngSeed seed) { return Rng{seed.value}; }

// =============================================================================
// Dataset
// =============================================================================

struct Dataset {
    Matrix points;                      // n x d
    std::optional<Labels> true_labels;  // hidden ground truth, evaluation only
    int num_classes = 2;

    Index n() const noexcept { return points.rows(); }
    Index d() const noexcept { return points.cols(); }

    void validate() const {
        if (points.rows() < 1 || points.cols() < 1)
            throw InvalidInput("dataset must have at least one row and one feature column");
        if (num_classes < 2)
            throw InvalidInput("dataset must have at least two classes");
        if (!points.allFinite())
            throw InvalidInput("dataset contains non-finite feature values");
        if (true_labels) {
            if (static_cast<Index>(true_labels->size()) != n())
                throw InvalidInput("label vector length does not match point count");
            for (int y : *true_labels)
                if (y < 0 || y >= num_classes)
                    throw InvalidInput("label " + std::to_string(y) + " outside [0, " +
                                       std::to_string(num_classes) + ")");
        }
    }
};

// =============================================================================
// Bags
// =============================================================================

/// Partition of instances into K disjoint bags with per-bag class
/// proportions. Counts are stored as reals: they are integral when derived
/// from ground truth and may be fractional when built from given proportions.
class BagStructure {
public:
    BagStructure(std::vector<int> assignment, Matrix counts)
        : assignment_(std::move(assignment)), counts_(std::move(counts)) {
        const Index num_bags = counts_.rows();
        if (num_bags < 1) throw InvalidInput("bag structure needs at least one bag");
        if (counts_.cols() < 2) throw InvalidInput("bag structure needs at least two classes");
        if (assignment_.empty()) throw InvalidInput("bag assignment is empty");

        sizes_.assign(static_cast<std::size_t>(num_bags), 0);
        for (std::size_t i = 0; i < assignment_.size(); ++i) {
            const int k = assignment_[i];
            if (k < 0 || k >= num_bags)
                throw InvalidInput("instance " + std::to_string(i) + " has bag id " +
                                   std::to_string(k) + " outside [0, " +
                                   std::to_string(num_bags) + ")");
            ++sizes_[static_cast<std::size_t>(k)];
        }
        members_.resize(static_cast<std::size_t>(num_bags));
        for (std::size_t k = 0; k < sizes_.size(); ++k) {
            if (sizes_[k] == 0) throw InvalidInput("bag " + std::to_string(k) + " is empty");
            members_[k].reserve(static_cast<std::size_t>(sizes_[k]));
        }
        for (std::size_t i = 0; i < assignment_.size(); ++i)
            members_[static_cast<std::size_t>(assignment_[i])].push_back(static_cast<Index>(i));

        proportions_.resize(num_bags, counts_.cols());
        for (Index k = 0; k < num_bags; ++k) {
            const double size = static_cast<double>(sizes_[static_cast<std::size_t>(k)]);
            if ((counts_.row(k).array() < -1e-9).any() || !counts_.row(k).allFinite())
                throw InvalidInput("bag " + std::to_string(k) + " has invalid class counts");
            if (std::abs(counts_.row(k).sum() - size) > 1e-9 * std::max(1.0, size))
                throw InvalidInput("class counts of bag " + std::to_string(k) +
                                   " do not sum to its size");
            proportions_.row(k) = counts_.row(k) / size;
        }
    }

    Index num_instances() const noexcept { return static_cast<Index>(assignment_.size()); }
    Index num_bags() const noexcept { return counts_.rows(); }
    int num_classes() const noexcept { return static_cast<int>(counts_.cols()); }

    const std::vector<int>& assignment() const noexcept { return assignment_; }
    int bag_of(Index i) const { return assignment_[static_cast<std::size_t>(i)]; }
    const std::vector<Index>& members(Index k) const { return members_[static_cast<std::size_t>(k)]; }
    Index size(Index k) const { return sizes_[static_cast<std::size_t>(k)]; }
    const std::vector<Index>& sizes() const noexcept { return sizes_; }

    /// K x c matrix of class proportions; rows sum to 1.
    const Matrix& proportions() const noexcept { return proportions_; }
    /// K x c matrix of per-bag class counts (class mass).
    const Matrix& counts() const noexcept { return counts_; }

    /// Target mass b for one class: b_k = count of class h in bag k.
    Vector target_mass(int cls = 1) const { return counts_.col(cls); }

private:
    std::vector<int> assignment_;
    Matrix counts_;
    std::vector<Index> sizes_;
    std::vector<std::vector<Index>> members_;
    Matrix proportions_;
};

inline int count_bags(const std::vector<int>& assignment) {
    if (assignment.empty()) throw InvalidInput("bag assignment is empty");
    const int max_id = *std::max_element(assignment.begin(), assignment.end());
    if (max_id < 0) throw InvalidInput("bag ids must be non-negative");
    return max_id + 1;
}

/// Bag structure with proportions counted from ground-truth labels.
inline BagStructure make_bag_structure(const std::vector<int>& assignment, const Labels& labels,
                                       int num_classes = 2) {
    if (assignment.size() != labels.size())
        throw InvalidInput("assignment and labels differ in length");
    if (num_classes < 2) throw InvalidInput("need at least two classes");
    const int num_bags = count_bags(assignment);
    Matrix counts = Matrix::Zero(num_bags, num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        const int k = assignment[i];
        if (y < 0 || y >= num_classes)
            throw InvalidInput("label " + std::to_string(y) + " outside class range");
        if (k < 0) throw InvalidInput("negative bag id at instance " + std::to_string(i));
        counts(k, y) += 1.0;
    }
    return BagStructure(assignment, std::move(counts));
}

/// Bag structure from user-supplied proportions (K x c). Mass b = pi * |B_k|
/// is left fractional.
inline BagStructure make_bag_structure_from_proportions(const std::vector<int>& assignment,
                                                        const Matrix& proportions) {
    const int num_bags = count_bags(assignment);
    if (proportions.rows() != num_bags)
        throw InvalidInput("proportion table has " + std::to_string(proportions.rows()) +
                           " rows but assignment uses " + std::to_string(num_bags) + " bags");
    std::vector<double> sizes(static_cast<std::size_t>(num_bags), 0.0);
    for (int k : assignment) {
        if (k < 0) throw InvalidInput("negative bag id");
        sizes[static_cast<std::size_t>(k)] += 1.0;
    }
    Matrix counts(proportions.rows(), proportions.cols());
    for (Index k = 0; k < proportions.rows(); ++k) {
        const auto row = proportions.row(k);
        if ((row.array() < 0.0).any() || (row.array() > 1.0).any() || !row.allFinite())
            throw InvalidInput("proportions of bag " + std::to_string(k) + " outside [0, 1]");
        if (std::abs(row.sum() - 1.0) > 1e-9)
            throw InvalidInput("proportions of bag " + std::to_string(k) + " do not sum to 1");
        counts.row(k) = row * sizes[static_cast<std::size_t>(k)];
    }
    return BagStructure(assignment, std::move(counts));
}

// =============================================================================
// CSV interchange
// =============================================================================

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return cells;
}

inline std::optional<double> parse_real(std::string_view cell) {
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
    return value;
}

inline std::optional<long long> parse_integer(std::string_view cell) {
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
    return value;
}

inline std::string format_real(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace detail

/// Loads a header-first CSV of real-valued features. When `label_column` is
/// given, that column is parsed as integer class ids and removed from the
/// features; the class count is inferred as max label + 1 (at least 2).
inline Dataset load_dataset_csv(const std::string& path,
                                const std::optional<std::string>& label_column = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open dataset file '" + path + "'");

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        for (auto cell : detail::split_csv_line(line)) header.emplace_back(cell);
        break;
    }
    if (header.empty()) throw InvalidInput("dataset file '" + path + "' is empty");

    std::optional<std::size_t> label_idx;
    if (label_column) {
        const auto it = std::find(header.begin(), header.end(), *label_column);
        if (it == header.end())
            throw InvalidInput("label column '" + *label_column + "' not in header of '" + path + "'");
        label_idx = static_cast<std::size_t>(it - header.begin());
    }
    const std::size_t num_features = header.size() - (label_idx ? 1 : 0);
    if (num_features == 0) throw InvalidInput("dataset file '" + path + "' has no feature columns");

    std::vector<double> values;
    Labels labels;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw InvalidInput("malformed row at line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " cells, got " +
                               std::to_string(cells.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (label_idx && j == *label_idx) {
                const auto y = detail::parse_integer(cells[j]);
                if (!y || *y < 0)
                    throw InvalidInput("invalid label '" + std::string(cells[j]) + "' at line " +
                                       std::to_string(line_no));
                labels.push_back(static_cast<int>(*y));
                continue;
            }
            const auto v = detail::parse_real(cells[j]);
            if (!v)
                throw InvalidInput("non-numeric value '" + std::string(cells[j]) + "' in column '" +
                                   header[j] + "' at line " + std::to_string(line_no));
            if (!std::isfinite(*v))
                throw InvalidInput("non-finite value in column '" + header[j] + "' at line " +
                                   std::to_string(line_no));
            values.push_back(*v);
        }
        ++rows;
    }
    if (rows == 0) throw InvalidInput("dataset file '" + path + "' has no data rows");

    Dataset ds;
    ds.points = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), static_cast<Index>(rows), static_cast<Index>(num_features));
    if (label_idx) {
        ds.num_classes = std::max(2, *std::max_element(labels.begin(), labels.end()) + 1);
        ds.true_labels = std::move(labels);
    }
    ds.validate();
    return ds;
}

/// Writes features as x0..x{d-1}, plus a trailing `label` column when the
/// dataset carries ground truth.
inline void write_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    for (Index j = 0; j < ds.d(); ++j) out << (j ? "," : "") << 'x' << j;
    if (ds.true_labels) out << ",label";
    out << '\n';
    for (Index i = 0; i < ds.n(); ++i) {
        for (Index j = 0; j < ds.d(); ++j) out << (j ? "," : "") << detail::format_real(ds.points(i, j));
        if (ds.true_labels) out << ',' << (*ds.true_labels)[static_cast<std::size_t>(i)];
        out << '\n';
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

/// Reads `instance_index,bag_id` rows; every instance in [0, n) must appear once.
inline std::vector<int> load_bag_csv(const std::string& path, Index n) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open bag file '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (!header_seen) {
            if (cells.size() != 2 || cells[0] != "instance_index" || cells[1] != "bag_id")
                throw InvalidInput("bag file header must be 'instance_index,bag_id'");
            header_seen = true;
            continue;
        }
        if (cells.size() != 2)
            throw InvalidInput("malformed bag row at line " + std::to_string(line_no));
        const auto idx = detail::parse_integer(cells[0]);
        const auto bag = detail::parse_integer(cells[1]);
        if (!idx || !bag || *idx < 0 || *idx >= n || *bag < 0)
            throw InvalidInput("invalid bag row at line " + std::to_string(line_no));
        auto& slot = assignment[static_cast<std::size_t>(*idx)];
        if (slot != -1)
            throw InvalidInput("instance " + std::to_string(*idx) + " assigned twice (line " +
                               std::to_string(line_no) + ")");
        slot = static_cast<int>(*bag);
    }
    if (!header_seen) throw InvalidInput("bag file '" + path + "' is empty");
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == -1)
            throw InvalidInput("instance " + std::to_string(i) + " missing from bag file");
    return assignment;
}

inline void write_bag_csv(const std::string& path, const std::vector<int>& assignment) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "instance_index,bag_id\n";
    for (std::size_t i = 0; i < assignment.size(); ++i) out << i << ',' << assignment[i] << '\n';
    if (!out) throw Error("failed writing '" + path + "'");
}

/// Reads `bag_id,p0,p1,...` rows into a K x c proportion table.
inline Matrix load_proportions_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open proportions file '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    std::vector<std::pair<long long, std::vector<double>>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (width == 0) {
            if (cells.size() < 3 || cells[0] != "bag_id")
                throw InvalidInput("proportions header must be 'bag_id,p0,p1,...'");
            width = cells.size();
            continue;
        }
        if (cells.size() != width)
            throw InvalidInput("malformed proportions row at line " + std::to_string(line_no));
        const auto bag = detail::parse_integer(cells[0]);
        if (!bag || *bag < 0) throw InvalidInput("invalid bag id at line " + std::to_string(line_no));
        std::vector<double> p;
        for (std::size_t j = 1; j < cells.size(); ++j) {
            const auto v = detail::parse_real(cells[j]);
            if (!v) throw InvalidInput("non-numeric proportion at line " + std::to_string(line_no));
            p.push_back(*v);
        }
        rows.emplace_back(*bag, std::move(p));
    }
    if (rows.empty()) throw InvalidInput("proportions file '" + path + "' has no rows");
    Matrix table = Matrix::Constant(static_cast<Index>(rows.size()), static_cast<Index>(width - 1),
                                    std::nan(""));
    for (const auto& [bag, p] : rows) {
        if (bag >= table.rows())
            throw InvalidInput("bag ids in proportions file must be dense 0..K-1");
        for (std::size_t j = 0; j < p.size(); ++j) table(bag, static_cast<Index>(j)) = p[j];
    }
    if (!table.allFinite()) throw InvalidInput("proportions file lists a bag twice or skips one");
    return table;
}

inline void write_proportions_csv(const std::string& path, const Matrix& proportions) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "bag_id";
    for (Index j = 0; j < proportions.cols(); ++j) out << ",p" << j;
    out << '\n';
    for (Index k = 0; k < proportions.rows(); ++k) {
        out << k;
        for (Index j = 0; j < proportions.cols(); ++j) out << ',' << detail::format_real(proportions(k, j));
        out << '\n';
    }
    if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace lpllp
