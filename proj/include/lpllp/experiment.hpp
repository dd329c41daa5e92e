#pragma once

// Repeated, seeded LLP experiments: data generation, train bags plus a test
// bag of known proportion, kernel bandwidth selection by the f^T S f score,
// accuracy aggregation and result serialization.

#include "lpllp/core.hpp"
#include "lpllp/datagen.hpp"
#include "lpllp/graph.hpp"
#include "lpllp/propagation.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace lpllp {

using json = nlohmann::json;

// =============================================================================
// Configuration
// =============================================================================

/// 13 log-spaced bandwidths from 1e-3 to 1e3.
inline std::vector<double> default_gamma_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 13; ++i) grid.push_back(std::pow(10.0, -3.0 + 0.5 * i));
    return grid;
}

struct ExperimentConfig {
    std::string name;
    std::string dataset = "xor";  // xor | half_kernel | csv
    double noise_sd = 0.5;
    double inner_radius = 5.0;
    double outer_radius = 8.0;
    std::string csv_path;
    std::string label_column = "label";

    std::string bag_config = "B";  // A | B | custom
    std::vector<double> bag_proportions;
    std::vector<Index> bag_sizes;

    Index n_train = 600;
    double test_fraction = 0.2;
    int repeats = 25;
    double alpha = 0.5;
    std::vector<double> gamma_grid = default_gamma_grid();
    double outer_tol = 1e-5;
    int outer_max_iter = 200;
    double ap_tol = 1e-6;
    int ap_max_iter = 1000;
    bool scale_resolvent = false;
    std::string inner_solver = "closed_form";
    bool standardize = false;
    bool soft_score = false;
    bool eval_all = false;
    std::uint64_t seed = 0;
    int threads = 0;  // 0: one worker per hardware thread

    BagSpec bag_spec() const {
        if (bag_config == "custom") {
            BagSpec spec{bag_proportions, bag_sizes, "custom"};
            spec.validate();
            return spec;
        }
        BagSpec spec = bag_spec_by_name(bag_config);
        spec.bag_sizes = bag_sizes;
        spec.validate();
        return spec;
    }

    PropagationConfig propagation() const {
        PropagationConfig cfg;
        cfg.alpha = alpha;
        cfg.outer_tol = outer_tol;
        cfg.outer_max_iter = outer_max_iter;
        cfg.ap_tol = ap_tol;
        cfg.ap_max_iter = ap_max_iter;
        cfg.scale_resolvent = scale_resolvent;
        if (inner_solver == "closed_form") cfg.inner_solver = InnerSolver::closed_form;
        else if (inner_solver == "power_iteration") cfg.inner_solver = InnerSolver::power_iteration;
        else throw InvalidInput("inner_solver must be closed_form or power_iteration");
        return cfg;
    }

    Index n_test() const { return static_cast<Index>(std::llround(test_fraction * static_cast<double>(n_train))); }

    /// Table row code such as "600B".
    std::string format_code() const {
        return std::to_string(n_train) + (bag_config == "custom" ? std::string("C") : bag_config);
    }

    void validate() const {
        if (dataset != "xor" && dataset != "half_kernel" && dataset != "csv")
            throw InvalidInput("dataset must be xor, half_kernel or csv");
        if (dataset == "csv" && csv_path.empty()) throw InvalidInput("csv dataset needs csv_path");
        if (repeats < 1) throw InvalidInput("repeats must be at least 1");
        if (gamma_grid.empty()) throw InvalidInput("gamma_grid must not be empty");
        for (double g : gamma_grid)
            if (!(g > 0.0) || !std::isfinite(g)) throw InvalidInput("gamma_grid values must be positive");
        if (n_train < 1 && dataset != "csv") throw InvalidInput("n_train must be positive");
        if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw InvalidInput("test_fraction must lie in [0, 1)");
        if (threads < 0) throw InvalidInput("threads must be non-negative");
        bag_spec();
        propagation().validate();
    }
};

inline void to_json(json& j, const ExperimentConfig& c) {
    j = json{{"name", c.name},
             {"dataset", c.dataset},
             {"noise_sd", c.noise_sd},
             {"inner_radius", c.inner_radius},
             {"outer_radius", c.outer_radius},
             {"csv_path", c.csv_path},
             {"label_column", c.label_column},
             {"bag_config", c.bag_config},
             {"bag_proportions", c.bag_proportions},
             {"bag_sizes", c.bag_sizes},
             {"n_train", c.n_train},
             {"test_fraction", c.test_fraction},
             {"repeats", c.repeats},
             {"alpha", c.alpha},
             {"gamma_grid", c.gamma_grid},
             {"outer_tol", c.outer_tol},
             {"outer_max_iter", c.outer_max_iter},
             {"ap_tol", c.ap_tol},
             {"ap_max_iter", c.ap_max_iter},
             {"scale_resolvent", c.scale_resolvent},
             {"inner_solver", c.inner_solver},
             {"standardize", c.standardize},
             {"soft_score", c.soft_score},
             {"eval_all", c.eval_all},
             {"seed", c.seed},
             {"threads", c.threads}};
}

/// Unknown keys are rejected; absent keys keep their defaults.
inline void from_json(const json& j, ExperimentConfig& c) {
    if (!j.is_object()) throw InvalidInput("experiment config must be a JSON object");
    const json defaults = ExperimentConfig{};
    for (const auto& [key, _] : j.items())
        if (!defaults.contains(key)) throw InvalidInput("unknown experiment config key '" + key + "'");
    auto read = [&](const char* key, auto& field) {
        if (!j.contains(key)) return;
        try {
            j.at(key).get_to(field);
        } catch (const json::exception& e) {
            throw InvalidInput(std::string("bad value for config key '") + key + "': " + e.what());
        }
    };
    read("name", c.name);
    read("dataset", c.dataset);
    read("noise_sd", c.noise_sd);
    read("inner_radius", c.inner_radius);
    read("outer_radius", c.outer_radius);
    read("csv_path", c.csv_path);
    read("label_column", c.label_column);
    read("bag_config", c.bag_config);
    read("bag_proportions", c.bag_proportions);
    read("bag_sizes", c.bag_sizes);
    read("n_train", c.n_train);
    read("test_fraction", c.test_fraction);
    read("repeats", c.repeats);
    read("alpha", c.alpha);
    read("gamma_grid", c.gamma_grid);
    read("outer_tol", c.outer_tol);
    read("outer_max_iter", c.outer_max_iter);
    read("ap_tol", c.ap_tol);
    read("ap_max_iter", c.ap_max_iter);
    read("scale_resolvent", c.scale_resolvent);
    read("inner_solver", c.inner_solver);
    read("standardize", c.standardize);
    read("soft_score", c.soft_score);
    read("eval_all", c.eval_all);
    read("seed", c.seed);
    read("threads", c.threads);
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw InvalidInput("config file '" + path + "' is not valid JSON: " + e.what());
    }
    ExperimentConfig cfg = j.get<ExperimentConfig>();
    cfg.validate();
    return cfg;
}

/// Applies a table format code like "120A" to a config.
inline ExperimentConfig with_format(ExperimentConfig cfg, const std::string& code) {
    if (code.size() < 2) throw InvalidInput("format code '" + code + "' is too short");
    const std::string digits = code.substr(0, code.size() - 1);
    const char letter = code.back();
    if (!std::all_of(digits.begin(), digits.end(), [](char ch) { return ch >= '0' && ch <= '9'; }) ||
        (letter != 'A' && letter != 'B'))
        throw InvalidInput("format code '" + code + "' must look like <n_train><A|B>");
    cfg.n_train = std::stoll(digits);
    cfg.bag_config = std::string(1, letter);
    cfg.bag_sizes.clear();
    return cfg;
}

// =============================================================================
// Scoring
// =============================================================================

/// Fraction of matching positions.
inline double accuracy(const Labels& predicted, const Labels& truth) {
    if (predicted.size() != truth.size())
        throw InvalidInput("accuracy needs equal-length label vectors");
    if (predicted.empty()) throw InvalidInput("accuracy of an empty label vector is undefined");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

inline double accuracy_on(const Labels& predicted, const Labels& truth, const std::vector<Index>& subset) {
    if (subset.empty()) throw InvalidInput("accuracy over an empty subset is undefined");
    std::size_t hits = 0;
    for (Index i : subset) hits += predicted.at(static_cast<std::size_t>(i)) == truth.at(static_cast<std::size_t>(i));
    return static_cast<double>(hits) / static_cast<double>(subset.size());
}

/// Smoothness score fbar^T S fbar of a +-1 labelling (or any real vector).
inline double labeling_score(const Matrix& s, const Vector& fbar) {
    if (fbar.size() != s.rows()) throw InvalidInput("labelling length differs from graph size");
    return fbar.dot(s * fbar);
}

inline Vector signed_labels(const Labels& labels) {
    Vector out(static_cast<Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) out(static_cast<Index>(i)) = labels[i] == 1 ? 1.0 : -1.0;
    return out;
}

struct GammaSelection {
    double gamma = 0.0;
    std::size_t index = 0;
    std::vector<double> scores;       // -inf where the solver failed
    std::vector<std::string> errors;  // empty where it succeeded
    Vector soft_labels;               // solution at the selected gamma
    PropagationDiagnostics diagnostics;
};

/// Runs the bag-constrained solver for every bandwidth in the grid and keeps
/// the one whose thresholded labelling scores highest on its own graph.
/// Ties go to the smaller bandwidth. Sees only features and bags.
inline GammaSelection select_gamma(const Matrix& points, const BagStructure& bags,
                                   const std::vector<double>& grid, const PropagationConfig& cfg,
                                   bool soft_score = false) {
    if (grid.empty()) throw InvalidInput("gamma grid is empty");
    GammaSelection sel;
    sel.scores.assign(grid.size(), -std::numeric_limits<double>::infinity());
    sel.errors.assign(grid.size(), std::string{});
    bool any = false;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        try {
            const RowStochasticGraph graph = build_graph(points, grid[g]);
            auto solved = lp_llp(graph.transition, bags, cfg);
            const Vector fbar = soft_score ? Vector((2.0 * solved.soft_labels.array() - 1.0).matrix())
                                           : signed_labels(decide_labels(solved.soft_labels));
            const double score = labeling_score(graph.transition, fbar);
            sel.scores[g] = score;
            const bool better = !any || score > sel.scores[sel.index] ||
                                (score == sel.scores[sel.index] && grid[g] < grid[sel.index]);
            if (better) {
                sel.index = g;
                sel.gamma = grid[g];
                sel.soft_labels = std::move(solved.soft_labels);
                sel.diagnostics = std::move(solved.diagnostics);
                any = true;
            }
        } catch (const Error& e) {
            sel.errors[g] = e.what();
        }
    }
    if (!any) {
        std::string msg = "every grid bandwidth failed";
        for (std::size_t g = 0; g < grid.size(); ++g) msg += "; gamma=" + detail::format_real(grid[g]) + ": " + sel.errors[g];
        throw Error(msg);
    }
    return sel;
}

// =============================================================================
// Repeats
// =============================================================================

/// Data for one repeat. The train pool is [0, n_train) and the test bag is
/// the last bag, holding [n_train, n).
struct RepeatData {
    Dataset dataset;
    BagStructure bags;
    std::vector<Index> train_indices;
    std::vector<Index> test_indices;
};

struct RepeatResult {
    int index = 0;
    std::uint64_t seed = 0;
    bool completed = false;
    std::string error;
    double accuracy = 0.0;        // test bag
    double train_accuracy = 0.0;  // train bags
    double all_accuracy = 0.0;    // every instance
    double gamma = 0.0;
    std::vector<double> gamma_scores;
    PropagationDiagnostics diagnostics;
};

struct ExperimentResult {
    std::string name;
    std::string dataset;
    std::string format;
    std::vector<RepeatResult> repeats;
    double mean = 0.0;
    double stddev = 0.0;
    double mean_all = 0.0;
    double std_all = 0.0;
    int completed = 0;
    bool eval_all = false;
    double wall_time_seconds = 0.0;  // not serialized; varies run to run

    double completion_rate() const {
        return repeats.empty() ? 0.0 : static_cast<double>(completed) / static_cast<double>(repeats.size());
    }
};

/// Sample mean and (n-1) standard deviation; std is 0 for a single value.
inline std::pair<double, double> mean_and_std(const std::vector<double>& xs) {
    if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

inline void aggregate(ExperimentResult& r) {
    std::sort(r.repeats.begin(), r.repeats.end(),
              [](const RepeatResult& a, const RepeatResult& b) { return a.index < b.index; });
    std::vector<double> test, all;
    for (const auto& rep : r.repeats) {
        if (!rep.completed) continue;
        test.push_back(rep.accuracy);
        all.push_back(rep.all_accuracy);
    }
    r.completed = static_cast<int>(test.size());
    std::tie(r.mean, r.stddev) = mean_and_std(test);
    std::tie(r.mean_all, r.std_all) = mean_and_std(all);
}

namespace detail {

inline Dataset concat(const Dataset& a, const Dataset& b) {
    Dataset out;
    out.points.resize(a.n() + b.n(), a.d());
    out.points << a.points, b.points;
    Labels labels = *a.true_labels;
    labels.insert(labels.end(), b.true_labels->begin(), b.true_labels->end());
    out.true_labels = std::move(labels);
    out.num_classes = 2;
    return out;
}

inline Dataset generate(const ExperimentConfig& cfg, Index n, RngSeed seed) {
    if (cfg.dataset == "xor") return gen_xor(n, seed);
    return gen_half_kernel(n, seed, HalfKernelParams{cfg.inner_radius, cfg.outer_radius, cfg.noise_sd});
}

inline Dataset take_rows(const Dataset& src, const std::vector<Index>& rows) {
    Dataset out;
    out.points.resize(static_cast<Index>(rows.size()), src.d());
    Labels labels;
    labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.points.row(static_cast<Index>(r)) = src.points.row(rows[r]);
        labels.push_back(src.true_labels->at(static_cast<std::size_t>(rows[r])));
    }
    out.true_labels = std::move(labels);
    out.num_classes = src.num_classes;
    return out;
}

}  // namespace detail

/// Builds the train pool, the test set, and the bags for repeat `index`.
/// `csv_source` is used when the config names a CSV dataset.
inline RepeatData prepare_repeat(const ExperimentConfig& cfg, int index,
                                 const Dataset* csv_source = nullptr) {
    const RngSeed repeat_seed = derive_seed(RngSeed{cfg.seed}, static_cast<std::uint64_t>(index));
    const RngSeed train_seed = derive_seed(repeat_seed, 1);
    const RngSeed test_seed = derive_seed(repeat_seed, 2);
    const RngSeed bag_seed = derive_seed(repeat_seed, 3);

    Dataset train, test;
    if (cfg.dataset == "csv") {
        if (!csv_source) throw InvalidInput("csv experiment needs a loaded dataset");
        if (!csv_source->true_labels) throw InvalidInput("csv experiment needs a label column");
        if (csv_source->num_classes != 2) throw InvalidInput("csv experiment needs binary labels");
        const Index total = csv_source->n();
        Index n_train = cfg.n_train;
        if (n_train <= 0)
            n_train = static_cast<Index>(std::floor(static_cast<double>(total) / (1.0 + cfg.test_fraction)));
        const Index n_test = static_cast<Index>(std::llround(cfg.test_fraction * static_cast<double>(n_train)));
        if (n_train + n_test > total)
            throw InvalidInput("csv dataset has " + std::to_string(total) + " rows, need " +
                               std::to_string(n_train + n_test));
        std::vector<Index> rows(static_cast<std::size_t>(total));
        std::iota(rows.begin(), rows.end(), Index{0});
        Rng rng = make_rng(train_seed);
        std::shuffle(rows.begin(), rows.end(), rng);
        train = detail::take_rows(*csv_source, {rows.begin(), rows.begin() + n_train});
        test = detail::take_rows(*csv_source, {rows.begin() + n_train, rows.begin() + n_train + n_test});
    } else {
        train = detail::generate(cfg, cfg.n_train, train_seed);
        const Index n_test = cfg.n_test();
        if (n_test > 0) test = detail::generate(cfg, n_test, test_seed);
    }

    const Index n_train = train.n();
    const Index n_test = test.true_labels ? test.n() : 0;
    Dataset full = n_test > 0 ? detail::concat(train, test) : train;

    std::vector<Index> train_idx(static_cast<std::size_t>(n_train));
    std::iota(train_idx.begin(), train_idx.end(), Index{0});
    std::vector<Index> test_idx(static_cast<std::size_t>(n_test));
    std::iota(test_idx.begin(), test_idx.end(), n_train);

    const BagSpec spec = cfg.bag_spec();
    std::vector<int> assignment = assign_bags_subset(*full.true_labels, train_idx, spec, bag_seed);
    const int test_bag = static_cast<int>(spec.num_bags());
    assignment.resize(static_cast<std::size_t>(full.n()), test_bag);

    if (cfg.standardize) full.points = standardize(full.points);
    BagStructure bags = make_bag_structure(assignment, *full.true_labels, 2);
    return RepeatData{std::move(full), std::move(bags), std::move(train_idx), std::move(test_idx)};
}

/// Runs the solver side of a repeat. It receives features and bags only.
inline GammaSelection solve_repeat(const Matrix& points, const BagStructure& bags,
                                   const ExperimentConfig& cfg) {
    return select_gamma(points, bags, cfg.gamma_grid, cfg.propagation(), cfg.soft_score);
}

/// Same, taking a prepared repeat. Ground-truth labels in `data` are not read.
inline GammaSelection solve_repeat(const RepeatData& data, const ExperimentConfig& cfg) {
    return solve_repeat(data.dataset.points, data.bags, cfg);
}

inline RepeatResult run_repeat(const ExperimentConfig& cfg, int index, const Dataset* csv_source = nullptr) {
    RepeatResult rep;
    rep.index = index;
    rep.seed = derive_seed(RngSeed{cfg.seed}, static_cast<std::uint64_t>(index)).value;
    try {
        const RepeatData data = prepare_repeat(cfg, index, csv_source);
        GammaSelection sel = solve_repeat(data, cfg);
        const Labels predicted = decide_labels(sel.soft_labels);
        const Labels& truth = *data.dataset.true_labels;
        rep.accuracy = data.test_indices.empty() ? accuracy_on(predicted, truth, data.train_indices)
                                                 : accuracy_on(predicted, truth, data.test_indices);
        rep.train_accuracy = accuracy_on(predicted, truth, data.train_indices);
        rep.all_accuracy = accuracy(predicted, truth);
        rep.gamma = sel.gamma;
        rep.gamma_scores = std::move(sel.scores);
        rep.diagnostics = std::move(sel.diagnostics);
        rep.completed = true;
    } catch (const std::exception& e) {
        rep.completed = false;
        rep.error = e.what();
    }
    return rep;
}

/// Runs every repeat (concurrently when threads allow) and aggregates.
/// Results do not depend on the number of workers.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();

    std::optional<Dataset> csv_source;
    if (cfg.dataset == "csv")
        csv_source = load_dataset_csv(cfg.csv_path, cfg.label_column);

    ExperimentResult result;
    result.name = cfg.name;
    result.dataset = cfg.dataset;
    result.format = cfg.format_code();
    result.eval_all = cfg.eval_all;
    result.repeats.resize(static_cast<std::size_t>(cfg.repeats));

    unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
    workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(cfg.repeats));
    std::atomic<int> next{0};
    auto work = [&] {
        for (int r = next++; r < cfg.repeats; r = next++)
            result.repeats[static_cast<std::size_t>(r)] = run_repeat(cfg, r, csv_source ? &*csv_source : nullptr);
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    aggregate(result);
    result.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

// =============================================================================
// Serialization
// =============================================================================

inline void to_json(json& j, const PropagationDiagnostics& d) {
    j = json{{"outer_iterations", d.outer_iterations},
             {"outer_residual", d.outer_residual},
             {"ap_iterations", d.ap_iterations},
             {"residual_trace", d.residual_trace},
             {"objective_trace", d.objective_trace}};
}

inline void from_json(const json& j, PropagationDiagnostics& d) {
    j.at("outer_iterations").get_to(d.outer_iterations);
    j.at("outer_residual").get_to(d.outer_residual);
    j.at("ap_iterations").get_to(d.ap_iterations);
    j.at("residual_trace").get_to(d.residual_trace);
    j.at("objective_trace").get_to(d.objective_trace);
}

namespace detail {

// JSON has no infinities; failed grid points are written as null.
inline json scores_to_json(const std::vector<double>& scores) {
    json arr = json::array();
    for (double s : scores) arr.push_back(std::isfinite(s) ? json(s) : json(nullptr));
    return arr;
}

inline std::vector<double> scores_from_json(const json& arr) {
    std::vector<double> out;
    for (const auto& v : arr) out.push_back(v.is_null() ? -std::numeric_limits<double>::infinity() : v.get<double>());
    return out;
}

}  // namespace detail

inline void to_json(json& j, const RepeatResult& r) {
    j = json{{"index", r.index},
             {"seed", r.seed},
             {"completed", r.completed},
             {"error", r.error},
             {"accuracy", r.accuracy},
             {"train_accuracy", r.train_accuracy},
             {"all_accuracy", r.all_accuracy},
             {"gamma", r.gamma},
             {"gamma_scores", detail::scores_to_json(r.gamma_scores)},
             {"diagnostics", r.diagnostics}};
}

inline void from_json(const json& j, RepeatResult& r) {
    j.at("index").get_to(r.index);
    j.at("seed").get_to(r.seed);
    j.at("completed").get_to(r.completed);
    j.at("error").get_to(r.error);
    j.at("accuracy").get_to(r.accuracy);
    j.at("train_accuracy").get_to(r.train_accuracy);
    j.at("all_accuracy").get_to(r.all_accuracy);
    j.at("gamma").get_to(r.gamma);
    r.gamma_scores = detail::scores_from_json(j.at("gamma_scores"));
    j.at("diagnostics").get_to(r.diagnostics);
}

inline void to_json(json& j, const ExperimentResult& r) {
    j = json{{"name", r.name},
             {"dataset", r.dataset},
             {"format", r.format},
             {"mean", r.mean},
             {"std", r.stddev},
             {"mean_all", r.mean_all},
             {"std_all", r.std_all},
             {"completed", r.completed},
             {"eval_all", r.eval_all},
             {"repeats", r.repeats}};
}

inline void from_json(const json& j, ExperimentResult& r) {
    j.at("name").get_to(r.name);
    j.at("dataset").get_to(r.dataset);
    j.at("format").get_to(r.format);
    j.at("mean").get_to(r.mean);
    j.at("std").get_to(r.stddev);
    j.at("mean_all").get_to(r.mean_all);
    j.at("std_all").get_to(r.std_all);
    j.at("completed").get_to(r.completed);
    j.at("eval_all").get_to(r.eval_all);
    j.at("repeats").get_to(r.repeats);
}

/// "mean(std)" with two decimals, e.g. "0.99(0.01)".
inline std::string format_cell(double mean, double std) {
    if (!std::isfinite(mean)) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f(%.2f)", mean, std);
    return buf;
}

/// Table layout: one row per format code, one column per dataset in
/// first-seen order. With eval_all, an extra "<dataset>_all" column scores
/// every instance.
inline std::string results_csv(const std::vector<ExperimentResult>& results) {
    if (results.empty()) throw InvalidInput("no results to emit");
    std::vector<std::string> datasets, formats;
    bool any_all = false;
    for (const auto& r : results) {
        if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
        if (std::find(formats.begin(), formats.end(), r.format) == formats.end()) formats.push_back(r.format);
        any_all = any_all || r.eval_all;
    }
    std::string out = "format";
    for (const auto& d : datasets) {
        out += "," + d;
        if (any_all) out += "," + d + "_all";
    }
    out += ",completed\n";
    for (const auto& f : formats) {
        out += f;
        int done = 0, total = 0;
        for (const auto& d : datasets) {
            const auto it = std::find_if(results.begin(), results.end(),
                                         [&](const ExperimentResult& r) { return r.format == f && r.dataset == d; });
            out += ",";
            if (it != results.end()) {
                out += format_cell(it->mean, it->stddev);
                done += it->completed;
                total += static_cast<int>(it->repeats.size());
            }
            if (any_all) {
                out += ",";
                if (it != results.end()) out += format_cell(it->mean_all, it->std_all);
            }
        }
        out += "," + std::to_string(done) + "/" + std::to_string(total) + "\n";
    }
    return out;
}

inline std::string results_json(const std::vector<ExperimentResult>& results) {
    if (results.empty()) throw InvalidInput("no results to emit");
    return json{{"results", results}}.dump(2) + "\n";
}

inline std::vector<ExperimentResult> parse_results_json(const std::string& text) {
    return json::parse(text).at("results").get<std::vector<ExperimentResult>>();
}

/// Per-repeat residual and objective traces for plotting.
inline std::string trace_json(const std::vector<ExperimentResult>& results) {
    json arr = json::array();
    for (const auto& r : results) {
        json reps = json::array();
        for (const auto& rep : r.repeats)
            reps.push_back({{"index", rep.index},
                            {"residual_trace", rep.diagnostics.residual_trace},
                            {"objective_trace", rep.diagnostics.objective_trace}});
        arr.push_back({{"dataset", r.dataset}, {"format", r.format}, {"repeats", reps}});
    }
    return json{{"traces", arr}}.dump(2) + "\n";
}

enum class ResultFormat { csv, json };

/// Writes results.csv or results.json into `dir` and returns the path.
inline std::filesystem::path emit_results(const std::vector<ExperimentResult>& results, ResultFormat format,
                                          const std::filesystem::path& dir) {
    if (results.empty()) throw InvalidInput("no results to emit");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto path = dir / (format == ResultFormat::csv ? "results.csv" : "results.json");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << (format == ResultFormat::csv ? results_csv(results) : results_json(results));
    if (!out) throw Error("failed writing '" + path.string() + "'");
    return path;
}

}  // namespace lpllp
