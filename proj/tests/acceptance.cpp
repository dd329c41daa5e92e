// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "lpllp/lpllp.hpp"

#include "oracles.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

using namespace lpllp;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& name, const std::string& detail) {
    if (!pass) ++failures;
    std::printf("%s  %2d  %-28s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

ExperimentConfig table_config(const std::string& dataset, const std::string& format) {
    ExperimentConfig cfg;
    cfg.name = dataset + "_" + format;
    cfg.dataset = dataset;
    cfg.seed = 20240601;
    return with_format(cfg, format);
}

std::map<std::string, ExperimentResult> cache;

const ExperimentResult& table_result(const std::string& dataset, const std::string& format) {
    const std::string key = dataset + "/" + format;
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, run_experiment(table_config(dataset, format))).first;
    return it->second;
}

void quantitative(int id, const std::string& dataset, const std::string& format, double threshold) {
    const ExperimentResult& r = table_result(dataset, format);
    const std::string name = (dataset == "xor" ? "XOR " : "Half-Kernel ") + format;
    report(id, r.completed == static_cast<int>(r.repeats.size()) && r.mean >= threshold, name,
           "mean " + format_cell(r.mean, r.stddev) + ", need >= " + fmt("%.2f", threshold) + ", " +
               std::to_string(r.completed) + "/" + std::to_string(r.repeats.size()) + " repeats, " +
               fmt("%.0fs", r.wall_time_seconds));
}

Matrix random_one_hot(int n, int c, std::mt19937_64& rng) {
    Labels y(static_cast<std::size_t>(n));
    for (auto& v : y) v = std::uniform_int_distribution<int>(0, c - 1)(rng);
    return one_hot(y, c);
}

Matrix random_points(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix x(n, 2);
    for (Index i = 0; i < x.size(); ++i) x(i) = z(rng);
    return x;
}

BagStructure random_bags(int n, int k, const Labels& y, std::mt19937_64& rng) {
    std::vector<int> assignment(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) assignment[static_cast<std::size_t>(i)] = i < k ? i : std::uniform_int_distribution<int>(0, k - 1)(rng);
    return make_bag_structure(assignment, y, *std::max_element(y.begin(), y.end()) + 1 < 2 ? 2 : *std::max_element(y.begin(), y.end()) + 1);
}

void solver_equivalence() {
    std::mt19937_64 rng(101);
    double worst = 0.0;
    const double alphas[3] = {0.1, 0.5, 0.9};
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 49);
        const double alpha = alphas[trial % 3];
        const Matrix s = oracle::random_stochastic(n, rng);
        const Matrix y = random_one_hot(n, 2 + trial % 3, rng);
        const Matrix closed = propagate_closed_form(s, y, alpha);
        const auto iter = propagate_power_iteration(s, y, alpha, 1e-10, 1000000);
        worst = std::max(worst, (closed - iter.value).cwiseAbs().maxCoeff());
    }
    report(7, worst <= 1e-6, "solver equivalence", fmt("max |closed - power| = %.2e over 100 instances", worst));
}

void neumann_identity() {
    std::mt19937_64 rng(102);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 9);
        const Matrix s = oracle::random_stochastic(n, rng);
        const Matrix y = random_one_hot(n, 2, rng);
        const Matrix series = 0.5 * oracle::neumann_series(s, y, 0.5, 80);
        worst = std::max(worst, (series - propagate_closed_form(s, y, 0.5)).cwiseAbs().maxCoeff());
    }
    report(8, worst <= 1e-8, "Neumann series identity", fmt("max deviation %.2e over 100 instances", worst));
}

void feasibility() {
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> u(-2.0, 3.0);
    double worst_box = 0.0, worst_simplex = 0.0, worst_mass = 0.0, worst_conservation = 0.0;
    int solved = 0, attempted = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 12 + trial;
        const int c = trial % 2 ? 2 : 3;
        Labels y(static_cast<std::size_t>(n));
        for (auto& v : y) v = std::uniform_int_distribution<int>(0, c - 1)(rng);
        y[0] = c - 1;
        const BagStructure bags = random_bags(n, 2 + trial % 4, y, rng);
        const Matrix s = build_graph(random_points(n, rng), 0.5).transition;
        PropagationConfig cfg;
        cfg.outer_max_iter = 5000;
        ++attempted;
        try {
            if (c == 2) {
                const auto out = lp_llp(s, bags, cfg);
                worst_box = std::max(worst_box, box_violation(out.soft_labels));
                worst_mass = std::max(worst_mass, mass_violation(out.soft_labels, bags, bags.target_mass()));
            } else {
                const auto out = lp_llp_multiclass(s, bags, cfg);
                worst_simplex = std::max(worst_simplex, simplex_violation(out.soft_labels));
                worst_mass = std::max(worst_mass, mass_violation(out.soft_labels, bags, bags.counts()));
            }
            ++solved;
        } catch (const NonConvergence&) {
        }
    }
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 60);
        Labels y(static_cast<std::size_t>(n));
        for (auto& v : y) v = std::uniform_int_distribution<int>(0, 1)(rng);
        const BagStructure bags = random_bags(n, 1 + static_cast<int>(rng() % std::min(n, 6)), y, rng);
        Vector f(n);
        for (Index i = 0; i < n; ++i) f(i) = u(rng);
        const Vector g = project_bag_mass(f, bags, bags.target_mass());
        worst_conservation = std::max(worst_conservation, mass_violation(g, bags, bags.target_mass()));
    }
    const bool pass = solved > 0 && worst_box == 0.0 && worst_simplex <= 1e-12 && worst_mass <= 1e-6 &&
                      worst_conservation <= 1e-9;
    report(9, pass, "feasibility",
           std::to_string(solved) + "/" + std::to_string(attempted) +
               fmt(" converged; box %.1e, simplex %.1e, mass %.1e", worst_box, worst_simplex, worst_mass) +
               fmt("; mass projection %.1e over 1000", worst_conservation));
}

void projection_correctness() {
    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> u(-2.0, 3.0);
    double idem = 0.0, expand = 0.0, oracle_gap = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 30);
        const int c = 2 + trial % 3;
        Labels y(static_cast<std::size_t>(n));
        for (auto& v : y) v = std::uniform_int_distribution<int>(0, 1)(rng);
        const BagStructure bags = random_bags(n, 1 + static_cast<int>(rng() % std::min(n, 5)), y, rng);
        Vector f(n), g(n);
        Matrix a(n, c), b(n, c);
        for (Index i = 0; i < n; ++i) f(i) = u(rng), g(i) = u(rng);
        for (Index i = 0; i < a.size(); ++i) a(i) = u(rng), b(i) = u(rng);
        const Vector t = bags.target_mass();

        const Vector pm = project_bag_mass(f, bags, t);
        const Vector pb = project_box(f);
        const Matrix ps = project_row_simplex(a);
        idem = std::max({idem, (project_bag_mass(pm, bags, t) - pm).cwiseAbs().maxCoeff(),
                         (project_box(pb) - pb).cwiseAbs().maxCoeff(),
                         (project_row_simplex(ps) - ps).cwiseAbs().maxCoeff()});

        expand = std::max({expand, (pm - project_bag_mass(g, bags, t)).norm() - (f - g).norm(),
                           (pb - project_box(g)).norm() - (f - g).norm(),
                           (ps - project_row_simplex(b)).norm() - (a - b).norm()});

        for (Index i = 0; i < n; ++i) {
            const Vector row = a.row(i).transpose();
            oracle_gap = std::max(oracle_gap, (ps.row(i).transpose() - oracle::simplex_projection_enumerate(row)).cwiseAbs().maxCoeff());
        }
    }
    report(10, idem <= 1e-12 && expand <= 1e-12 && oracle_gap <= 1e-8, "projection correctness",
           fmt("idempotence %.1e, expansion %.1e, simplex vs enumeration %.1e", idem, expand, oracle_gap));
}

void pure_bag_recovery() {
    std::mt19937_64 rng(105);
    int recovered = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 10 + trial * 3;
        const Matrix x = random_points(n, rng);
        Labels y(static_cast<std::size_t>(n));
        for (auto& v : y) v = std::uniform_int_distribution<int>(0, 1)(rng);
        y[0] = 0;
        y[1] = 1;
        // Two single-class bags per class, split at random.
        std::vector<int> assignment(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) assignment[static_cast<std::size_t>(i)] = 2 * y[static_cast<std::size_t>(i)];
        for (int i = 2; i < n; ++i) assignment[static_cast<std::size_t>(i)] += std::uniform_int_distribution<int>(0, 1)(rng);
        std::vector<int> dense(4, -1);
        int next = 0;
        for (auto& b : assignment) {
            if (dense[static_cast<std::size_t>(b)] < 0) dense[static_cast<std::size_t>(b)] = next++;
            b = dense[static_cast<std::size_t>(b)];
        }
        const BagStructure bags = make_bag_structure(assignment, y);
        const auto out = lp_llp(build_graph(x, 0.5).transition, bags);
        recovered += decide_labels(out.soft_labels) == y;
    }
    report(11, recovered == 20, "pure-bag recovery", std::to_string(recovered) + "/20 instances fully recovered");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism() {
    const fs::path root = fs::temp_directory_path() / "lpllp_acceptance";
    fs::remove_all(root);
    ExperimentConfig cfg = table_config("half_kernel", "120B");
    cfg.repeats = 5;
    const auto first = emit_results({run_experiment(cfg)}, ResultFormat::json, root / "first");
    cfg.threads = 2;
    const auto second = emit_results({run_experiment(cfg)}, ResultFormat::json, root / "second");
    const std::string a = slurp(first), b = slurp(second);
    report(12, !a.empty() && a == b, "determinism",
           std::to_string(a.size()) + " bytes of results.json, " + (a == b ? "identical" : "different"));
}

void no_leakage() {
    ExperimentConfig cfg = table_config("xor", "120B");
    bool identical = true;
    int flipped = 0;
    for (int index = 0; index < 3; ++index) {
        const RepeatData data = prepare_repeat(cfg, index);
        RepeatData mutated = data;
        for (Index i : data.test_indices) {
            auto& y = (*mutated.dataset.true_labels)[static_cast<std::size_t>(i)];
            y = 1 - y;
            ++flipped;
        }
        const GammaSelection a = solve_repeat(data, cfg);
        const GammaSelection b = solve_repeat(mutated, cfg);
        identical = identical && a.gamma == b.gamma && a.scores == b.scores &&
                    a.soft_labels.size() == b.soft_labels.size() &&
                    (a.soft_labels.array() == b.soft_labels.array()).all();
    }
    report(13, identical && flipped > 0, "no leakage",
           std::to_string(flipped) + " test labels replaced over 3 repeats, solver output " +
               (identical ? "bit-identical" : "changed"));
}

void csv_standin() {
    const fs::path dir = fs::temp_directory_path() / "lpllp_acceptance_csv";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_dataset_csv((dir / "standin.csv").string(), gen_half_kernel(200, RngSeed{77}));
    ExperimentConfig cfg;
    cfg.dataset = "csv";
    cfg.csv_path = (dir / "standin.csv").string();
    cfg.n_train = 0;
    cfg.repeats = 3;
    cfg.seed = 5;
    const ExperimentResult r = run_experiment(cfg);
    const bool pass = r.completed == 3 && r.mean >= 0.0 && r.mean <= 1.0;
    if (!pass) ++failures;
    std::printf("%s   -  %-28s %s\n", pass ? "PASS" : "FAIL", "csv stand-in (extra)",
                ("mean " + format_cell(r.mean, r.stddev) + " over " + std::to_string(r.completed) + " repeats").c_str());
}

}  // namespace

int main() {
    try {
        quantitative(1, "xor", "600B", 0.95);
        quantitative(2, "xor", "600A", 0.90);
        quantitative(3, "xor", "120B", 0.85);
        quantitative(4, "half_kernel", "600B", 0.95);
        quantitative(5, "half_kernel", "120A", 0.50);
        {
            const double x600 = table_result("xor", "600B").mean, x120 = table_result("xor", "120B").mean;
            const double h600 = table_result("half_kernel", "600B").mean, h120 = table_result("half_kernel", "120B").mean;
            report(6, x600 >= x120 && h600 >= h120, "monotone trend (config B)",
                   fmt("XOR %.3f >= %.3f, ", x600, x120) + fmt("Half-Kernel %.3f >= %.3f", h600, h120));
        }
        solver_equivalence();
        neumann_identity();
        feasibility();
        projection_correctness();
        pure_bag_recovery();
        determinism();
        no_leakage();
        csv_standin();
    } catch (const std::exception& e) {
        std::printf("FAIL  acceptance run aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%d failing\n", failures);
    return failures == 0 ? 0 : 1;
}
