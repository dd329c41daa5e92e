// Command line front end: data generation, experiment runs and sweeps, and
// solving a user-supplied bagged dataset.

#include "lpllp/lpllp.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace lpllp;

namespace {

struct GenerateArgs {
    std::string dataset = "xor";
    Index n = 600;
    std::uint64_t seed = 0;
    std::string out = "data";
    std::string bags = "B";
    double noise_sd = 0.5;
};

struct RunArgs {
    std::string config;
    std::string out = "results";
    std::vector<std::string> formats;
    std::vector<std::string> datasets;
    int repeats = 0;
    int threads = -1;
    bool trace = false;
};

struct SolveArgs {
    std::string data;
    std::string bags;
    std::string proportions;
    std::string label_column;
    std::vector<double> gammas;
    double alpha = 0.5;
    bool standardize = false;
    std::string out = "predictions.csv";
};

void generate(const GenerateArgs& a) {
    Dataset ds;
    if (a.dataset == "xor") ds = gen_xor(a.n, RngSeed{a.seed});
    else if (a.dataset == "half_kernel") ds = gen_half_kernel(a.n, RngSeed{a.seed}, {5.0, 8.0, a.noise_sd});
    else throw InvalidInput("--dataset must be xor or half_kernel");

    fs::create_directories(a.out);
    const std::string stem = a.dataset + "_" + std::to_string(a.n) + "_" + std::to_string(a.seed);
    const fs::path data_path = fs::path(a.out) / (stem + ".csv");
    write_dataset_csv(data_path.string(), ds);
    std::cout << "wrote " << data_path.string() << '\n';
    if (a.bags == "none") return;

    const BagStructure bags = assign_bags(ds, bag_spec_by_name(a.bags), derive_seed(RngSeed{a.seed}, 3));
    const fs::path bag_path = fs::path(a.out) / (stem + "_bags.csv");
    const fs::path prop_path = fs::path(a.out) / (stem + "_proportions.csv");
    write_bag_csv(bag_path.string(), bags.assignment());
    write_proportions_csv(prop_path.string(), bags.proportions());
    std::cout << "wrote " << bag_path.string() << "\nwrote " << prop_path.string() << '\n';
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    std::cout << "wrote " << path.string() << '\n';
}

std::vector<ExperimentConfig> load_configs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw InvalidInput("config file '" + path + "' is not valid JSON: " + e.what());
    }
    std::vector<ExperimentConfig> configs;
    if (j.is_array()) {
        for (const auto& item : j) configs.push_back(item.get<ExperimentConfig>());
    } else {
        configs.push_back(j.get<ExperimentConfig>());
    }
    if (configs.empty()) throw InvalidInput("config file '" + path + "' lists no experiments");
    return configs;
}

void run(const RunArgs& a) {
    std::vector<ExperimentConfig> configs = load_configs(a.config);
    if (!a.datasets.empty()) {
        std::vector<ExperimentConfig> expanded;
        for (const auto& c : configs)
            for (const auto& d : a.datasets) {
                ExperimentConfig copy = c;
                copy.dataset = d;
                expanded.push_back(copy);
            }
        configs = std::move(expanded);
    }
    if (!a.formats.empty()) {
        std::vector<ExperimentConfig> expanded;
        for (const auto& f : a.formats)
            for (const auto& c : configs) expanded.push_back(with_format(c, f));
        configs = std::move(expanded);
    }

    std::vector<ExperimentResult> results;
    for (auto cfg : configs) {
        if (a.repeats > 0) cfg.repeats = a.repeats;
        if (a.threads >= 0) cfg.threads = a.threads;
        cfg.validate();
        ExperimentResult r = run_experiment(cfg);
        std::printf("%-12s %-6s %s  %d/%zu completed  %.1fs\n", r.dataset.c_str(), r.format.c_str(),
                    format_cell(r.mean, r.stddev).c_str(), r.completed, r.repeats.size(), r.wall_time_seconds);
        for (const auto& rep : r.repeats)
            if (!rep.completed) std::fprintf(stderr, "  repeat %d failed: %s\n", rep.index, rep.error.c_str());
        std::fflush(stdout);
        results.push_back(std::move(r));
    }

    emit_results(results, ResultFormat::csv, a.out);
    emit_results(results, ResultFormat::json, a.out);
    std::cout << "wrote " << (fs::path(a.out) / "results.csv").string() << "\nwrote "
              << (fs::path(a.out) / "results.json").string() << '\n';
    if (a.trace) write_file(fs::path(a.out) / "trace.json", trace_json(results));
}

void solve(const SolveArgs& a) {
    std::optional<std::string> label_column;
    if (!a.label_column.empty()) label_column = a.label_column;
    Dataset ds = load_dataset_csv(a.data, label_column);
    const std::vector<int> assignment = load_bag_csv(a.bags, ds.n());

    BagStructure bags = [&] {
        if (!a.proportions.empty())
            return make_bag_structure_from_proportions(assignment, load_proportions_csv(a.proportions));
        if (!ds.true_labels) throw InvalidInput("give --proportions or a --label-column to derive them from");
        return make_bag_structure(assignment, *ds.true_labels, ds.num_classes);
    }();
    if (bags.num_classes() != 2) throw InvalidInput("solve handles two-class problems");
    if (a.standardize) ds.points = standardize(ds.points);

    PropagationConfig cfg;
    cfg.alpha = a.alpha;
    const GammaSelection sel = select_gamma(ds.points, bags, a.gammas.empty() ? default_gamma_grid() : a.gammas, cfg);
    const Labels predicted = decide_labels(sel.soft_labels);

    std::ofstream out(a.out);
    if (!out) throw Error("cannot write '" + a.out + "'");
    out << "instance_index,bag_id,soft_label,label\n";
    for (Index i = 0; i < ds.n(); ++i)
        out << i << ',' << assignment[static_cast<std::size_t>(i)] << ',' << detail::format_real(sel.soft_labels(i))
            << ',' << predicted[static_cast<std::size_t>(i)] << '\n';
    std::printf("gamma %g, %d outer iterations\n", sel.gamma, sel.diagnostics.outer_iterations);
    if (ds.true_labels) std::printf("accuracy against label column: %.4f\n", accuracy(predicted, *ds.true_labels));
    std::cout << "wrote " << a.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Label propagation with bag label proportions"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Generate a synthetic dataset and its bags");
    g->add_option("--dataset", gen.dataset, "xor or half_kernel")->check(CLI::IsMember({"xor", "half_kernel"}));
    g->add_option("--n", gen.n, "Number of instances")->required();
    g->add_option("--seed", gen.seed, "Random seed");
    g->add_option("--out", gen.out, "Output directory");
    g->add_option("--bags", gen.bags, "Bag configuration: A, B or none")->check(CLI::IsMember({"A", "B", "none"}));
    g->add_option("--noise-sd", gen.noise_sd, "Half-kernel radial noise");

    RunArgs run_args;
    auto add_run_options = [&](CLI::App* sub) {
        sub->add_option("--config", run_args.config, "Experiment config (JSON object or array)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", run_args.out, "Output directory");
        sub->add_option("--datasets", run_args.datasets, "Override the dataset, one run per entry")->delimiter(',');
        sub->add_option("--repeats", run_args.repeats, "Override the repeat count");
        sub->add_option("--threads", run_args.threads, "Worker threads (0: all cores)");
        sub->add_flag("--trace", run_args.trace, "Also write trace.json");
    };
    auto* r = app.add_subcommand("run", "Run the experiments in a config file");
    add_run_options(r);
    auto* s = app.add_subcommand("sweep", "Run a config across table formats such as 120A,600B");
    add_run_options(s);
    s->add_option("--formats", run_args.formats, "Comma-separated format codes")->required()->delimiter(',');

    SolveArgs solve_args;
    auto* v = app.add_subcommand("solve", "Label a CSV dataset from bag proportions");
    v->add_option("--data", solve_args.data, "Feature CSV")->required()->check(CLI::ExistingFile);
    v->add_option("--bags", solve_args.bags, "instance_index,bag_id CSV")->required()->check(CLI::ExistingFile);
    v->add_option("--proportions", solve_args.proportions, "bag_id,p0,p1 CSV")->check(CLI::ExistingFile);
    v->add_option("--label-column", solve_args.label_column, "Ground-truth column, excluded from features");
    v->add_option("--gamma", solve_args.gammas, "Bandwidth grid")->delimiter(',');
    v->add_option("--alpha", solve_args.alpha, "Propagation weight in (0, 1)");
    v->add_flag("--standardize", solve_args.standardize, "Z-score features first");
    v->add_option("--out", solve_args.out, "Predictions CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*g) generate(gen);
        else if (*r || *s) run(run_args);
        else if (*v) solve(solve_args);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
