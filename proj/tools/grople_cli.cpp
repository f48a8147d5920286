// Command-line front end: fit / predict / evaluate / cv / grid / group /
// sparsity / report. Every subcommand exits 0 on success and 1 on any error,
// printing a message that names the offending field or file.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grople/grople.hpp"

namespace fs = std::filesystem;
using grople::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string arff, xml, cache, name;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> method;
};

void add_dataset_flags(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--arff", args.arff, "ARFF data file (overrides the config)");
    cmd->add_option("--xml", args.xml, "MULAN XML label header (overrides the config)");
    cmd->add_option("--cache", args.cache, "dataset cache directory (overrides the config)");
    cmd->add_option("--name", args.name, "dataset display name");
}

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config JSON");
    cmd->add_option("--out", args.out_dir, "output directory (default: .)");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--workers", args.workers, "worker thread count override");
    cmd->add_option("--method", args.method, "method override (grople | ridge-br)");
    add_dataset_flags(cmd, args);
}

/// Loads the config (or builds a default one from flags) and applies
/// command-line overrides. Relative dataset paths in a config file resolve
/// against the config file's directory.
grople::ExperimentConfig resolve_config(const CommonArgs& args, bool need_dataset) {
    grople::ExperimentConfig cfg;
    if (!args.config_path.empty()) {
        cfg = grople::load_config(args.config_path);
        const fs::path base = fs::path(args.config_path).parent_path();
        auto rebase = [&base](fs::path& p) {
            if (!p.empty() && p.is_relative()) p = base / p;
        };
        rebase(cfg.arff);
        rebase(cfg.xml);
        rebase(cfg.cache);
    }
    if (!args.arff.empty()) {
        cfg.arff = args.arff;
        cfg.cache.clear();
    }
    if (!args.xml.empty()) cfg.xml = args.xml;
    if (!args.cache.empty()) {
        cfg.cache = args.cache;
        cfg.arff.clear();
        cfg.xml.clear();
    }
    if (!args.name.empty()) cfg.name = args.name;
    if (args.seed) cfg.seed = *args.seed;
    if (args.workers) cfg.workers = *args.workers;
    if (args.method) cfg.method = *args.method;

    if (need_dataset && cfg.cache.empty() && (cfg.arff.empty() || cfg.xml.empty()))
        throw grople::config_error(
            {"dataset: none given (use --config, --arff/--xml or --cache)"});
    // Re-validate after overrides through the canonical path.
    return grople::config_from_json(grople::config_to_json(cfg));
}

fs::path ensure_out_dir(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

grople::GridCell single_cell(const grople::ExperimentConfig& cfg) {
    const auto cells = grople::expand_grid(cfg);
    if (cells.size() != 1)
        throw grople::config_error(
            {"hyperparameters: this subcommand needs scalars, but the config expands to " +
             std::to_string(cells.size()) + " grid cells (use `cv` or `grid` for grids)"});
    return cells.front();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw grople::io_error("cannot write " + path.string());
    out << text;
}

int cmd_fit(const CommonArgs& args) {
    const auto cfg = resolve_config(args, true);
    const auto ds = grople::load_config_dataset(cfg);
    const auto cell = single_cell(cfg);
    const grople::AnyClassifier model =
        grople::detail::fit_cell(cfg, cell, ds, cfg.seed, nullptr);
    const fs::path out = ensure_out_dir(args.out_dir) / "model.json";
    grople::save_model(out, model);
    std::cout << out.string() << "\n";
    return 0;
}

int cmd_predict(const CommonArgs& args, const std::string& model_path) {
    const auto cfg = resolve_config(args, true);
    const auto ds = grople::load_config_dataset(cfg);
    const grople::AnyClassifier model = grople::load_model(model_path);
    const Eigen::MatrixXd Yhat = grople::predict(model, ds.X);

    std::ostringstream csv;
    const auto& names = grople::label_names(model);
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (j > 0) csv << ",";
        csv << grople::detail::csv_quote(names[j]);
    }
    csv << "\n";
    for (Eigen::Index i = 0; i < Yhat.rows(); ++i) {
        for (Eigen::Index j = 0; j < Yhat.cols(); ++j) {
            if (j > 0) csv << ",";
            csv << (Yhat(i, j) > 0 ? "1" : "-1");
        }
        csv << "\n";
    }
    const fs::path out = ensure_out_dir(args.out_dir) / "predictions.csv";
    write_text(out, csv.str());
    std::cout << out.string() << "\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& model_path) {
    const auto cfg = resolve_config(args, true);
    const auto ds = grople::load_config_dataset(cfg);
    const grople::AnyClassifier model = grople::load_model(model_path);
    const auto metrics =
        grople::evaluate_all(ds.Y, grople::predict(model, ds.X), cfg.flags.metrics);

    json j;
    for (const char* name : grople::kMetricNames)
        j[name] = grople::metric_by_name(metrics, name);
    j["n_test"] = metrics.n_test;
    j["n_labels"] = metrics.n_labels;

    const fs::path dir = ensure_out_dir(args.out_dir);
    grople::save_json_file(dir / "metrics.json", j);
    std::ostringstream csv;
    csv << "metric,value\n";
    for (const char* name : grople::kMetricNames)
        csv << name << ","
            << grople::detail::format_double(grople::metric_by_name(metrics, name)) << "\n";
    write_text(dir / "metrics.csv", csv.str());
    std::cout << (dir / "metrics.json").string() << "\n";
    return 0;
}

int cmd_cv(const CommonArgs& args, bool full_grid) {
    const auto cfg = resolve_config(args, true);
    const auto ds = grople::load_config_dataset(cfg);
    const grople::CvReport report =
        full_grid ? grople::run_grid(cfg, ds) : grople::run_cv(cfg, ds);

    const fs::path dir = ensure_out_dir(args.out_dir);
    const std::string stem = full_grid ? "grid_report" : "report";
    grople::save_json_file(dir / (stem + ".json"), grople::report_to_json(report));
    std::ostringstream csv;
    grople::report_to_csv(csv, report);
    write_text(dir / (stem + ".csv"), csv.str());
    std::cout << (dir / (stem + ".json")).string() << "\n";
    return 0;
}

int cmd_group(const CommonArgs& args, int k) {
    const auto cfg = resolve_config(args, true);
    const auto ds = grople::load_config_dataset(cfg);
    const grople::GroupPartition part =
        grople::group_labels(ds.Y, k, grople::mix_seed(cfg.seed, 0x67727570), cfg.flags.nn,
                             cfg.flags.kmeans_restarts);
    std::ostringstream csv;
    grople::write_partition_csv(csv, part, ds.label_names);
    const fs::path out = ensure_out_dir(args.out_dir) / "partition.csv";
    write_text(out, csv.str());
    std::cout << out.string() << "\n";
    return 0;
}

int cmd_sparsity(const CommonArgs& args, const std::string& model_path) {
    const grople::AnyClassifier model = grople::load_model(model_path);
    const auto* grople_model = std::get_if<grople::GropleClassifier>(&model);
    if (!grople_model)
        throw grople::value_error("model file " + model_path +
                                  " is not a grople model; it has no V blocks to export");
    std::ostringstream csv;
    grople::write_sparsity_csv(csv, grople_model->V, grople_model->partition);
    const fs::path out = ensure_out_dir(args.out_dir) / "sparsity.csv";
    write_text(out, csv.str());
    std::cout << out.string() << "\n";
    return 0;
}

int cmd_report(const CommonArgs& args, const std::vector<std::string>& inputs,
               const std::string& metric, std::optional<double> q_alpha) {
    if (inputs.size() < 2)
        throw grople::value_error("report: needs at least 2 report files (got " +
                                  std::to_string(inputs.size()) + ")");
    std::vector<json> reports;
    for (const auto& path : inputs) reports.push_back(grople::load_json_file(path));
    const grople::ComparisonSummary cmp = grople::compare_reports(reports, metric, q_alpha);

    const fs::path dir = ensure_out_dir(args.out_dir);
    std::ostringstream csv;
    grople::ranks_to_csv(csv, cmp);
    write_text(dir / "ranks.csv", csv.str());
    grople::save_json_file(dir / "cd.json", grople::comparison_to_json(cmp));
    std::cout << (dir / "cd.json").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GroPLE: group-preserving label embedding for multi-label classification"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string model_path;
    std::vector<std::string> report_inputs;
    std::string metric = "accuracy";
    std::optional<double> q_alpha;
    int group_k = 10;

    auto* fit = app.add_subcommand("fit", "train a model on a full dataset");
    add_common_flags(fit, args);

    auto* predict = app.add_subcommand("predict", "predict labels with a saved model");
    add_common_flags(predict, args);
    predict->add_option("--model", model_path, "model JSON file")->required();

    auto* evaluate = app.add_subcommand("evaluate", "score a saved model on a dataset");
    add_common_flags(evaluate, args);
    evaluate->add_option("--model", model_path, "model JSON file")->required();

    auto* cv = app.add_subcommand("cv", "k-fold cross validation with inner-holdout tuning");
    add_common_flags(cv, args);

    auto* grid = app.add_subcommand("grid", "k-fold cross validation of every grid cell");
    add_common_flags(grid, args);

    auto* group = app.add_subcommand("group", "export the spectral label grouping");
    add_common_flags(group, args);
    group->add_option("--k", group_k, "number of label groups (default 10)");

    auto* sparsity = app.add_subcommand("sparsity", "export per-group nonzero-row masks of V");
    sparsity->add_option("--model", model_path, "model JSON file")->required();
    sparsity->add_option("--out", args.out_dir, "output directory (default: .)");

    auto* report = app.add_subcommand("report", "aggregate CV reports into ranks and CD");
    report->add_option("--inputs", report_inputs, "CV report JSON files")
        ->required()
        ->delimiter(',');
    report->add_option("--metric", metric, "metric to rank by (default accuracy)");
    report->add_option("--q-alpha", q_alpha,
                       "Nemenyi q constant (default: alpha=0.05 lookup for K in [2,10])");
    report->add_option("--out", args.out_dir, "output directory (default: .)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(fit)) return cmd_fit(args);
        if (app.got_subcommand(predict)) return cmd_predict(args, model_path);
        if (app.got_subcommand(evaluate)) return cmd_evaluate(args, model_path);
        if (app.got_subcommand(cv)) return cmd_cv(args, false);
        if (app.got_subcommand(grid)) return cmd_cv(args, true);
        if (app.got_subcommand(group)) return cmd_group(args, group_k);
        if (app.got_subcommand(sparsity)) return cmd_sparsity(args, model_path);
        if (app.got_subcommand(report)) return cmd_report(args, report_inputs, metric, q_alpha);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
