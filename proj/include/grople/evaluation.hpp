#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "grople/classifier.hpp"
#include "grople/dataset.hpp"
#include "grople/error.hpp"
#include "grople/metrics.hpp"
#include "grople/serialization.hpp"

namespace grople {

inline constexpr const char* kMetricNames[] = {"accuracy", "example_f1", "macro_f1",
                                               "micro_f1"};

inline double metric_by_name(const MetricReport& r, const std::string& name) {
    if (name == "accuracy") return r.accuracy;
    if (name == "example_f1") return r.example_f1;
    if (name == "macro_f1") return r.macro_f1;
    if (name == "micro_f1") return r.micro_f1;
    throw value_error("unknown metric '" + name + "'");
}

/// Hyperparameter axes; an axis with several values makes a grid.
struct GridSpec {
    std::vector<int> d{100};
    std::vector<int> K{10};
    std::vector<double> lambda1{1e-3};
    std::vector<double> lambda2{1.0};
    std::vector<double> alpha{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4};
    std::vector<double> beta{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4};
};

struct GridCell {
    int d = 100;
    int K = 10;
    double lambda1 = 1e-3;
    double lambda2 = 1.0;
    double alpha = 1.0;
    double beta = 1.0;
    std::size_t index = 0;
};

struct ConfigFlags {
    bool standardize = false;
    bool bias_column = false;
    bool keep_u = false;
    bool calibrate_thresholds = false;
    int nn = 7;
    int kmeans_restarts = 10;
    MetricOptions metrics;
};

struct ExperimentConfig {
    std::string name; // dataset display name; derived from the path when empty
    std::filesystem::path arff;
    std::filesystem::path xml;
    std::filesystem::path cache;
    std::string method = "grople"; // or "ridge-br"
    GridSpec grid;
    int folds = 5;
    std::uint64_t seed = 0;
    int workers = 1;
    ConfigFlags flags;
    FitSettings solver;

    std::string dataset_name() const {
        if (!name.empty()) return name;
        if (!arff.empty()) return arff.stem().string();
        return cache.filename().string();
    }
};

// --- Config parsing and validation. ---

namespace detail {

template <typename T>
std::vector<T> scalar_or_array(const json& j) {
    std::vector<T> out;
    if (j.is_array()) {
        for (const auto& v : j) out.push_back(v.get<T>());
    } else {
        out.push_back(j.get<T>());
    }
    return out;
}

inline void run_workers(std::size_t n, int workers,
                        const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const int count = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (count == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(count));
    for (int w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace detail

inline json config_to_json(const ExperimentConfig& cfg) {
    json dataset;
    if (!cfg.cache.empty()) {
        dataset["cache"] = cfg.cache.string();
    } else {
        dataset["arff"] = cfg.arff.string();
        dataset["xml"] = cfg.xml.string();
    }
    if (!cfg.name.empty()) dataset["name"] = cfg.name;
    return json{
        {"dataset", std::move(dataset)},
        {"method", cfg.method},
        {"hyperparameters",
         json{{"d", cfg.grid.d},
              {"K", cfg.grid.K},
              {"lambda1", cfg.grid.lambda1},
              {"lambda2", cfg.grid.lambda2},
              {"alpha", cfg.grid.alpha},
              {"beta", cfg.grid.beta}}},
        {"folds", cfg.folds},
        {"seed", cfg.seed},
        {"workers", cfg.workers},
        {"flags",
         json{{"standardize", cfg.flags.standardize},
              {"bias_column", cfg.flags.bias_column},
              {"keep_u", cfg.flags.keep_u},
              {"calibrate_thresholds", cfg.flags.calibrate_thresholds},
              {"nn", cfg.flags.nn},
              {"kmeans_restarts", cfg.flags.kmeans_restarts},
              {"empty_instance_policy",
               cfg.flags.metrics.empty_instance == EmptyInstancePolicy::score_one ? "score_one"
                                                                                  : "skip"},
              {"empty_label_policy",
               cfg.flags.metrics.empty_label == EmptyLabelPolicy::zero ? "zero" : "skip"}}},
        {"solver", json{{"max_inner_iterations", cfg.solver.apg.max_iterations},
                        {"inner_tolerance", cfg.solver.apg.tolerance},
                        {"max_outer_iterations", cfg.solver.max_outer_iterations},
                        {"outer_tolerance", cfg.solver.outer_tolerance}}}};
}

/// Parses and validates a config document; reports every violation at once.
inline ExperimentConfig config_from_json(const json& j) {
    std::vector<std::string> issues;
    ExperimentConfig cfg;

    if (!j.is_object()) throw config_error({"config must be a JSON object"});

    try {
        if (j.contains("dataset")) {
            const json& d = j.at("dataset");
            if (d.contains("cache")) cfg.cache = d.at("cache").get<std::string>();
            if (d.contains("arff")) cfg.arff = d.at("arff").get<std::string>();
            if (d.contains("xml")) cfg.xml = d.at("xml").get<std::string>();
            if (d.contains("name")) cfg.name = d.at("name").get<std::string>();
        }
        if (cfg.cache.empty() && (cfg.arff.empty() || cfg.xml.empty()))
            issues.push_back("dataset: needs either {arff, xml} or {cache}");
        if (!cfg.cache.empty() && !cfg.arff.empty())
            issues.push_back("dataset: give either {arff, xml} or {cache}, not both");

        cfg.method = j.value("method", std::string("grople"));
        if (cfg.method != "grople" && cfg.method != "ridge-br")
            issues.push_back("method: must be 'grople' or 'ridge-br'");

        if (j.contains("hyperparameters")) {
            const json& hp = j.at("hyperparameters");
            if (hp.contains("d")) cfg.grid.d = detail::scalar_or_array<int>(hp.at("d"));
            if (hp.contains("K")) cfg.grid.K = detail::scalar_or_array<int>(hp.at("K"));
            if (hp.contains("lambda1"))
                cfg.grid.lambda1 = detail::scalar_or_array<double>(hp.at("lambda1"));
            if (hp.contains("lambda2"))
                cfg.grid.lambda2 = detail::scalar_or_array<double>(hp.at("lambda2"));
            if (hp.contains("alpha"))
                cfg.grid.alpha = detail::scalar_or_array<double>(hp.at("alpha"));
            if (hp.contains("beta"))
                cfg.grid.beta = detail::scalar_or_array<double>(hp.at("beta"));
        }
        auto check_axis = [&issues](const auto& axis, const std::string& name, auto minimum) {
            if (axis.empty()) issues.push_back(name + ": grid must be nonempty");
            for (const auto v : axis)
                if (v < minimum)
                    issues.push_back(name + ": value " + std::to_string(v) + " below minimum " +
                                     std::to_string(minimum));
        };
        check_axis(cfg.grid.d, "hyperparameters.d", 1);
        check_axis(cfg.grid.K, "hyperparameters.K", 1);
        check_axis(cfg.grid.lambda1, "hyperparameters.lambda1", 0.0);
        check_axis(cfg.grid.lambda2, "hyperparameters.lambda2", 0.0);
        check_axis(cfg.grid.alpha, "hyperparameters.alpha", 0.0);
        check_axis(cfg.grid.beta, "hyperparameters.beta", 0.0);

        cfg.folds = j.value("folds", 5);
        if (cfg.folds < 2) issues.push_back("folds: must be >= 2");
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.workers = j.value("workers", 1);
        if (cfg.workers < 1) issues.push_back("workers: must be >= 1");

        if (j.contains("flags")) {
            const json& f = j.at("flags");
            cfg.flags.standardize = f.value("standardize", false);
            cfg.flags.bias_column = f.value("bias_column", false);
            cfg.flags.keep_u = f.value("keep_u", false);
            cfg.flags.calibrate_thresholds = f.value("calibrate_thresholds", false);
            cfg.flags.nn = f.value("nn", 7);
            if (cfg.flags.nn < 1) issues.push_back("flags.nn: must be >= 1");
            cfg.flags.kmeans_restarts = f.value("kmeans_restarts", 10);
            if (cfg.flags.kmeans_restarts < 1)
                issues.push_back("flags.kmeans_restarts: must be >= 1");
            const std::string ip = f.value("empty_instance_policy", std::string("score_one"));
            if (ip == "score_one") cfg.flags.metrics.empty_instance = EmptyInstancePolicy::score_one;
            else if (ip == "skip") cfg.flags.metrics.empty_instance = EmptyInstancePolicy::skip;
            else issues.push_back("flags.empty_instance_policy: must be 'score_one' or 'skip'");
            const std::string lp = f.value("empty_label_policy", std::string("zero"));
            if (lp == "zero") cfg.flags.metrics.empty_label = EmptyLabelPolicy::zero;
            else if (lp == "skip") cfg.flags.metrics.empty_label = EmptyLabelPolicy::skip;
            else issues.push_back("flags.empty_label_policy: must be 'zero' or 'skip'");
        }

        if (j.contains("solver")) {
            const json& s = j.at("solver");
            cfg.solver.apg.max_iterations = s.value("max_inner_iterations", 500);
            cfg.solver.apg.tolerance = s.value("inner_tolerance", 1e-5);
            cfg.solver.max_outer_iterations = s.value("max_outer_iterations", 50);
            cfg.solver.outer_tolerance = s.value("outer_tolerance", 1e-5);
            if (cfg.solver.apg.max_iterations < 1)
                issues.push_back("solver.max_inner_iterations: must be >= 1");
            if (!(cfg.solver.apg.tolerance > 0.0))
                issues.push_back("solver.inner_tolerance: must be positive");
            if (cfg.solver.max_outer_iterations < 1)
                issues.push_back("solver.max_outer_iterations: must be >= 1");
            if (!(cfg.solver.outer_tolerance > 0.0))
                issues.push_back("solver.outer_tolerance: must be positive");
        }
    } catch (const json::exception& e) {
        issues.push_back(std::string("malformed field: ") + e.what());
    }

    if (!issues.empty()) throw config_error(std::move(issues));
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    return config_from_json(load_json_file(path));
}

inline MultiLabelDataset load_config_dataset(const ExperimentConfig& cfg) {
    if (!cfg.cache.empty()) return load_cache(cfg.cache);
    return load_mulan(cfg.arff, cfg.xml);
}

/// Canonical cell order: nested loops with beta varying fastest. For the
/// ridge baseline only lambda1 matters, so the grid collapses to that axis.
inline std::vector<GridCell> expand_grid(const ExperimentConfig& cfg) {
    std::vector<GridCell> cells;
    if (cfg.method == "ridge-br") {
        for (const double l1 : cfg.grid.lambda1) {
            GridCell c;
            c.d = cfg.grid.d.front();
            c.K = cfg.grid.K.front();
            c.lambda1 = l1;
            c.lambda2 = cfg.grid.lambda2.front();
            c.alpha = cfg.grid.alpha.front();
            c.beta = cfg.grid.beta.front();
            c.index = cells.size();
            cells.push_back(c);
        }
        return cells;
    }
    for (const int d : cfg.grid.d)
        for (const int K : cfg.grid.K)
            for (const double l1 : cfg.grid.lambda1)
                for (const double l2 : cfg.grid.lambda2)
                    for (const double a : cfg.grid.alpha)
                        for (const double b : cfg.grid.beta) {
                            GridCell c{d, K, l1, l2, a, b, cells.size()};
                            cells.push_back(c);
                        }
    return cells;
}

inline json cell_to_json(const GridCell& c) {
    return json{{"d", c.d},           {"K", c.K},       {"lambda1", c.lambda1},
                {"lambda2", c.lambda2}, {"alpha", c.alpha}, {"beta", c.beta},
                {"index", c.index}};
}

namespace detail {

inline GropleParams params_for(const ExperimentConfig& cfg, const GridCell& cell) {
    GropleParams p;
    p.d = cell.d;
    p.K = cell.K;
    p.lambda1 = cell.lambda1;
    p.lambda2 = cell.lambda2;
    p.alpha = cell.alpha;
    p.beta = cell.beta;
    p.nn = cfg.flags.nn;
    p.kmeans_restarts = cfg.flags.kmeans_restarts;
    p.standardize = cfg.flags.standardize;
    p.bias_column = cfg.flags.bias_column;
    p.keep_u = cfg.flags.keep_u;
    p.calibrate_thresholds = cfg.flags.calibrate_thresholds;
    p.solver = cfg.solver;
    return p;
}

inline AnyClassifier fit_cell(const ExperimentConfig& cfg, const GridCell& cell,
                              const MultiLabelDataset& train, std::uint64_t seed,
                              EmbeddingCache* cache) {
    if (cfg.method == "ridge-br") {
        // Ridge needs a strictly positive weight; the shared grid allows 0.
        const double lambda = cell.lambda1 > 0.0 ? cell.lambda1 : 1e-12;
        return fit_ridge_br_classifier(train, lambda, cfg.flags.standardize,
                                       cfg.flags.bias_column, seed);
    }
    return fit_grople(train, params_for(cfg, cell), seed, cache);
}

/// Sequentially fits one representative per distinct embedding key so that
/// concurrent cell fits afterwards only read the cache.
inline void prefill_cache(const ExperimentConfig& cfg, const std::vector<GridCell>& cells,
                          const MultiLabelDataset& train, std::uint64_t seed,
                          EmbeddingCache& cache) {
    if (cfg.method != "grople") return;
    std::set<std::tuple<int, int, double, double>> keys;
    for (const auto& cell : cells) {
        const std::tuple<int, int, double, double> key{cell.d, cell.K, cell.lambda1,
                                                       cell.lambda2};
        if (keys.insert(key).second) {
            GropleParams p = params_for(cfg, cell);
            p.calibrate_thresholds = false; // representative fit only fills the cache
            fit_grople(train, p, seed, &cache);
        }
    }
}

struct SummaryStat {
    double mean = 0.0;
    double stdev = 0.0; // population standard deviation over folds
    std::vector<double> per_fold;
};

inline SummaryStat summarize(const std::vector<double>& values) {
    SummaryStat s;
    s.per_fold = values;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    s.stdev = std::sqrt(var / static_cast<double>(values.size()));
    return s;
}

} // namespace detail

struct FoldOutcome {
    int fold = 0;
    GridCell selected;
    MetricReport metrics;
};

struct CvReport {
    std::string method;
    std::string dataset;
    int folds = 0;
    std::uint64_t seed = 0;
    json config_echo;
    std::vector<FoldOutcome> fold_outcomes;
    std::optional<json> per_cell; // set by run_grid
};

/// k-fold cross validation. With a multi-cell grid, each fold selects its
/// cell by accuracy on a deterministic 80/20 holdout inside the training
/// folds, then refits on the whole training portion.
inline CvReport run_cv(const ExperimentConfig& cfg, const MultiLabelDataset& ds) {
    const FoldPlan plan = k_fold_split(ds.n_instances(), cfg.folds, cfg.seed);
    const std::vector<GridCell> cells = expand_grid(cfg);

    CvReport report;
    report.method = cfg.method;
    report.dataset = cfg.dataset_name();
    report.folds = cfg.folds;
    report.seed = cfg.seed;
    report.config_echo = config_to_json(cfg);
    report.fold_outcomes.resize(static_cast<std::size_t>(cfg.folds));

    // Cell selection per fold (sequential folds, concurrent cells).
    std::vector<GridCell> selected(static_cast<std::size_t>(cfg.folds), cells.front());
    if (cells.size() > 1) {
        for (int fold = 0; fold < cfg.folds; ++fold) {
            const auto train_idx = plan.train_indices(fold);
            std::vector<Eigen::Index> shuffled = train_idx;
            Rng rng(mix_seed(cfg.seed, 0x686f6c64 + static_cast<std::uint64_t>(fold)));
            rng.shuffle(shuffled);
            const std::size_t val_count = std::max<std::size_t>(1, shuffled.size() / 5);
            const std::vector<Eigen::Index> inner_val(shuffled.end() - static_cast<long>(val_count),
                                                      shuffled.end());
            shuffled.resize(shuffled.size() - val_count);
            const MultiLabelDataset inner_train = subset(ds, shuffled);
            const MultiLabelDataset inner_validation = subset(ds, inner_val);

            const std::uint64_t fold_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(fold));
            EmbeddingCache cache;
            detail::prefill_cache(cfg, cells, inner_train, fold_seed, cache);

            std::vector<double> inner_accuracy(cells.size(), 0.0);
            detail::run_workers(cells.size(), cfg.workers, [&](std::size_t c) {
                const AnyClassifier model =
                    detail::fit_cell(cfg, cells[c], inner_train, fold_seed, &cache);
                inner_accuracy[c] = accuracy(inner_validation.Y,
                                             predict(model, inner_validation.X),
                                             cfg.flags.metrics);
            });
            std::size_t best = 0;
            for (std::size_t c = 1; c < cells.size(); ++c)
                if (inner_accuracy[c] > inner_accuracy[best]) best = c;
            selected[static_cast<std::size_t>(fold)] = cells[best];
        }
    }

    // Final refit per fold on the full training portion (concurrent folds).
    detail::run_workers(static_cast<std::size_t>(cfg.folds), cfg.workers, [&](std::size_t f) {
        const int fold = static_cast<int>(f);
        const MultiLabelDataset train = subset(ds, plan.train_indices(fold));
        const MultiLabelDataset test = subset(ds, plan.test_indices(fold));
        const std::uint64_t fold_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(fold));
        const AnyClassifier model = detail::fit_cell(cfg, selected[f], train, fold_seed, nullptr);
        FoldOutcome outcome;
        outcome.fold = fold;
        outcome.selected = selected[f];
        outcome.metrics = evaluate_all(test.Y, predict(model, test.X), cfg.flags.metrics);
        report.fold_outcomes[f] = std::move(outcome);
    });
    return report;
}

/// Full k-fold CV of every grid cell, no inner selection: one summary row
/// per cell.
inline CvReport run_grid(const ExperimentConfig& cfg, const MultiLabelDataset& ds) {
    const FoldPlan plan = k_fold_split(ds.n_instances(), cfg.folds, cfg.seed);
    const std::vector<GridCell> cells = expand_grid(cfg);

    CvReport report;
    report.method = cfg.method;
    report.dataset = cfg.dataset_name();
    report.folds = cfg.folds;
    report.seed = cfg.seed;
    report.config_echo = config_to_json(cfg);

    std::vector<std::vector<MetricReport>> per_cell_fold(
        cells.size(), std::vector<MetricReport>(static_cast<std::size_t>(cfg.folds)));

    for (int fold = 0; fold < cfg.folds; ++fold) {
        const MultiLabelDataset train = subset(ds, plan.train_indices(fold));
        const MultiLabelDataset test = subset(ds, plan.test_indices(fold));
        const std::uint64_t fold_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(fold));
        EmbeddingCache cache;
        detail::prefill_cache(cfg, cells, train, fold_seed, cache);
        detail::run_workers(cells.size(), cfg.workers, [&](std::size_t c) {
            const AnyClassifier model = detail::fit_cell(cfg, cells[c], train, fold_seed, &cache);
            per_cell_fold[c][static_cast<std::size_t>(fold)] =
                evaluate_all(test.Y, predict(model, test.X), cfg.flags.metrics);
        });
    }

    // The headline fold outcomes track the first cell; per_cell holds all.
    report.fold_outcomes.resize(static_cast<std::size_t>(cfg.folds));
    for (int fold = 0; fold < cfg.folds; ++fold) {
        report.fold_outcomes[static_cast<std::size_t>(fold)] =
            FoldOutcome{fold, cells.front(), per_cell_fold[0][static_cast<std::size_t>(fold)]};
    }

    json per_cell = json::array();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        json cell_json{{"cell", cell_to_json(cells[c])}};
        for (const char* metric : kMetricNames) {
            std::vector<double> values;
            for (const auto& m : per_cell_fold[c]) values.push_back(metric_by_name(m, metric));
            const auto stat = detail::summarize(values);
            cell_json[metric] = json{{"mean", stat.mean}, {"std", stat.stdev},
                                     {"per_fold", stat.per_fold}};
        }
        per_cell.push_back(std::move(cell_json));
    }
    report.per_cell = std::move(per_cell);
    return report;
}

inline json report_to_json(const CvReport& report) {
    json folds_json = json::object();
    for (const auto& outcome : report.fold_outcomes) {
        json metrics;
        for (const char* metric : kMetricNames)
            metrics[metric] = metric_by_name(outcome.metrics, metric);
        folds_json[std::to_string(outcome.fold)] = std::move(metrics);
    }

    json summary = json::object();
    for (const char* metric : kMetricNames) {
        std::vector<double> values;
        for (const auto& outcome : report.fold_outcomes)
            values.push_back(metric_by_name(outcome.metrics, metric));
        const auto stat = detail::summarize(values);
        summary[metric] =
            json{{"mean", stat.mean}, {"std", stat.stdev}, {"per_fold", stat.per_fold}};
    }

    json selected = json::array();
    for (const auto& outcome : report.fold_outcomes) {
        json cell = cell_to_json(outcome.selected);
        cell["fold"] = outcome.fold;
        selected.push_back(std::move(cell));
    }

    json j{{"format_version", 1},
           {"method", report.method},
           {"dataset", report.dataset},
           {"folds", report.folds},
           {"seed", report.seed},
           {"config", report.config_echo},
           {"results", json{{report.dataset, std::move(folds_json)}}},
           {"summary", std::move(summary)},
           {"selected_cells", std::move(selected)}};
    if (report.per_cell) j["per_cell"] = *report.per_cell;
    return j;
}

/// Flat CSV: dataset,fold,metric,value with mean/std pseudo-folds last.
inline void report_to_csv(std::ostream& out, const CvReport& report) {
    out << "dataset,fold,metric,value\n";
    for (const auto& outcome : report.fold_outcomes)
        for (const char* metric : kMetricNames)
            out << detail::csv_quote(report.dataset) << "," << outcome.fold << "," << metric
                << "," << detail::format_double(metric_by_name(outcome.metrics, metric)) << "\n";
    for (const char* metric : kMetricNames) {
        std::vector<double> values;
        for (const auto& outcome : report.fold_outcomes)
            values.push_back(metric_by_name(outcome.metrics, metric));
        const auto stat = detail::summarize(values);
        out << detail::csv_quote(report.dataset) << ",mean," << metric << ","
            << detail::format_double(stat.mean) << "\n";
        out << detail::csv_quote(report.dataset) << ",std," << metric << ","
            << detail::format_double(stat.stdev) << "\n";
    }
}

// --- Cross-report comparison (rank aggregation + CD). ---

struct ComparisonSummary {
    RankTable table;
    FriedmanResult friedman;
    double q_alpha = 0.0;
    double cd = 0.0;
    std::string metric;
    std::vector<std::string> datasets;
};

/// Builds the methods x datasets score table from CV report documents
/// (summary.<metric>.mean per report) and derives ranks, the Friedman
/// statistics and the Nemenyi critical difference.
inline ComparisonSummary compare_reports(const std::vector<json>& reports,
                                         const std::string& metric,
                                         std::optional<double> q_alpha = std::nullopt) {
    std::vector<std::string> methods, datasets;
    std::map<std::pair<std::string, std::string>, double> scores;
    for (const auto& r : reports) {
        const std::string method = r.at("method").get<std::string>();
        const std::string dataset = r.at("dataset").get<std::string>();
        if (std::find(methods.begin(), methods.end(), method) == methods.end())
            methods.push_back(method);
        if (std::find(datasets.begin(), datasets.end(), dataset) == datasets.end())
            datasets.push_back(dataset);
        scores[{method, dataset}] = r.at("summary").at(metric).at("mean").get<double>();
    }
    const int K = static_cast<int>(methods.size());
    const int N = static_cast<int>(datasets.size());
    if (K < 2) throw value_error("comparison needs reports from at least 2 methods");

    Eigen::MatrixXd table(K, N);
    for (int m = 0; m < K; ++m) {
        for (int d = 0; d < N; ++d) {
            const auto it = scores.find({methods[static_cast<std::size_t>(m)],
                                         datasets[static_cast<std::size_t>(d)]});
            if (it == scores.end())
                throw value_error("incomplete table: no report for method '" +
                                  methods[static_cast<std::size_t>(m)] + "' on dataset '" +
                                  datasets[static_cast<std::size_t>(d)] + "'");
            table(m, d) = it->second;
        }
    }

    ComparisonSummary cmp;
    cmp.metric = metric;
    cmp.datasets = datasets;
    cmp.table = average_ranks(table, methods, true);
    cmp.friedman = N >= 2 ? friedman_statistic(cmp.table) : FriedmanResult{};
    cmp.q_alpha = q_alpha ? *q_alpha : nemenyi_q05(K);
    cmp.cd = nemenyi_cd(K, N, cmp.q_alpha);
    return cmp;
}

inline void ranks_to_csv(std::ostream& out, const ComparisonSummary& cmp) {
    out << "method,avg_rank\n";
    for (int m = 0; m < cmp.table.method_count; ++m)
        out << detail::csv_quote(cmp.table.methods[static_cast<std::size_t>(m)]) << ","
            << detail::format_double(cmp.table.average_ranks(m)) << "\n";
}

inline json comparison_to_json(const ComparisonSummary& cmp) {
    json j{{"metric", cmp.metric},
           {"K", cmp.table.method_count},
           {"N", cmp.table.dataset_count},
           {"q_alpha", cmp.q_alpha},
           {"cd", cmp.cd},
           {"chi2_f", cmp.friedman.chi2}};
    j["f_f"] = cmp.friedman.ff ? json(*cmp.friedman.ff) : json(nullptr);
    return j;
}

} // namespace grople
