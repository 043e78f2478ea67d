// traceforest: cluster-trace preprocessing, random-forest training and
// cost-aware provisioning advice from one binary.
//
//   traceforest synth --n 5000 --seed 7 --output trace.csv
//   traceforest preprocess --input trace.csv --output records.jsonl
//   traceforest split --input records.jsonl --target average_usage_cpu \
//       --seed 7 --train-out train.csv --test-out test.csv
//   traceforest tune --input train.csv --samples 20 --folds 3 --seed 7 \
//       --report tune.csv
//   traceforest train --input train.csv --model forest --model-out model.json
//   traceforest evaluate --model model.json --input test.csv --report-dir out
//   traceforest advise --model model.json --input test.csv \
//       --requested-col resource_request_cpus
//   traceforest pipeline --config pipeline.conf
//
// Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 internal.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "traceforest/advisor.hpp"
#include "traceforest/baselines.hpp"
#include "traceforest/csv.hpp"
#include "traceforest/dataset.hpp"
#include "traceforest/errors.hpp"
#include "traceforest/evaluation.hpp"
#include "traceforest/forest.hpp"
#include "traceforest/manifest.hpp"
#include "traceforest/model_io.hpp"
#include "traceforest/rng.hpp"
#include "traceforest/strings.hpp"
#include "traceforest/trace_ingest.hpp"
#include "traceforest/tuning.hpp"

namespace tf = traceforest;

namespace {

class Stopwatch {
public:
    double elapsed_ms() const {
        const auto now = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::milli>(now - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    for (const auto& part : tf::split(text, ',')) {
        auto v = tf::parse_double(part);
        if (!v) throw tf::DataError(std::string("bad ") + what + " value '" + part + "'");
        out.push_back(*v);
    }
    return out;
}

void report_skips(const std::vector<tf::IngestSkip>& skips) {
    if (skips.empty()) return;
    std::cerr << "warning: skipped " << skips.size() << " malformed row(s)\n";
    const std::size_t shown = std::min<std::size_t>(skips.size(), 5);
    for (std::size_t i = 0; i < shown; ++i)
        std::cerr << "  line " << skips[i].line << ": " << skips[i].reason << "\n";
    if (skips.size() > shown) std::cerr << "  ...\n";
}

tf::ForestConfig forest_config_from_flags(std::size_t n_estimators, long long max_depth,
                                          std::size_t min_split, std::size_t min_leaf,
                                          const std::string& max_features,
                                          double bootstrap_size, std::uint64_t seed) {
    tf::ForestConfig config;
    config.n_estimators = n_estimators;
    if (max_depth > 0) config.max_depth = static_cast<std::size_t>(max_depth);
    config.min_samples_split = min_split;
    config.min_samples_leaf = min_leaf;
    config.max_features = tf::MaxFeatures::from_text(max_features);
    config.bootstrap_size = bootstrap_size;
    config.seed = seed;
    config.validate();
    return config;
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

void run_synth(std::size_t n, std::uint64_t seed, const std::string& output) {
    Stopwatch timer;
    tf::SyntheticTrace trace = tf::synthesize_trace(n, seed);
    std::ofstream out(output, std::ios::binary);
    if (!out) throw tf::IoError("cannot write " + output);
    tf::write_trace_csv(trace, out);
    if (!out) throw tf::IoError("write failure on " + output);

    tf::RunManifest manifest;
    manifest.command = "synth";
    manifest.seed = seed;
    manifest.config = {{"n", std::to_string(n)}, {"seed", std::to_string(seed)}};
    manifest.outputs = {output};
    manifest.duration_ms = timer.elapsed_ms();
    tf::write_manifest(manifest, output + ".manifest.json");
    std::cout << "wrote " << trace.rows.size() << " rows to " << output << "\n";
}

void run_preprocess(const std::string& input, const std::string& output,
                    const std::string& drop_list, std::size_t cardinality_threshold,
                    double missing_fill) {
    Stopwatch timer;
    tf::PreprocessConfig config;
    if (!drop_list.empty()) config.drop_columns = tf::split(drop_list, ',');
    config.low_cardinality_threshold = cardinality_threshold;
    config.missing_fill = missing_fill;

    tf::IngestResult ingest = tf::parse_trace_file(input, config);
    tf::PreprocessedTable table = tf::preprocess_records(ingest.records, config);
    // Surface both parse-level and transform-level skips in one log.
    table.skip_log.insert(table.skip_log.begin(), ingest.skipped.begin(), ingest.skipped.end());
    report_skips(table.skip_log);

    std::ofstream out(output, std::ios::binary);
    if (!out) throw tf::IoError("cannot write " + output);
    tf::write_table_jsonl(table, out);
    std::ofstream meta(output + ".meta.json", std::ios::binary);
    if (!meta) throw tf::IoError("cannot write " + output + ".meta.json");
    tf::write_table_meta(table, meta);

    tf::RunManifest manifest;
    manifest.command = "preprocess";
    manifest.config = {{"drop", drop_list.empty() ? "<default>" : drop_list},
                       {"cardinality_threshold", std::to_string(cardinality_threshold)},
                       {"missing_fill", tf::format_double(missing_fill)},
                       {"skipped_rows", std::to_string(table.skip_log.size())}};
    manifest.inputs = {input};
    manifest.outputs = {output, output + ".meta.json"};
    manifest.duration_ms = timer.elapsed_ms();
    tf::write_manifest(manifest, output + ".manifest.json");
    std::cout << "wrote " << table.rows.size() << " records, " << table.columns.size()
              << " features to " << output << "\n";
}

tf::PreprocessedTable load_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw tf::IoError("cannot open " + path);
    return tf::read_table_jsonl(in, path);
}

void run_split(const std::string& input, const std::string& target,
               const std::string& policy_text, double test_fraction, std::uint64_t seed,
               const std::string& train_out, const std::string& test_out) {
    Stopwatch timer;
    tf::PreprocessedTable table = load_records(input);
    tf::FeatureMatrix matrix =
        tf::build_feature_matrix(table, target, tf::parse_leakage_policy(policy_text));
    tf::SplitIndices split = tf::train_test_split(matrix, test_fraction, seed);
    tf::write_matrix_csv(tf::take_rows(matrix, split.train), train_out);
    tf::write_matrix_csv(tf::take_rows(matrix, split.test), test_out);

    tf::RunManifest manifest;
    manifest.command = "split";
    manifest.seed = seed;
    manifest.config = {{"target", target},
                       {"leakage_policy", policy_text},
                       {"test_fraction", tf::format_double(test_fraction)},
                       {"seed", std::to_string(seed)}};
    manifest.inputs = {input};
    manifest.outputs = {train_out, test_out};
    manifest.duration_ms = timer.elapsed_ms();
    tf::write_manifest(manifest, train_out + ".manifest.json");
    std::cout << "train rows: " << split.train.size() << ", test rows: " << split.test.size()
              << ", features: " << matrix.cols() << "\n";
}

void run_correlate(const std::string& input, const std::string& output) {
    Stopwatch timer;
    tf::FeatureMatrix matrix = tf::read_matrix_csv(input);
    const auto grid = tf::correlation_matrix(matrix);
    std::ofstream out(output, std::ios::binary);
    if (!out) throw tf::IoError("cannot write " + output);
    std::vector<std::string> header = {"feature"};
    header.insert(header.end(), matrix.column_names.begin(), matrix.column_names.end());
    tf::write_csv_row(out, header);
    for (std::size_t i = 0; i < matrix.cols(); ++i) {
        std::vector<std::string> cells = {matrix.column_names[i]};
        for (double v : grid[i]) cells.push_back(tf::format_double(v));
        tf::write_csv_row(out, cells);
    }

    tf::RunManifest manifest;
    manifest.command = "correlate";
    manifest.inputs = {input};
    manifest.outputs = {output};
    manifest.duration_ms = timer.elapsed_ms();
    tf::write_manifest(manifest, output + ".manifest.json");
    std::cout << "wrote " << matrix.cols() << "x" << matrix.cols() << " correlation grid to "
              << output << "\n";
}

void run_prune(const std::string& input, double threshold, const std::string& output) {
    Stopwatch timer;
    tf::FeatureMatrix matrix = tf::read_matrix_csv(input);
    tf::FeatureMatrix pruned = tf::prune_correlated(matrix, threshold);
    tf::write_matrix_csv(pruned, output);

    tf::RunManifest manifest;
    manifest.command = "prune";
    manifest.config = {{"threshold", tf::format_double(threshold)}};
    manifest.inputs = {input};
    manifest.outputs = {output};
    manifest.duration_ms = timer.elapsed_ms();
    tf::write_manifest(manifest, output + ".manifest.json");
    std::cout << "kept " << pruned.cols() << " of " << matrix.cols() << " features\n";
}

tf::ParamGrid grid_from_text(const std::string& n_estimators, const std::string& max_depth,
                             const std::string& min_split, const std::string& min_leaf) {
    tf::ParamGrid grid;
    auto parse_counts = [](const std::string& text, const char* what) {
        std::vector<std::size_t> out;
        for (double v : parse_double_list(text, what)) out.push_back(static_cast<std::size_t>(v));
        return out;
    };
    if (!n_estimators.empty()) grid.n_estimators = parse_counts(n_estimators, "n_estimators");
    if (!max_depth.empty()) {
        grid.max_depth.clear();
        for (const auto& part : tf::split(max_depth, ',')) {
            if (part == "none") {
                grid.max_depth.push_back(std::nullopt);
            } else {
                auto v = tf::parse_double(part);
                if (!v || *v < 1) throw tf::DataError("bad max_depth value '" + part + "'");
                grid.max_depth.push_back(static_cast<std::size_t>(*v));
            }
        }
    }
    if (!min_split.empty()) grid.min_samples_split = parse_counts(min_split, "min_samples_split");
    if (!min_leaf.empty()) grid.min_samples_leaf = parse_counts(min_leaf, "min_samples_leaf");
    return grid;
}

tf::SearchResult run_tune(const std::string& input, std::size_t samples, std::size_t folds,
                          std::uint64_t seed, const std::string& report, std::size_t threads,
                          const tf::ParamGrid& grid) {
    Stopwatch timer;
    tf::FeatureMatrix matrix = tf::read_matrix_csv(input);
    tf::SearchResult result = tf::randomized_search(matrix, grid, samples, folds, seed, threads);

    std::ofstream out(report, std::ios::binary);
    if (!out) throw tf::IoError("cannot write " + report);
    tf::write_search_report(result, out);

    tf::RunManifest manifest;
    manifest.command = "tune";
    manifest.seed = seed;
    manifest.config = {{"samples", std::to_string(samples)},
                       {"folds", std::to_string(folds)},
                       {"seed", std::to_string(seed)},
                       {"best", result.best.describe()}};
    manifest.inputs = {input};
    manifest.outputs = {report};
    manifest.duration_ms = timer.elapsed_ms();
    tf::write_manifest(manifest, report + ".manifest.json");
    std::cout << "best: " << result.best.describe() << " (mean cv r2 "
              << tf::format_double(result.trials[result.best_index].mean_r2) << ")\n";
    return result;
}

void run_train(const std::string& input, const std::string& kind, const std::string& model_out,
               const tf::ForestConfig& forest_config, const tf::GBTConfig& gbt_config,
               std::size_t threads) {
    Stopwatch timer;
    tf::FeatureMatrix matrix = tf::read_matrix_csv(input);

    tf::RunManifest manifest;
    manifest.command = "train";
    manifest.inputs = {input};
    manifest.outputs = {model_out};

    if (kind == "forest") {
        tf::RandomForestModel model = tf::fit_forest(matrix, forest_config, threads);
        tf::save_model(model, model_out);
        manifest.seed = forest_config.seed;
        manifest.config = {{"model", kind}, {"config", forest_config.describe()}};
    } else if (kind == "linear") {
        tf::save_model(tf::fit_linear(matrix), model_out);
        manifest.config = {{"model", kind}};
    } else if (kind == "gbt") {
        tf::save_model(tf::fit_gbt(matrix, gbt_config), model_out);
        manifest.config = {{"model", kind},
                           {"rounds", std::to_string(gbt_config.n_rounds)},
                           {"learning_rate", tf::format_double(gbt_config.learning_rate)}};
    } else {
        throw UsageError("unknown model kind '" + kind + "' (expected forest, linear or gbt)");
    }
    manifest.duration_ms = timer.elapsed_ms();
    tf::write_manifest(manifest, model_out + ".manifest.json");
    std::cout << "trained " << kind << " model on " << matrix.rows << " rows -> " << model_out
              << "\n";
}

void run_evaluate(const std::string& model_path, const std::string& input,
                  const std::string& report_dir, const std::string& bins_text,
                  const std::string& bin_col) {
    Stopwatch timer;
    tf::FeatureMatrix matrix = tf::read_matrix_csv(input);
    tf::AnyModel model = tf::load_model(model_path);

    const std::vector<double> predicted = tf::predict_matrix(model, matrix);
    tf::EvalReport report = tf::evaluate(matrix.target, predicted);

    auto col_it = std::find(matrix.column_names.begin(), matrix.column_names.end(), bin_col);
    if (col_it == matrix.column_names.end())
        throw tf::SchemaError("bin column '" + bin_col + "' not present in " + input);
    const std::size_t bin_idx = static_cast<std::size_t>(col_it - matrix.column_names.begin());
    std::vector<double> bin_feature(matrix.rows);
    for (std::size_t r = 0; r < matrix.rows; ++r) bin_feature[r] = matrix.at(r, bin_idx);

    tf::BinReport bins =
        tf::error_by_bin(matrix.target, predicted, bin_feature, parse_double_list(bins_text, "bin edge"));
    tf::CorrelationTable corr{matrix.column_names, tf::correlation_matrix(matrix)};
    tf::export_report(report, bins, corr, report_dir);

    tf::RunManifest manifest;
    manifest.command = "evaluate";
    manifest.config = {{"bins", bins_text}, {"bin_col", bin_col}};
    manifest.inputs = {model_path, input};
    manifest.outputs = {report_dir + "/metrics.csv", report_dir + "/parity.csv",
                        report_dir + "/residuals.csv", report_dir + "/bins.csv",
                        report_dir + "/correlation.csv"};
    manifest.duration_ms = timer.elapsed_ms();
    tf::write_manifest(manifest, report_dir + "/manifest.json");
    std::cout << "mae=" << tf::format_double(report.mae)
              << " rmse=" << tf::format_double(report.rmse)
              << " r2=" << tf::format_double(report.r2) << " n=" << report.n << "\n";
}

void run_predict(const std::string& model_path, const std::string& input,
                 const std::string& output, double alpha) {
    Stopwatch timer;
    tf::FeatureMatrix matrix = tf::read_matrix_csv(input);
    tf::AnyModel model = tf::load_model(model_path);

    std::ofstream out(output, std::ios::binary);
    if (!out) throw tf::IoError("cannot write " + output);
    if (auto* forest = std::get_if<tf::RandomForestModel>(&model)) {
        out << "point,lo,hi,confidence\n";
        std::vector<double> x(matrix.cols());
        for (std::size_t r = 0; r < matrix.rows; ++r) {
            x.assign(matrix.row(r), matrix.row(r) + matrix.cols());
            tf::IntervalPrediction p = tf::predict_interval(*forest, x, alpha);
            out << tf::format_double(p.point) << ',' << tf::format_double(p.lo) << ','
                << tf::format_double(p.hi) << ',' << tf::format_double(p.confidence) << '\n';
        }
    } else {
        out << "point\n";
        for (double p : tf::predict_matrix(model, matrix)) out << tf::format_double(p) << '\n';
    }

    tf::RunManifest manifest;
    manifest.command = "predict";
    manifest.config = {{"alpha", tf::format_double(alpha)}};
    manifest.inputs = {model_path, input};
    manifest.outputs = {output};
    manifest.duration_ms = timer.elapsed_ms();
    tf::write_manifest(manifest, output + ".manifest.json");
    std::cout << "wrote " << matrix.rows << " predictions to " << output << "\n";
}

void write_advice_csv(const tf::BatchAdvice& batch, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw tf::IoError("cannot write " + path);
    tf::write_csv_row(out, {"requested", "predicted", "lo", "hi", "confidence", "recommended",
                            "risk", "rationale"});
    for (const auto& advice : batch.items) {
        tf::write_csv_row(out, {tf::format_double(advice.requested),
                                tf::format_double(advice.predicted.point),
                                tf::format_double(advice.predicted.lo),
                                tf::format_double(advice.predicted.hi),
                                tf::format_double(advice.predicted.confidence),
                                tf::format_double(advice.recommended),
                                advice.risk_flag ? "1" : "0", advice.rationale});
    }
}

void print_advice_summary(const tf::BatchAdviceSummary& summary, std::ostream& out) {
    out << "total_requested=" << tf::format_double(summary.total_requested)
        << " total_recommended=" << tf::format_double(summary.total_recommended)
        << " reduction_fraction=" << tf::format_double(summary.reduction_fraction)
        << " risk_count=" << summary.risk_count << "\n";
}

tf::BatchAdvice run_advise(const std::string& model_path, const std::string& input,
                           const std::string& requested_col, const tf::AdvicePolicy& policy,
                           const std::string& output) {
    Stopwatch timer;
    tf::FeatureMatrix matrix = tf::read_matrix_csv(input);
    tf::RandomForestModel model = tf::load_forest_model(model_path);

    auto col_it =
        std::find(matrix.column_names.begin(), matrix.column_names.end(), requested_col);
    if (col_it == matrix.column_names.end())
        throw tf::SchemaError("requested column '" + requested_col + "' not present in " + input);
    const std::size_t col = static_cast<std::size_t>(col_it - matrix.column_names.begin());
    std::vector<double> requested(matrix.rows);
    for (std::size_t r = 0; r < matrix.rows; ++r) requested[r] = matrix.at(r, col);

    tf::BatchAdvice batch = tf::batch_advise(model, matrix, requested, policy);
    if (!output.empty()) {
        write_advice_csv(batch, output);
        tf::RunManifest manifest;
        manifest.command = "advise";
        manifest.config = {{"requested_col", requested_col},
                           {"alpha", tf::format_double(policy.alpha)},
                           {"headroom", tf::format_double(policy.headroom)},
                           {"risk_tolerance", tf::format_double(policy.risk_tolerance)},
                           {"granularity", tf::format_double(policy.granularity)}};
        manifest.inputs = {model_path, input};
        manifest.outputs = {output};
        manifest.duration_ms = timer.elapsed_ms();
        tf::write_manifest(manifest, output + ".manifest.json");
    } else {
        for (const auto& advice : batch.items) {
            std::cout << "requested=" << tf::format_double(advice.requested)
                      << " recommended=" << tf::format_double(advice.recommended)
                      << " interval=[" << tf::format_double(advice.predicted.lo) << ","
                      << tf::format_double(advice.predicted.hi) << "]"
                      << " risk=" << (advice.risk_flag ? 1 : 0) << " | " << advice.rationale
                      << "\n";
        }
    }
    print_advice_summary(batch.summary, std::cout);
    return batch;
}

void run_savings(double cores, double reduction) {
    tf::CostEstimate est = tf::estimate_savings(cores, reduction);
    std::cout << "cluster_units=" << tf::format_double(est.cluster_units)
              << " reduction_fraction=" << tf::format_double(est.reduction_fraction)
              << " saved_units=" << tf::format_double(est.saved_units) << "\n";
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

struct FlatConfig {
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return &v;
        return nullptr;
    }
    std::string get_or(const std::string& key, const std::string& fallback) const {
        const std::string* v = find(key);
        return v ? *v : fallback;
    }
    std::string require(const std::string& key) const {
        const std::string* v = find(key);
        if (!v) throw UsageError("pipeline config missing key '" + key + "'");
        return *v;
    }
};

FlatConfig parse_flat_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw tf::IoError("cannot open " + path);
    FlatConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view t = tf::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string_view::npos)
            throw UsageError(path + ":" + std::to_string(line_no) + ": expected key = value");
        std::string key(tf::trim(t.substr(0, eq)));
        std::string value(tf::trim(t.substr(eq + 1)));
        config.entries.emplace_back(std::move(key), std::move(value));
    }
    return config;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    try {
        return std::stoull(text);
    } catch (const std::exception&) {
        throw tf::DataError("bad " + what + " value '" + text + "'");
    }
}

void run_pipeline(const std::string& config_path, std::size_t threads) {
    Stopwatch timer;
    const FlatConfig config = parse_flat_config(config_path);

    const std::vector<std::string> chain = {"synth",  "preprocess", "split",   "tune",
                                            "train",  "evaluate",   "advise"};
    std::vector<std::string> stages;
    {
        std::string stages_text = config.require("stages");
        for (auto& part : tf::split(stages_text, ',')) {
            std::string name(tf::trim(part));
            if (!name.empty()) stages.push_back(name);
        }
        std::size_t chain_at = 0;
        for (const auto& stage : stages) {
            if (stage == "prune") continue;
            const auto it = std::find(chain.begin(), chain.end(), stage);
            if (it == chain.end())
                throw UsageError("pipeline config has unknown stage '" + stage + "'");
            const auto pos = static_cast<std::size_t>(it - chain.begin());
            if (pos == chain_at) {
                ++chain_at;
            } else if (pos > chain_at) {
                throw UsageError("pipeline config missing stage '" + chain[chain_at] + "'");
            } else {
                throw UsageError("pipeline config repeats or misorders stage '" + stage + "'");
            }
        }
        if (chain_at != chain.size())
            throw UsageError("pipeline config missing stage '" + chain[chain_at] + "'");
    }
    const bool with_prune =
        std::find(stages.begin(), stages.end(), "prune") != stages.end();

    const std::uint64_t master_seed = parse_u64(config.require("seed"), "seed");
    const std::string out_dir = config.require("out_dir");
    std::filesystem::create_directories(out_dir);

    // Stage seeds derive from the master seed by stage name, so any single
    // stage can be replayed in isolation.
    const std::uint64_t synth_seed = tf::derive_seed(master_seed, "synth");
    const std::uint64_t split_seed = tf::derive_seed(master_seed, "split");
    const std::uint64_t tune_seed = tf::derive_seed(master_seed, "tune");
    const std::uint64_t train_seed = tf::derive_seed(master_seed, "train");

    // Reject unknown keys early; silent typos would otherwise change runs.
    const std::set<std::string> known = {
        "stages", "seed", "out_dir", "synth.n", "preprocess.cardinality_threshold",
        "preprocess.missing_fill", "split.target", "split.leakage_policy",
        "split.test_fraction", "prune.threshold", "tune.samples", "tune.folds",
        "tune.grid.n_estimators", "tune.grid.max_depth", "tune.grid.min_samples_split",
        "tune.grid.min_samples_leaf", "evaluate.bins", "evaluate.bin_col",
        "advise.requested_col", "advise.alpha", "advise.headroom", "advise.risk_tolerance",
        "advise.granularity"};
    for (const auto& [key, value] : config.entries)
        if (!known.count(key)) throw UsageError("pipeline config has unknown key '" + key + "'");

    // synth
    const auto synth_n = static_cast<std::size_t>(parse_u64(config.require("synth.n"), "synth.n"));
    const std::string trace_path = out_dir + "/trace.csv";
    run_synth(synth_n, synth_seed, trace_path);

    // preprocess
    const std::string records_path = out_dir + "/records.jsonl";
    auto missing_fill = tf::parse_double(config.get_or("preprocess.missing_fill", "0"));
    if (!missing_fill) throw tf::DataError("bad preprocess.missing_fill");
    run_preprocess(trace_path, records_path, "",
                   static_cast<std::size_t>(
                       parse_u64(config.get_or("preprocess.cardinality_threshold", "32"),
                                 "cardinality threshold")),
                   *missing_fill);

    // split
    const std::string target = config.get_or("split.target", "average_usage_cpu");
    std::string train_path = out_dir + "/matrix_train.csv";
    std::string test_path = out_dir + "/matrix_test.csv";
    {
        auto fraction = tf::parse_double(config.get_or("split.test_fraction", "0.2"));
        if (!fraction) throw tf::DataError("bad split.test_fraction");
        run_split(records_path, target, config.get_or("split.leakage_policy", "exclude-siblings"),
                  *fraction, split_seed, train_path, test_path);
    }

    // prune (optional): learn the surviving schema on the training matrix and
    // project the test matrix onto it.
    if (with_prune) {
        auto threshold = tf::parse_double(config.get_or("prune.threshold", "0.95"));
        if (!threshold) throw tf::DataError("bad prune.threshold");
        const std::string pruned_train = out_dir + "/matrix_train_pruned.csv";
        const std::string pruned_test = out_dir + "/matrix_test_pruned.csv";
        run_prune(train_path, *threshold, pruned_train);
        tf::FeatureMatrix pruned = tf::read_matrix_csv(pruned_train);
        tf::FeatureMatrix test = tf::read_matrix_csv(test_path);
        tf::write_matrix_csv(tf::select_features(test, pruned.column_names), pruned_test);
        train_path = pruned_train;
        test_path = pruned_test;
    }

    // tune
    const std::string tune_report = out_dir + "/tune_report.csv";
    const tf::ParamGrid grid = grid_from_text(config.get_or("tune.grid.n_estimators", ""),
                                              config.get_or("tune.grid.max_depth", ""),
                                              config.get_or("tune.grid.min_samples_split", ""),
                                              config.get_or("tune.grid.min_samples_leaf", ""));
    tf::SearchResult search = run_tune(
        train_path,
        static_cast<std::size_t>(parse_u64(config.get_or("tune.samples", "20"), "samples")),
        static_cast<std::size_t>(parse_u64(config.get_or("tune.folds", "3"), "folds")),
        tune_seed, tune_report, threads, grid);

    // train: refit the best config on the full training split.
    tf::ForestConfig best = search.best;
    best.seed = train_seed;
    const std::string model_path = out_dir + "/model.json";
    run_train(train_path, "forest", model_path, best, tf::GBTConfig{}, threads);

    // evaluate
    const std::string report_dir = out_dir + "/reports";
    run_evaluate(model_path, test_path, report_dir, config.get_or("evaluate.bins", "0,5,10,20,50"),
                 config.get_or("evaluate.bin_col", "resource_request_cpus"));

    // advise
    tf::AdvicePolicy policy;
    if (auto v = config.find("advise.alpha")) policy.alpha = *tf::parse_double(*v);
    if (auto v = config.find("advise.headroom")) policy.headroom = *tf::parse_double(*v);
    if (auto v = config.find("advise.risk_tolerance"))
        policy.risk_tolerance = *tf::parse_double(*v);
    if (auto v = config.find("advise.granularity")) policy.granularity = *tf::parse_double(*v);
    const std::string advice_path = out_dir + "/advice.csv";
    run_advise(model_path, test_path, config.get_or("advise.requested_col", "resource_request_cpus"),
               policy, advice_path);

    tf::RunManifest manifest;
    manifest.command = "pipeline";
    manifest.seed = master_seed;
    for (const auto& [key, value] : config.entries) manifest.config.emplace_back(key, value);
    manifest.inputs = {config_path};
    manifest.outputs = {trace_path, records_path, train_path, test_path,
                        tune_report, model_path, report_dir, advice_path};
    manifest.duration_ms = timer.elapsed_ms();
    tf::write_manifest(manifest, out_dir + "/pipeline.manifest.json");
    std::cout << "pipeline complete: " << out_dir << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cluster-trace preprocessing, random-forest training and provisioning advice"};
    app.require_subcommand(1);

    const std::size_t hw_threads = std::max(1u, std::thread::hardware_concurrency());

    // synth
    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic trace");
    std::size_t synth_n = 1000;
    std::uint64_t synth_seed = 0;
    std::string synth_output;
    synth->add_option("--n", synth_n, "number of jobs")->required();
    synth->add_option("--seed", synth_seed, "generator seed")->required();
    synth->add_option("--output", synth_output, "output trace path")->required();

    // preprocess
    auto* preprocess = app.add_subcommand("preprocess", "clean a trace into numeric records");
    std::string pre_input, pre_output, pre_drop;
    std::size_t pre_threshold = 32;
    double pre_fill = 0.0;
    preprocess->add_option("--input", pre_input, "trace csv")->required();
    preprocess->add_option("--output", pre_output, "records jsonl")->required();
    preprocess->add_option("--drop", pre_drop, "comma-separated drop list override");
    preprocess->add_option("--cardinality-threshold", pre_threshold,
                           "max categories for frequency encoding");
    preprocess->add_option("--missing-fill", pre_fill, "fill for missing values");

    // split
    auto* split_cmd = app.add_subcommand("split", "build the feature matrix and split it");
    std::string split_input, split_target = "average_usage_cpu";
    std::string split_policy = "exclude-siblings", split_train_out, split_test_out;
    double split_fraction = 0.2;
    std::uint64_t split_seed = 0;
    split_cmd->add_option("--input", split_input, "records jsonl")->required();
    split_cmd->add_option("--target", split_target, "target column");
    split_cmd->add_option("--leakage-policy", split_policy, "exclude-siblings or none");
    split_cmd->add_option("--test-fraction", split_fraction, "held-out fraction");
    split_cmd->add_option("--seed", split_seed, "shuffle seed")->required();
    split_cmd->add_option("--train-out", split_train_out, "training matrix path")->required();
    split_cmd->add_option("--test-out", split_test_out, "test matrix path")->required();

    // correlate
    auto* correlate = app.add_subcommand("correlate", "write the feature correlation grid");
    std::string corr_input, corr_output;
    correlate->add_option("--input", corr_input, "matrix csv")->required();
    correlate->add_option("--output", corr_output, "correlation csv")->required();

    // prune
    auto* prune = app.add_subcommand("prune", "drop redundant correlated features");
    std::string prune_input, prune_output;
    double prune_threshold = 0.95;
    prune->add_option("--input", prune_input, "matrix csv")->required();
    prune->add_option("--threshold", prune_threshold, "absolute correlation threshold");
    prune->add_option("--output", prune_output, "pruned matrix path")->required();

    // tune
    auto* tune = app.add_subcommand("tune", "randomized hyperparameter search");
    std::string tune_input, tune_report;
    std::size_t tune_samples = 20, tune_folds = 3, tune_threads = hw_threads;
    std::uint64_t tune_seed = 0;
    std::string tune_grid_ne, tune_grid_depth, tune_grid_split, tune_grid_leaf;
    tune->add_option("--input", tune_input, "training matrix csv")->required();
    tune->add_option("--samples", tune_samples, "parameter sets to sample");
    tune->add_option("--folds", tune_folds, "cross-validation folds");
    tune->add_option("--seed", tune_seed, "search seed")->required();
    tune->add_option("--report", tune_report, "trial report path")->required();
    tune->add_option("--threads", tune_threads, "training threads");
    tune->add_option("--grid-n-estimators", tune_grid_ne, "override grid axis (comma list)");
    tune->add_option("--grid-max-depth", tune_grid_depth,
                     "override grid axis (comma list, 'none' for unbounded)");
    tune->add_option("--grid-min-samples-split", tune_grid_split, "override grid axis");
    tune->add_option("--grid-min-samples-leaf", tune_grid_leaf, "override grid axis");

    // train
    auto* train = app.add_subcommand("train", "train a model on a matrix");
    std::string train_input, train_kind = "forest", train_model_out;
    std::size_t train_ne = 100, train_min_split = 2, train_min_leaf = 1;
    long long train_depth = 0;
    std::string train_max_features = "all";
    double train_bootstrap = 1.0;
    std::uint64_t train_seed = 0;
    std::size_t train_threads = hw_threads;
    std::size_t gbt_rounds = 100;
    double gbt_rate = 0.1;
    long long gbt_depth = 3;
    train->add_option("--input", train_input, "training matrix csv")->required();
    train->add_option("--model", train_kind, "forest, linear or gbt");
    train->add_option("--model-out", train_model_out, "model path")->required();
    train->add_option("--n-estimators", train_ne, "forest: number of trees");
    train->add_option("--max-depth", train_depth, "forest: depth cap (0 = unbounded)");
    train->add_option("--min-samples-split", train_min_split, "forest: split minimum");
    train->add_option("--min-samples-leaf", train_min_leaf, "forest: leaf minimum");
    train->add_option("--max-features", train_max_features, "all, fraction:F or count:K");
    train->add_option("--bootstrap-size", train_bootstrap, "bootstrap fraction of n");
    train->add_option("--seed", train_seed, "forest seed");
    train->add_option("--threads", train_threads, "training threads");
    train->add_option("--gbt-rounds", gbt_rounds, "gbt: boosting rounds");
    train->add_option("--gbt-learning-rate", gbt_rate, "gbt: learning rate");
    train->add_option("--gbt-max-depth", gbt_depth, "gbt: tree depth (0 = unbounded)");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score a model and export report data");
    std::string eval_model, eval_input, eval_report_dir;
    std::string eval_bins = "0,5,10,20,50", eval_bin_col = "resource_request_cpus";
    evaluate->add_option("--model", eval_model, "model path")->required();
    evaluate->add_option("--input", eval_input, "test matrix csv")->required();
    evaluate->add_option("--report-dir", eval_report_dir, "report directory")->required();
    evaluate->add_option("--bins", eval_bins, "bin edges (comma list)");
    evaluate->add_option("--bin-col", eval_bin_col, "bin feature column");

    // predict
    auto* predict = app.add_subcommand("predict", "point and interval predictions");
    std::string pred_model, pred_input, pred_output;
    double pred_alpha = 0.1;
    predict->add_option("--model", pred_model, "model path")->required();
    predict->add_option("--input", pred_input, "matrix csv")->required();
    predict->add_option("--output", pred_output, "predictions csv")->required();
    predict->add_option("--alpha", pred_alpha, "interval level");

    // advise
    auto* advise = app.add_subcommand("advise", "provisioning recommendations and risk flags");
    std::string adv_model, adv_input, adv_requested = "resource_request_cpus", adv_output;
    tf::AdvicePolicy adv_policy;
    advise->add_option("--model", adv_model, "forest model path")->required();
    advise->add_option("--input", adv_input, "matrix csv")->required();
    advise->add_option("--requested-col", adv_requested, "column holding requested units");
    advise->add_option("--alpha", adv_policy.alpha, "interval level");
    advise->add_option("--headroom", adv_policy.headroom, "margin on the upper bound");
    advise->add_option("--risk-tolerance", adv_policy.risk_tolerance, "SLA flag tolerance");
    advise->add_option("--granularity", adv_policy.granularity, "allocation rounding unit");
    advise->add_option("--output", adv_output, "advice csv (stdout if omitted)");

    // savings
    auto* savings = app.add_subcommand("savings", "cluster-level cost savings estimate");
    double savings_cores = 0.0, savings_reduction = 0.0;
    savings->add_option("--cores", savings_cores, "cluster size in cores")->required();
    savings->add_option("--reduction", savings_reduction, "over-provisioning reduction fraction")
        ->required();

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "run the whole chain from one config");
    std::string pipeline_config;
    std::size_t pipeline_threads = hw_threads;
    pipeline->add_option("--config", pipeline_config, "flat key=value config file")->required();
    pipeline->add_option("--threads", pipeline_threads, "training threads");

    try {
        app.parse(argc, argv);

        if (synth->parsed()) run_synth(synth_n, synth_seed, synth_output);
        else if (preprocess->parsed())
            run_preprocess(pre_input, pre_output, pre_drop, pre_threshold, pre_fill);
        else if (split_cmd->parsed())
            run_split(split_input, split_target, split_policy, split_fraction, split_seed,
                      split_train_out, split_test_out);
        else if (correlate->parsed()) run_correlate(corr_input, corr_output);
        else if (prune->parsed()) run_prune(prune_input, prune_threshold, prune_output);
        else if (tune->parsed())
            run_tune(tune_input, tune_samples, tune_folds, tune_seed, tune_report, tune_threads,
                     grid_from_text(tune_grid_ne, tune_grid_depth, tune_grid_split,
                                    tune_grid_leaf));
        else if (train->parsed()) {
            tf::GBTConfig gbt_config;
            gbt_config.n_rounds = gbt_rounds;
            gbt_config.learning_rate = gbt_rate;
            if (gbt_depth > 0) gbt_config.max_depth = static_cast<std::size_t>(gbt_depth);
            else gbt_config.max_depth.reset();
            run_train(train_input, train_kind, train_model_out,
                      forest_config_from_flags(train_ne, train_depth, train_min_split,
                                               train_min_leaf, train_max_features,
                                               train_bootstrap, train_seed),
                      gbt_config, train_threads);
        } else if (evaluate->parsed())
            run_evaluate(eval_model, eval_input, eval_report_dir, eval_bins, eval_bin_col);
        else if (predict->parsed()) run_predict(pred_model, pred_input, pred_output, pred_alpha);
        else if (advise->parsed())
            run_advise(adv_model, adv_input, adv_requested, adv_policy, adv_output);
        else if (savings->parsed()) run_savings(savings_cores, savings_reduction);
        else if (pipeline->parsed()) run_pipeline(pipeline_config, pipeline_threads);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const tf::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
