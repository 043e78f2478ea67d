// Acceptance suite: every criterion below runs at its stated tolerance and
// prints one [PASS]/[FAIL] line. REQUIRE aborts a criterion on the first
// violated assertion, so a printed [PASS] means every check in it held.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "oracle_helpers.hpp"
#include "traceforest/advisor.hpp"
#include "traceforest/baselines.hpp"
#include "traceforest/dataset.hpp"
#include "traceforest/evaluation.hpp"
#include "traceforest/forest.hpp"
#include "traceforest/model_io.hpp"
#include "traceforest/rng.hpp"
#include "traceforest/trace_ingest.hpp"
#include "traceforest/tuning.hpp"

using namespace traceforest;
namespace fs = std::filesystem;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void pass(int criterion, const char* what, double seconds) {
    std::printf("[PASS] criterion %d: %s (%.2fs)\n", criterion, what, seconds);
    std::fflush(stdout);
}

std::size_t threads() { return 2; }

// The shared synthetic benchmark: 5,000 jobs, seed 7, default preprocessing,
// default target and leakage policy, 80/20 split.
struct Benchmark {
    FeatureMatrix train;
    FeatureMatrix test;
};

const Benchmark& benchmark() {
    static const Benchmark bench = [] {
        PreprocessedTable table =
            preprocess_records(generate_synthetic_trace(5000, 7), PreprocessConfig{});
        FeatureMatrix matrix =
            build_feature_matrix(table, "average_usage_cpu", LeakagePolicy::ExcludeSiblings);
        SplitIndices split = train_test_split(matrix, 0.2, derive_seed(7, "split"));
        Benchmark b;
        b.train = take_rows(matrix, split.train);
        b.test = take_rows(matrix, split.test);
        return b;
    }();
    return bench;
}

ForestConfig tuned_reference_config() {
    ForestConfig config;
    config.n_estimators = 100;
    config.max_depth = 20;
    config.min_samples_split = 10;
    config.min_samples_leaf = 1;
    config.seed = derive_seed(7, "train");
    return config;
}

const RandomForestModel& benchmark_forest() {
    static const RandomForestModel model =
        fit_forest(benchmark().train, tuned_reference_config(), threads());
    return model;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

TEST_CASE("criterion 1: metric oracles") {
    Stopwatch timer;

    const std::vector<double> y = {1, 2, 3};
    const std::vector<double> yhat = {1, 2, 4};
    REQUIRE(std::fabs(mae(y, yhat) - 1.0 / 3.0) < 1e-12);
    REQUIRE(std::fabs(rmse(y, yhat) - 0.5773502691896258) < 1e-12);
    REQUIRE(std::fabs(r2(y, yhat) - 0.5) < 1e-12);

    Rng rng(1001);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.next_below(40);
        std::vector<double> a(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.next_range(-100, 100);
            p[i] = rng.next_range(-100, 100);
        }
        REQUIRE(std::fabs(mae(a, p) - oracle::mae(a, p)) < 1e-12);
        REQUIRE(std::fabs(rmse(a, p) - oracle::rmse(a, p)) < 1e-12);
        REQUIRE(std::fabs(r2(a, p) - oracle::r2(a, p)) < 1e-12);
    }

    REQUIRE(timer.seconds() < 1.0);
    pass(1, "mae/rmse/r2 match hand values and the brute-force oracle", timer.seconds());
}

TEST_CASE("criterion 2: tree oracle equivalence") {
    Stopwatch timer;

    Rng rng(2002);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng.next_below(26);  // up to 30 rows
        const std::size_t p = 1 + rng.next_below(4);   // up to 4 features
        std::vector<std::vector<double>> columns(p, std::vector<double>(n));
        for (auto& col : columns)
            for (auto& v : col) v = rng.next_range(-10, 10);
        std::vector<double> y(n);
        for (auto& v : y) v = rng.next_range(-5, 5);

        ForestConfig config;
        config.max_depth = 2;
        config.max_features = MaxFeatures::all();

        Tree tree = fit_tree(columns, y, config, Rng(0));
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        auto reference = oracle::grow_exhaustive(columns, y, rows, 0, config);

        REQUIRE(oracle::training_sse(tree, columns, y) ==
                oracle::training_sse(*reference, columns, y));
    }

    REQUIRE(timer.seconds() < 10.0);
    pass(2, "single-tree SSE equals exhaustive search on 50 datasets", timer.seconds());
}

TEST_CASE("criterion 3: benchmark accuracy and baseline ordering") {
    Stopwatch timer;

    const Benchmark& bench = benchmark();
    const RandomForestModel& forest = benchmark_forest();
    const double forest_r2 = r2(bench.test.target, predict_matrix(forest, bench.test));

    const LinearModel linear = fit_linear(bench.train);
    const double linear_r2 = r2(bench.test.target, predict_matrix(linear, bench.test));

    REQUIRE(forest_r2 >= 0.9);
    REQUIRE(forest_r2 > linear_r2);

    REQUIRE(timer.seconds() < 60.0);
    std::ostringstream detail;
    detail << "held-out r2 " << forest_r2 << " >= 0.9 and > linear " << linear_r2;
    pass(3, detail.str().c_str(), timer.seconds());
}

TEST_CASE("criterion 4: error grows with job size") {
    Stopwatch timer;

    const Benchmark& bench = benchmark();
    const RandomForestModel& forest = benchmark_forest();
    const std::vector<double> predicted = predict_matrix(forest, bench.test);

    auto it = std::find(bench.test.column_names.begin(), bench.test.column_names.end(),
                        "resource_request_cpus");
    REQUIRE(it != bench.test.column_names.end());
    const auto col = static_cast<std::size_t>(it - bench.test.column_names.begin());
    std::vector<double> requested(bench.test.rows);
    for (std::size_t r = 0; r < bench.test.rows; ++r) requested[r] = bench.test.at(r, col);

    // the workload is imbalanced by construction
    const std::size_t small_jobs = static_cast<std::size_t>(
        std::count_if(requested.begin(), requested.end(), [](double v) { return v < 5.0; }));
    REQUIRE(static_cast<double>(small_jobs) / static_cast<double>(requested.size()) >= 0.8);

    BinReport bins =
        error_by_bin(bench.test.target, predicted, requested, {0, 5, 10, 20, 50});
    REQUIRE(bins.bins[0].count > 0);
    REQUIRE(bins.bins[2].count > 0);
    REQUIRE(bins.bins[0].mae.has_value());
    REQUIRE(bins.bins[2].mae.has_value());
    REQUIRE(*bins.bins[0].mae < *bins.bins[2].mae);

    REQUIRE(timer.seconds() < 60.0);
    std::ostringstream detail;
    detail << "[0,5) mae " << *bins.bins[0].mae << " < [10,20) mae " << *bins.bins[2].mae;
    pass(4, detail.str().c_str(), timer.seconds());
}

TEST_CASE("criterion 5: randomized search over the default grid") {
    Stopwatch timer;

    const Benchmark& bench = benchmark();
    const ParamGrid grid;
    const std::uint64_t seed = 7;

    SearchResult result = randomized_search(bench.train, grid, 20, 3, seed, threads());
    REQUIRE(result.trials.size() == 20);

    std::set<std::string> distinct;
    for (const auto& trial : result.trials) {
        const ForestConfig& c = trial.config;
        REQUIRE(std::count(grid.n_estimators.begin(), grid.n_estimators.end(),
                           c.n_estimators) == 1);
        REQUIRE(std::count(grid.max_depth.begin(), grid.max_depth.end(), c.max_depth) == 1);
        REQUIRE(std::count(grid.min_samples_split.begin(), grid.min_samples_split.end(),
                           c.min_samples_split) == 1);
        REQUIRE(std::count(grid.min_samples_leaf.begin(), grid.min_samples_leaf.end(),
                           c.min_samples_leaf) == 1);
        distinct.insert(c.describe());
        REQUIRE(trial.mean_r2 <= result.trials[result.best_index].mean_r2);
    }
    REQUIRE(distinct.size() == 20);
    REQUIRE(result.trials[result.best_index].mean_r2 >= 0.9);

    SearchResult again = randomized_search(bench.train, grid, 20, 3, seed, threads());
    REQUIRE(again.best_index == result.best_index);
    for (std::size_t i = 0; i < result.trials.size(); ++i) {
        REQUIRE(again.trials[i].config.describe() == result.trials[i].config.describe());
        REQUIRE(again.trials[i].fold_r2 == result.trials[i].fold_r2);
    }

    REQUIRE(timer.seconds() < 120.0);
    std::ostringstream detail;
    detail << "20 distinct grid configs, best mean cv r2 "
           << result.trials[result.best_index].mean_r2 << ", repeat identical";
    pass(5, detail.str().c_str(), timer.seconds());
}

TEST_CASE("criterion 6: prediction interval contracts") {
    Stopwatch timer;

    const Benchmark& bench = benchmark();
    const std::vector<std::size_t> subset_rows = [] {
        std::vector<std::size_t> rows(800);
        std::iota(rows.begin(), rows.end(), 0);
        return rows;
    }();
    FeatureMatrix subset = take_rows(bench.train, subset_rows);

    ForestConfig config;
    config.n_estimators = 30;
    config.max_depth = 8;
    config.seed = 99;
    const RandomForestModel model = fit_forest(subset, config, threads());

    const std::size_t probes = std::min<std::size_t>(1000, bench.test.rows);
    std::vector<double> x(bench.test.cols());
    for (std::size_t r = 0; r < probes; ++r) {
        x.assign(bench.test.row(r), bench.test.row(r) + bench.test.cols());
        const IntervalPrediction wide = predict_interval(model, x, 0.05);
        const IntervalPrediction mid = predict_interval(model, x, 0.1);
        const IntervalPrediction narrow = predict_interval(model, x, 0.2);
        for (const auto& p : {wide, mid, narrow}) {
            REQUIRE(p.lo <= p.point);
            REQUIRE(p.point <= p.hi);
            REQUIRE(p.confidence >= 0.0);
            REQUIRE(p.confidence <= 1.0);
        }
        REQUIRE(wide.lo <= mid.lo);
        REQUIRE(mid.lo <= narrow.lo);
        REQUIRE(narrow.hi <= mid.hi);
        REQUIRE(mid.hi <= wide.hi);
    }

    ForestConfig single = config;
    single.n_estimators = 1;
    const RandomForestModel one_tree = fit_forest(subset, single);
    for (std::size_t r = 0; r < 50; ++r) {
        x.assign(bench.test.row(r), bench.test.row(r) + bench.test.cols());
        const IntervalPrediction p = predict_interval(one_tree, x, 0.1);
        REQUIRE(p.lo == p.point);
        REQUIRE(p.hi == p.point);
        REQUIRE(p.confidence == 1.0);
    }

    REQUIRE(timer.seconds() < 5.0);
    pass(6, "lo <= point <= hi, nested alphas, single-tree degenerate interval",
         timer.seconds());
}

TEST_CASE("criterion 7: advisor worked example and savings") {
    Stopwatch timer;

    // stub ensemble: ten trees at 8 and ten at 10 give interval [8, 10]
    RandomForestModel stub;
    for (int i = 0; i < 20; ++i) {
        Tree tree;
        TreeNode leaf;
        leaf.value = i < 10 ? 8.0 : 10.0;
        leaf.n_samples = 1;
        tree.nodes.push_back(leaf);
        stub.trees.push_back(std::move(tree));
    }
    stub.feature_names = {"f0"};
    stub.schema_fp = schema_fingerprint(stub.feature_names);
    stub.importances = {0.0};

    const Advice advice = advise(stub, {0.0}, 20.0, AdvicePolicy{});
    REQUIRE(advice.predicted.lo == 8.0);
    REQUIRE(advice.predicted.hi == 10.0);
    REQUIRE(advice.predicted.point <= 10.0);
    REQUIRE(advice.recommended == 10.0);
    REQUIRE(advice.risk_flag == false);

    REQUIRE(estimate_savings(10000, 0.10).saved_units == 1000.0);

    REQUIRE(timer.seconds() < 1.0);
    pass(7, "request 20 with interval [8,10] -> recommend 10; savings(10000,0.10)=1000",
         timer.seconds());
}

TEST_CASE("criterion 8: end-to-end pipeline determinism") {
    Stopwatch timer;

#ifndef TRACEFOREST_BIN_PATH
    FAIL("TRACEFOREST_BIN_PATH not defined");
#else
    const std::string bin = TRACEFOREST_BIN_PATH;
    const fs::path base = fs::temp_directory_path() / "tf_accept_pipeline";
    fs::remove_all(base);
    fs::create_directories(base);

    auto write_config = [&](const std::string& name, const std::string& out_dir) {
        const std::string path = (base / name).string();
        std::ofstream out(path);
        out << "stages = synth, preprocess, split, tune, train, evaluate, advise\n";
        out << "seed = 7\n";
        out << "out_dir = " << out_dir << "\n";
        out << "synth.n = 1200\n";
        out << "tune.samples = 4\n";
        out << "tune.folds = 3\n";
        out << "tune.grid.n_estimators = 20,40\n";
        out << "tune.grid.max_depth = 8,none\n";
        out << "tune.grid.min_samples_split = 2,10\n";
        out << "tune.grid.min_samples_leaf = 1\n";
        return path;
    };

    const std::string dir_a = (base / "run_a").string();
    const std::string dir_b = (base / "run_b").string();
    const std::string config_a = write_config("a.conf", dir_a);
    const std::string config_b = write_config("b.conf", dir_b);

    auto run_cli = [&](const std::string& config, int pipeline_threads) {
        const std::string cmd = bin + " pipeline --config " + config + " --threads " +
                                std::to_string(pipeline_threads) + " >/dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    REQUIRE(run_cli(config_a, 2) == 0); // concurrent tree training
    REQUIRE(run_cli(config_b, 1) == 0); // sequential

    for (const char* name :
         {"trace.csv", "records.jsonl", "matrix_train.csv", "matrix_test.csv",
          "tune_report.csv", "model.json", "advice.csv", "reports/metrics.csv",
          "reports/parity.csv", "reports/residuals.csv", "reports/bins.csv",
          "reports/correlation.csv"}) {
        CAPTURE(name);
        REQUIRE(slurp(dir_a + "/" + name) == slurp(dir_b + "/" + name));
    }
    fs::remove_all(base);

    REQUIRE(timer.seconds() < 180.0);
    pass(8, "two pipeline runs (threads 2 vs 1) produce byte-identical artifacts",
         timer.seconds());
#endif
}

TEST_CASE("criterion 9: preprocessing conformance on a full fixture") {
    Stopwatch timer;

    std::stringstream file;
    file << "Unnamed:0,time,machine_id,constraint,user,collection_name,"
            "collection_logical_name,start_after_collection,scheduling_class,priority,"
            "resource_request,average_usage,maximum_usage,random_sample_usage,"
            "cpu_usage_distribution,tail_cpu_usage_distribution\n";
    for (int i = 0; i < 6; ++i) {
        file << i << ",123,m1,[],alice,c,l,0," << (i % 2 ? "prod" : "batch") << ",100,"
             << "\"{'cpus': 2.0, 'memory': 4.0}\",\"{'cpus': 0.5, 'memory': 1.0}\","
             << "\"{'cpus': 0.9, 'memory': 1.5}\",\"{'cpus': 0.4, 'memory': 0.8}\","
             << "\"[0.1, 0.2, 0.3]\",\"[0.8, 0.9]\"\n";
    }
    IngestResult ingest = parse_trace_file(file, PreprocessConfig{}, "<fixture>");
    REQUIRE(ingest.records.size() == 6);
    PreprocessedTable table = preprocess_records(ingest.records, PreprocessConfig{});

    const std::vector<std::string> expected = {
        "average_usage_cpu",
        "average_usage_memory",
        "cpu_usage_distribution_max",
        "cpu_usage_distribution_mean",
        "cpu_usage_distribution_min",
        "cpu_usage_distribution_q25",
        "cpu_usage_distribution_q50",
        "cpu_usage_distribution_q75",
        "cpu_usage_distribution_std",
        "maximum_usage_cpu",
        "maximum_usage_memory",
        "priority",
        "random_sample_usage_cpu",
        "random_sample_usage_memory",
        "resource_request_cpus",
        "resource_request_memory",
        "scheduling_class_freq",
        "tail_cpu_usage_distribution_max",
        "tail_cpu_usage_distribution_mean",
        "tail_cpu_usage_distribution_min",
        "tail_cpu_usage_distribution_q25",
        "tail_cpu_usage_distribution_q50",
        "tail_cpu_usage_distribution_q75",
        "tail_cpu_usage_distribution_std",
    };
    REQUIRE(table.columns == expected);

    for (const auto& dropped : PreprocessConfig::default_drop_columns())
        for (const auto& column : table.columns)
            REQUIRE(column.find(dropped) == std::string::npos);

    REQUIRE(timer.seconds() < 1.0);
    pass(9, "fixture yields exactly the expected derived column set", timer.seconds());
}
