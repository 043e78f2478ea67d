#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const char* cli_path() {
#ifdef TRACEFOREST_BIN_PATH
    return TRACEFOREST_BIN_PATH;
#else
    return "traceforest";
#endif
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args, const std::string& capture = "") {
    std::string cmd = std::string(cli_path()) + " " + args;
    if (!capture.empty()) cmd += " >" + capture + " 2>&1";
    else cmd += " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::size_t count_lines(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

} // namespace

TEST_CASE("synth writes the requested rows and a manifest") {
    TempDir dir("tf_cli_synth");
    const std::string trace = dir.file("t.csv");
    CHECK(run("synth --n 100 --seed 1 --output " + trace) == 0);
    REQUIRE(fs::exists(trace));
    CHECK(count_lines(trace) == 101); // header + rows
    CHECK(fs::exists(trace + ".manifest.json"));
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(run("no-such-subcommand") == 1);
    CHECK(run("synth --n 10") == 1);            // missing required flags
    CHECK(run("synth --bogus 1") == 1);         // unknown flag
    CHECK(run("--help") == 0);
}

TEST_CASE("data errors exit with code 2 and name the path") {
    TempDir dir("tf_cli_data");
    const std::string log = dir.file("log.txt");
    CHECK(run("train --input " + dir.file("missing.csv") + " --model-out " + dir.file("m.json"),
              log) == 2);
    CHECK(slurp(log).find("missing.csv") != std::string::npos);
}

TEST_CASE("the full command chain runs end to end") {
    TempDir dir("tf_cli_chain");
    const std::string trace = dir.file("trace.csv");
    const std::string records = dir.file("records.jsonl");
    const std::string train_m = dir.file("train.csv");
    const std::string test_m = dir.file("test.csv");
    const std::string model = dir.file("model.json");
    const std::string lin_model = dir.file("linear.json");
    const std::string reports = dir.file("reports");
    const std::string preds = dir.file("preds.csv");
    const std::string advice = dir.file("advice.csv");
    const std::string corr = dir.file("corr.csv");
    const std::string pruned = dir.file("pruned.csv");
    const std::string tune_report = dir.file("tune.csv");

    REQUIRE(run("synth --n 300 --seed 5 --output " + trace) == 0);
    REQUIRE(run("preprocess --input " + trace + " --output " + records) == 0);
    CHECK(fs::exists(records + ".meta.json"));
    REQUIRE(run("split --input " + records + " --seed 5 --train-out " + train_m +
                " --test-out " + test_m) == 0);
    CHECK(fs::exists(train_m + ".meta.json"));

    REQUIRE(run("correlate --input " + train_m + " --output " + corr) == 0);
    CHECK(count_lines(corr) >= 2);
    REQUIRE(run("prune --input " + train_m + " --threshold 0.99 --output " + pruned) == 0);

    REQUIRE(run("tune --input " + train_m + " --samples 2 --folds 2 --seed 5 --report " +
                tune_report + " --threads 2 --grid-n-estimators 4,8 --grid-max-depth 4" +
                " --grid-min-samples-split 2 --grid-min-samples-leaf 1") == 0);
    CHECK(count_lines(tune_report) == 3); // header + 2 trials

    REQUIRE(run("train --input " + train_m + " --model forest --n-estimators 12" +
                " --max-depth 8 --seed 5 --threads 2 --model-out " + model) == 0);
    REQUIRE(run("train --input " + train_m + " --model linear --model-out " + lin_model) == 0);

    REQUIRE(run("evaluate --model " + model + " --input " + test_m + " --report-dir " +
                reports) == 0);
    CHECK(fs::exists(reports + "/metrics.csv"));
    CHECK(fs::exists(reports + "/parity.csv"));
    CHECK(fs::exists(reports + "/residuals.csv"));
    CHECK(fs::exists(reports + "/bins.csv"));
    CHECK(fs::exists(reports + "/correlation.csv"));
    CHECK(fs::exists(reports + "/manifest.json"));

    REQUIRE(run("predict --model " + model + " --input " + test_m + " --output " + preds) == 0);
    CHECK(count_lines(preds) >= 2);

    const std::string advise_log = dir.file("advise_log.txt");
    REQUIRE(run("advise --model " + model + " --input " + test_m +
                " --requested-col resource_request_cpus --output " + advice, advise_log) == 0);
    CHECK(fs::exists(advice));
    CHECK(slurp(advise_log).find("total_requested=") != std::string::npos);

    const std::string savings_log = dir.file("savings_log.txt");
    REQUIRE(run("savings --cores 10000 --reduction 0.10", savings_log) == 0);
    CHECK(slurp(savings_log).find("saved_units=1000") != std::string::npos);

    // evaluating with a linear model goes through the same container
    const std::string lin_reports = dir.file("lin_reports");
    CHECK(run("evaluate --model " + lin_model + " --input " + test_m + " --report-dir " +
              lin_reports) == 0);
}

TEST_CASE("pipeline configs are validated") {
    TempDir dir("tf_cli_pipeline_cfg");
    const std::string config = dir.file("p.conf");
    {
        std::ofstream out(config);
        out << "stages = synth, preprocess, split, tune, evaluate, advise\n"; // train missing
        out << "seed = 1\n";
        out << "out_dir = " << dir.file("run") << "\n";
        out << "synth.n = 50\n";
    }
    const std::string log = dir.file("log.txt");
    CHECK(run("pipeline --config " + config, log) == 1);
    CHECK(slurp(log).find("train") != std::string::npos);

    const std::string config2 = dir.file("p2.conf");
    {
        std::ofstream out(config2);
        out << "stages = synth, preprocess, split, tune, train, evaluate, advise\n";
        out << "seed = 1\n";
        out << "out_dir = " << dir.file("run2") << "\n";
        out << "synth.n = 50\n";
        out << "bogus.key = 3\n";
    }
    CHECK(run("pipeline --config " + config2, log) == 1);
    CHECK(slurp(log).find("bogus.key") != std::string::npos);
}
