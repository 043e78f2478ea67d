#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "traceforest/dataset.hpp"
#include "traceforest/errors.hpp"
#include "traceforest/rng.hpp"
#include "traceforest/trace_ingest.hpp"

using namespace traceforest;

namespace {

PreprocessedTable table_from(const std::vector<std::string>& columns,
                             const std::vector<std::vector<double>>& rows) {
    PreprocessedTable table;
    table.columns = columns;
    table.rows = rows;
    return table;
}

FeatureMatrix matrix_from(const std::vector<std::string>& names,
                          const std::vector<std::vector<double>>& rows) {
    FeatureMatrix m;
    m.rows = rows.size();
    m.column_names = names;
    m.target_name = "y";
    for (const auto& row : rows) {
        m.values.insert(m.values.end(), row.begin(), row.end());
        m.target.push_back(0.0);
    }
    return m;
}

} // namespace

TEST_CASE("build_feature_matrix applies the leakage policy") {
    PreprocessedTable table = preprocess_records(generate_synthetic_trace(5, 2),
                                                 PreprocessConfig{});

    FeatureMatrix guarded =
        build_feature_matrix(table, "average_usage_cpu", LeakagePolicy::ExcludeSiblings);
    const std::set<std::string> names(guarded.column_names.begin(), guarded.column_names.end());
    CHECK(names.count("average_usage_cpu") == 0);
    CHECK(names.count("average_usage_memory") == 0);
    CHECK(names.count("maximum_usage_cpu") == 1);
    CHECK(guarded.rows == 5);
    CHECK(guarded.target.size() == 5);

    FeatureMatrix open = build_feature_matrix(table, "average_usage_cpu", LeakagePolicy::None);
    const std::set<std::string> open_names(open.column_names.begin(), open.column_names.end());
    CHECK(open_names.count("average_usage_cpu") == 0); // target is never a feature
    CHECK(open_names.count("average_usage_memory") == 1);

    CHECK_THROWS_AS(build_feature_matrix(table, "no_such_column", LeakagePolicy::None),
                    SchemaError);
    PreprocessedTable empty;
    empty.columns = table.columns;
    CHECK_THROWS_AS(build_feature_matrix(empty, "average_usage_cpu", LeakagePolicy::None),
                    DataError);
}

TEST_CASE("full synthetic schema lands near 25 features") {
    PreprocessedTable table = preprocess_records(generate_synthetic_trace(200, 9),
                                                 PreprocessConfig{});
    FeatureMatrix m =
        build_feature_matrix(table, "average_usage_cpu", LeakagePolicy::ExcludeSiblings);
    CHECK(m.cols() >= 20);
    CHECK(m.cols() <= 30);
}

TEST_CASE("correlation_matrix hand cases") {
    FeatureMatrix m = matrix_from({"a", "b"}, {{1, 1}, {2, 2}, {3, 3}});
    auto corr = correlation_matrix(m);
    CHECK(corr[0][1] == 1.0);
    CHECK(corr[0][0] == 1.0);

    FeatureMatrix neg = matrix_from({"a", "b"}, {{1, -1}, {2, -2}, {3, -3}});
    CHECK(correlation_matrix(neg)[0][1] == -1.0);

    FeatureMatrix pair = matrix_from({"x", "y"}, {{1, 1}, {2, 2}, {3, 4}});
    CHECK(correlation_matrix(pair)[0][1] ==
          doctest::Approx(0.9819805060619659).epsilon(1e-14));

    FeatureMatrix constant = matrix_from({"c", "x"}, {{5, 1}, {5, 2}, {5, 9}});
    auto cc = correlation_matrix(constant);
    CHECK(cc[0][1] == 0.0);
    CHECK(cc[1][0] == 0.0);

    FeatureMatrix tiny = matrix_from({"a"}, {{1}});
    CHECK_THROWS_AS(correlation_matrix(tiny), DataError);
}

TEST_CASE("correlation_matrix is symmetric with unit diagonal") {
    Rng rng(31);
    FeatureMatrix m;
    m.rows = 40;
    for (int c = 0; c < 8; ++c) m.column_names.push_back("f" + std::to_string(c));
    m.target_name = "y";
    m.target.assign(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows * 8; ++i) m.values.push_back(rng.next_range(-3, 3));

    auto corr = correlation_matrix(m);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(corr[i][i] == 1.0);
        for (std::size_t j = 0; j < 8; ++j) {
            CHECK(corr[i][j] == corr[j][i]);
            CHECK(std::fabs(corr[i][j]) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("prune_correlated drops the later duplicate and is idempotent") {
    Rng rng(13);
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < 30; ++r) {
        const double a = rng.next_range(0, 1), b = rng.next_range(0, 1);
        rows.push_back({a, b, a}); // third column duplicates the first
    }
    FeatureMatrix m = matrix_from({"a", "b", "dup"}, rows);

    FeatureMatrix pruned = prune_correlated(m, 0.95);
    CHECK(pruned.column_names == std::vector<std::string>{"a", "b"});

    FeatureMatrix twice = prune_correlated(pruned, 0.95);
    CHECK(twice.column_names == pruned.column_names);
    CHECK(twice.values == pruned.values);

    // independent columns survive
    auto corr = correlation_matrix(pruned);
    CHECK(std::fabs(corr[0][1]) <= 0.95);

    // threshold 1.0 with no exact duplicates changes nothing
    FeatureMatrix loose = prune_correlated(m, 1.0);
    CHECK(loose.column_names == m.column_names);

    CHECK_THROWS_AS(prune_correlated(m, 0.0), DataError);
    CHECK_THROWS_AS(prune_correlated(m, 1.5), DataError);
}

TEST_CASE("no surviving pair exceeds the prune threshold") {
    Rng rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        FeatureMatrix m;
        m.rows = 25;
        m.target_name = "y";
        m.target.assign(m.rows, 0.0);
        const std::size_t p = 6;
        std::vector<std::vector<double>> cols(p, std::vector<double>(m.rows));
        for (auto& col : cols)
            for (auto& v : col) v = rng.next_range(-1, 1);
        // overlap some columns so redundancy actually occurs
        for (std::size_t r = 0; r < m.rows; ++r) {
            cols[3][r] = cols[0][r] + 0.05 * cols[1][r];
            cols[5][r] = -cols[2][r] + 0.1 * rng.next_sym();
        }
        for (std::size_t c = 0; c < p; ++c) m.column_names.push_back("f" + std::to_string(c));
        for (std::size_t r = 0; r < m.rows; ++r)
            for (std::size_t c = 0; c < p; ++c) m.values.push_back(cols[c][r]);

        const double threshold = 0.6 + 0.35 * rng.next_unit();
        FeatureMatrix pruned = prune_correlated(m, threshold);
        const auto corr = correlation_matrix(pruned);
        for (std::size_t i = 0; i < pruned.cols(); ++i)
            for (std::size_t j = i + 1; j < pruned.cols(); ++j)
                CHECK(std::fabs(corr[i][j]) <= threshold);
    }
}

TEST_CASE("train_test_split sizes, determinism and disjointness") {
    FeatureMatrix m = matrix_from({"x"}, {{0}, {1}, {2}, {3}, {4}, {5}, {6}, {7}, {8}, {9}});
    SplitIndices split = train_test_split(m, 0.2, 1);
    CHECK(split.test.size() == 2);
    CHECK(split.train.size() == 8);

    std::set<std::size_t> all(split.train.begin(), split.train.end());
    all.insert(split.test.begin(), split.test.end());
    CHECK(all.size() == 10);

    SplitIndices again = train_test_split(m, 0.2, 1);
    CHECK(again.train == split.train);
    CHECK(again.test == split.test);

    FeatureMatrix two = matrix_from({"x"}, {{0}, {1}});
    SplitIndices half = train_test_split(two, 0.5, 3);
    CHECK(half.train.size() == 1);
    CHECK(half.test.size() == 1);

    CHECK_THROWS_AS(train_test_split(m, 0.0, 1), DataError);
    CHECK_THROWS_AS(train_test_split(m, 1.0, 1), DataError);
}

TEST_CASE("kfold_indices partitions rows into near-equal folds") {
    FoldPlan nine = kfold_indices(9, 3, 0);
    for (const auto& fold : nine.folds) CHECK(fold.size() == 3);

    FoldPlan ten = kfold_indices(10, 3, 0);
    std::multiset<std::size_t> sizes;
    for (const auto& fold : ten.folds) sizes.insert(fold.size());
    CHECK(sizes == std::multiset<std::size_t>{3, 3, 4});

    CHECK_THROWS_AS(kfold_indices(3, 4, 0), DataError);
    CHECK_THROWS_AS(kfold_indices(5, 1, 0), DataError);

    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t rows = 2 + rng.next_below(60);
        const std::size_t k = 2 + rng.next_below(rows - 1);
        FoldPlan plan = kfold_indices(rows, k, rng.next_u64());
        std::set<std::size_t> seen;
        std::size_t total = 0;
        for (const auto& fold : plan.folds) {
            total += fold.size();
            seen.insert(fold.begin(), fold.end());
            CHECK(fold.size() >= rows / k);
            CHECK(fold.size() <= rows / k + 1);
        }
        CHECK(total == rows);
        CHECK(seen.size() == rows); // disjoint and covering
        CHECK(*seen.rbegin() == rows - 1);
    }
}

TEST_CASE("matrix csv round-trip is bit-exact and fingerprint-checked") {
    const std::string dir = std::filesystem::temp_directory_path() /
                            "traceforest_dataset_test";
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/matrix.csv";

    PreprocessedTable table = preprocess_records(generate_synthetic_trace(12, 4),
                                                 PreprocessConfig{});
    FeatureMatrix m =
        build_feature_matrix(table, "average_usage_cpu", LeakagePolicy::ExcludeSiblings);
    write_matrix_csv(m, path);
    FeatureMatrix back = read_matrix_csv(path);
    CHECK(back.column_names == m.column_names);
    CHECK(back.target_name == m.target_name);
    CHECK(back.values == m.values);
    CHECK(back.target == m.target);

    std::filesystem::remove(path + ".meta.json");
    CHECK_THROWS_AS(read_matrix_csv(path), SchemaError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("take_rows and select_features slice consistently") {
    FeatureMatrix m = matrix_from({"a", "b", "c"}, {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
    m.target = {10, 11, 12};
    FeatureMatrix rows = take_rows(m, {2, 0});
    CHECK(rows.rows == 2);
    CHECK(rows.at(0, 1) == 8.0);
    CHECK(rows.target == std::vector<double>{12, 10});

    FeatureMatrix cols = select_features(m, {"c", "a"});
    CHECK(cols.column_names == std::vector<std::string>{"c", "a"});
    CHECK(cols.at(1, 0) == 6.0);
    CHECK(cols.at(1, 1) == 4.0);
    CHECK_THROWS_AS(select_features(m, {"missing"}), SchemaError);
}
