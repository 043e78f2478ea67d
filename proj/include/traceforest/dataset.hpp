#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "traceforest/trace_ingest.hpp"

namespace traceforest {

// Dense numeric design matrix plus the aligned target vector. Immutable
// after construction; the target never appears among the feature columns.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::vector<std::string> column_names;
    std::vector<double> values; // row-major, rows x column_names.size()
    std::string target_name;
    std::vector<double> target;

    std::size_t cols() const { return column_names.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
    const double* row(std::size_t r) const { return values.data() + r * cols(); }

    // Column-major copy; the tree trainers want contiguous feature columns.
    std::vector<std::vector<double>> to_columns() const;
};

enum class LeakagePolicy {
    ExcludeSiblings, // drop features derived from the target's raw field
    None,
};

LeakagePolicy parse_leakage_policy(const std::string& text);

// The raw-field stem of a derived feature name: "average_usage_cpu" and
// "average_usage_memory" share the stem "average_usage". Passthrough
// columns are their own stem.
std::string feature_stem(const std::string& name);

// Assembles the matrix from a preprocessed table. Column order is
// lexicographic (the table is already sorted); the target column is
// extracted and, under ExcludeSiblings, features sharing its stem are
// removed as well.
FeatureMatrix build_feature_matrix(const PreprocessedTable& table,
                                   const std::string& target_name, LeakagePolicy policy);

// Pearson correlation, square and symmetric. Columns with zero variance
// correlate 0 with everything by convention, keeping downstream pruning
// total. Requires at least two rows.
std::vector<std::vector<double>> correlation_matrix(const FeatureMatrix& m);

// Greedy redundancy pruning in column order: the later column of any pair
// with |r| > threshold is dropped. Idempotent.
FeatureMatrix prune_correlated(const FeatureMatrix& m, double threshold);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

SplitIndices train_test_split(const FeatureMatrix& m, double test_fraction, std::uint64_t seed);

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::vector<std::size_t>> folds;
};

// Seeded shuffle followed by a contiguous partition; fold sizes differ by
// at most one.
FoldPlan kfold_indices(std::size_t rows, std::size_t k, std::uint64_t seed);

FeatureMatrix take_rows(const FeatureMatrix& m, const std::vector<std::size_t>& indices);
FeatureMatrix select_features(const FeatureMatrix& m, const std::vector<std::string>& names);

std::uint64_t schema_fingerprint(const std::vector<std::string>& names);

// Matrix files: delimited text with a header (features then target) plus a
// sidecar "<path>.meta.json" naming the target and schema fingerprint.
void write_matrix_csv(const FeatureMatrix& m, const std::string& path);
FeatureMatrix read_matrix_csv(const std::string& path);

} // namespace traceforest
