#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "traceforest/dataset.hpp"
#include "traceforest/rng.hpp"

namespace traceforest {

// How many features each split considers: all of them, a fraction of the
// column count, or a fixed count. Resolved counts are clamped to [1, p].
struct MaxFeatures {
    enum class Kind { All, Fraction, Count };
    Kind kind = Kind::All;
    double value = 0.0;

    static MaxFeatures all() { return {}; }
    static MaxFeatures fraction(double f) { return {Kind::Fraction, f}; }
    static MaxFeatures count(std::size_t k) { return {Kind::Count, static_cast<double>(k)}; }

    std::size_t resolve(std::size_t n_features) const;
    std::string to_text() const;
    static MaxFeatures from_text(const std::string& text);
};

struct ForestConfig {
    std::size_t n_estimators = 100;
    std::optional<std::size_t> max_depth; // absent = unbounded
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    MaxFeatures max_features = MaxFeatures::all();
    double bootstrap_size = 1.0; // fraction of n, with replacement
    std::uint64_t seed = 0;

    void validate() const; // throws DataError on out-of-range fields
    std::string describe() const;
};

// Flat node storage; root at index 0. feature_index < 0 marks a leaf.
// Rows with feature value <= threshold go left.
struct TreeNode {
    std::int32_t feature_index = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;          // leaf: mean of resident targets
    std::uint32_t n_samples = 0;
    double sse_reduction = 0.0;  // internal: parent SSE minus child SSE
};

struct Tree {
    std::vector<TreeNode> nodes;

    bool empty() const { return nodes.empty(); }
    double predict_row(const double* x) const;
};

struct RandomForestModel {
    std::vector<Tree> trees;
    ForestConfig config;
    std::vector<std::string> feature_names;
    std::vector<double> importances;
    std::uint64_t schema_fp = 0;

    std::size_t n_features() const { return feature_names.size(); }
};

struct IntervalPrediction {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double confidence = 0.0;
};

struct SplitChoice {
    std::size_t feature = 0;
    double threshold = 0.0;
    double sse_reduction = 0.0;
};

// Best SSE-reducing split among the candidate features, thresholds at
// midpoints of consecutive distinct sorted values. Ties break toward the
// lowest feature index, then the lowest threshold. Absent when no split
// strictly reduces SSE or both children cannot reach min_samples_leaf.
std::optional<SplitChoice> best_split(const std::vector<std::vector<double>>& columns,
                                      const std::vector<double>& targets,
                                      const std::vector<std::size_t>& candidate_features,
                                      std::size_t min_samples_leaf = 1);

// Grows one CART regression tree on the full data (no bootstrap). The rng
// stream feeds the per-node feature subsets when max_features < all.
Tree fit_tree(const std::vector<std::vector<double>>& columns, const std::vector<double>& y,
              const ForestConfig& config, Rng rng);

// Trains n_estimators trees on with-replacement bootstraps. Each tree owns
// an rng stream derived from (config.seed, tree index), so results are
// bit-identical whatever the thread count.
RandomForestModel fit_forest(const FeatureMatrix& m, const ForestConfig& config,
                             std::size_t n_threads = 1);
RandomForestModel fit_forest(const std::vector<std::vector<double>>& columns,
                             const std::vector<double>& y,
                             const std::vector<std::string>& feature_names,
                             const ForestConfig& config, std::size_t n_threads = 1);

double predict_point(const RandomForestModel& model, const std::vector<double>& x);
IntervalPrediction predict_interval(const RandomForestModel& model, const std::vector<double>& x,
                                    double alpha);
std::vector<double> predict_matrix(const RandomForestModel& model, const FeatureMatrix& m);

// Impurity importances: per-feature SSE reductions summed over each tree,
// averaged across the ensemble, normalized to sum 1. All-leaf forests give
// the zero vector.
std::vector<double> feature_importances(const RandomForestModel& model);

// Indices of the k largest importances, ties toward the lower index,
// ordered by decreasing importance.
std::vector<std::size_t> select_top_k(const std::vector<double>& importances, std::size_t k);

} // namespace traceforest
