#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "traceforest/dataset.hpp"
#include "traceforest/forest.hpp"

namespace traceforest {

// Candidate axes for the randomized search. The defaults are the standard
// forest grid this toolkit ships with: 4 x 4 x 3 x 3 = 144 combinations.
struct ParamGrid {
    std::vector<std::size_t> n_estimators = {50, 100, 200, 400};
    std::vector<std::optional<std::size_t>> max_depth = {std::nullopt, 10, 20, 40};
    std::vector<std::size_t> min_samples_split = {2, 5, 10};
    std::vector<std::size_t> min_samples_leaf = {1, 2, 4};

    std::size_t size() const;
    void validate() const;
};

// Uniform sample without replacement from the Cartesian grid; asking for
// more samples than the grid holds returns the whole grid. Deterministic
// per seed.
std::vector<ForestConfig> sample_params(const ParamGrid& grid, std::size_t n_samples,
                                        std::uint64_t seed);

struct Trial {
    ForestConfig config;
    std::vector<double> fold_r2;
    double mean_r2 = 0.0;
};

struct SearchResult {
    std::vector<Trial> trials; // in sampling order
    std::size_t best_index = 0;
    ForestConfig best;
    FoldPlan folds; // shared by every trial, kept for auditability
};

// Scores every sampled config with k-fold cross-validation (train on k-1
// folds, R^2 on the held-out fold, averaged). One fold plan serves all
// trials so comparisons are paired; ties break toward the earlier trial.
SearchResult randomized_search(const FeatureMatrix& m, const ParamGrid& grid,
                               std::size_t n_samples, std::size_t k, std::uint64_t seed,
                               std::size_t n_threads = 1);

// Trial table plus the best row, as delimited text.
void write_search_report(const SearchResult& result, std::ostream& out);

} // namespace traceforest
