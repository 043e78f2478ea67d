#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "traceforest/dataset.hpp"
#include "traceforest/forest.hpp"

namespace traceforest {

struct LinearModel {
    std::vector<double> coefficients; // one per feature column
    double intercept = 0.0;
    std::vector<std::string> feature_names;
    std::uint64_t schema_fp = 0;
};

// Least squares via the normal equations with a small ridge damping
// (lambda = 1e-8) so rank-deficient systems stay solvable.
LinearModel fit_linear(const FeatureMatrix& m);
LinearModel fit_linear(const std::vector<std::vector<double>>& columns,
                       const std::vector<double>& y,
                       const std::vector<std::string>& feature_names);

double predict_linear(const LinearModel& model, const std::vector<double>& x);
std::vector<double> predict_matrix(const LinearModel& model, const FeatureMatrix& m);

struct GBTConfig {
    std::size_t n_rounds = 100;
    double learning_rate = 0.1;
    std::optional<std::size_t> max_depth = 3; // absent = unbounded

    void validate() const;
};

// Stagewise least-squares boosting: prediction = initial + rate * sum of
// per-round tree outputs.
struct GBTModel {
    double initial = 0.0;
    double learning_rate = 0.1;
    std::vector<Tree> trees;
    GBTConfig config;
    std::vector<std::string> feature_names;
    std::uint64_t schema_fp = 0;
};

GBTModel fit_gbt(const FeatureMatrix& m, const GBTConfig& config);
GBTModel fit_gbt(const std::vector<std::vector<double>>& columns, const std::vector<double>& y,
                 const std::vector<std::string>& feature_names, const GBTConfig& config);

double predict_gbt(const GBTModel& model, const std::vector<double>& x);
std::vector<double> predict_matrix(const GBTModel& model, const FeatureMatrix& m);

} // namespace traceforest
