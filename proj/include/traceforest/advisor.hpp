#pragma once

#include <string>
#include <vector>

#include "traceforest/dataset.hpp"
#include "traceforest/forest.hpp"

namespace traceforest {

struct AdvicePolicy {
    double alpha = 0.1;          // prediction-interval level
    double headroom = 0.0;       // extra margin on the interval upper bound
    double risk_tolerance = 0.1; // demand above request*(1+tol) raises a flag
    double granularity = 1.0;    // allocation rounding unit

    void validate() const;
};

struct Advice {
    double requested = 0.0;
    IntervalPrediction predicted;
    double recommended = 0.0;
    bool risk_flag = false;
    std::string rationale;
};

// Recommendation anchored to the interval upper bound (plus headroom),
// rounded up to the allocation granularity and never above the request.
// The risk flag fires exactly when the predicted point demand exceeds
// requested * (1 + risk_tolerance).
Advice advise(const RandomForestModel& model, const std::vector<double>& features,
              double requested, const AdvicePolicy& policy);

struct CostEstimate {
    double cluster_units = 0.0;
    double reduction_fraction = 0.0;
    double saved_units = 0.0; // cluster_units * reduction_fraction, exactly
};

CostEstimate estimate_savings(double cluster_units, double reduction_fraction);

struct BatchAdviceSummary {
    double total_requested = 0.0;
    double total_recommended = 0.0;
    double reduction_fraction = 0.0; // 1 - recommended/requested
    std::size_t risk_count = 0;
};

struct BatchAdvice {
    std::vector<Advice> items;
    BatchAdviceSummary summary;
};

BatchAdvice batch_advise(const RandomForestModel& model, const FeatureMatrix& m,
                         const std::vector<double>& requested, const AdvicePolicy& policy);

} // namespace traceforest
