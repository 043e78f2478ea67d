#include "traceforest/advisor.hpp"

#include <cmath>

#include "traceforest/errors.hpp"
#include "traceforest/strings.hpp"

namespace traceforest {

void AdvicePolicy::validate() const {
    if (alpha <= 0.0 || alpha >= 1.0) throw DataError("alpha must be in (0, 1)");
    if (headroom < 0.0) throw DataError("headroom must be >= 0");
    if (risk_tolerance < 0.0) throw DataError("risk_tolerance must be >= 0");
    if (granularity <= 0.0) throw DataError("granularity must be > 0");
}

Advice advise(const RandomForestModel& model, const std::vector<double>& features,
              double requested, const AdvicePolicy& policy) {
    policy.validate();
    if (requested <= 0.0) throw DataError("requested allocation must be > 0");

    Advice advice;
    advice.requested = requested;
    advice.predicted = predict_interval(model, features, policy.alpha);

    const double padded = advice.predicted.hi * (1.0 + policy.headroom);
    const double rounded = std::ceil(padded / policy.granularity) * policy.granularity;
    advice.recommended = std::min(requested, rounded);
    advice.risk_flag = advice.predicted.point > requested * (1.0 + policy.risk_tolerance);

    if (advice.risk_flag) {
        advice.rationale = "risk: predicted demand " + format_double(advice.predicted.point) +
                           " exceeds request " + format_double(requested) +
                           " beyond tolerance " + format_double(policy.risk_tolerance);
    } else if (rounded < requested) {
        advice.rationale = "interval upper bound " + format_double(advice.predicted.hi) +
                           " plus headroom rounds to " + format_double(advice.recommended) +
                           ", below the request";
    } else {
        advice.rationale = "capped at request: padded upper bound " + format_double(rounded) +
                           " is not below the request";
    }
    return advice;
}

CostEstimate estimate_savings(double cluster_units, double reduction_fraction) {
    if (cluster_units < 0.0) throw DataError("cluster_units must be >= 0");
    if (reduction_fraction < 0.0 || reduction_fraction > 1.0)
        throw DataError("reduction_fraction must be in [0, 1]");
    CostEstimate est;
    est.cluster_units = cluster_units;
    est.reduction_fraction = reduction_fraction;
    est.saved_units = cluster_units * reduction_fraction;
    return est;
}

BatchAdvice batch_advise(const RandomForestModel& model, const FeatureMatrix& m,
                         const std::vector<double>& requested, const AdvicePolicy& policy) {
    if (m.rows == 0) throw DataError("cannot advise on an empty matrix");
    if (requested.size() != m.rows)
        throw DataError("requested vector length does not match matrix rows");
    if (m.column_names != model.feature_names)
        throw SchemaError("matrix schema does not match model schema");

    BatchAdvice batch;
    batch.items.reserve(m.rows);
    std::vector<double> features(m.cols());
    for (std::size_t r = 0; r < m.rows; ++r) {
        features.assign(m.row(r), m.row(r) + m.cols());
        try {
            batch.items.push_back(advise(model, features, requested[r], policy));
        } catch (const DataError& e) {
            throw DataError("row " + std::to_string(r) + ": " + e.what());
        }
        batch.summary.total_requested += requested[r];
        batch.summary.total_recommended += batch.items.back().recommended;
        batch.summary.risk_count += batch.items.back().risk_flag ? 1 : 0;
    }
    batch.summary.reduction_fraction =
        1.0 - batch.summary.total_recommended / batch.summary.total_requested;
    return batch;
}

} // namespace traceforest
