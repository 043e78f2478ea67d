#pragma once

#include <string>
#include <variant>

#include "traceforest/baselines.hpp"
#include "traceforest/forest.hpp"

namespace traceforest {

// Versioned model container shared by every model kind. Floats are written
// in full precision, so a saved model predicts bit-identically after
// reload. Loading rejects unknown versions and fingerprints that do not
// match the stored feature names.
void save_model(const RandomForestModel& model, const std::string& path);
void save_model(const LinearModel& model, const std::string& path);
void save_model(const GBTModel& model, const std::string& path);

using AnyModel = std::variant<RandomForestModel, LinearModel, GBTModel>;

AnyModel load_model(const std::string& path);
RandomForestModel load_forest_model(const std::string& path);

std::string model_kind_name(const AnyModel& model);
const std::vector<std::string>& model_feature_names(const AnyModel& model);
std::vector<double> predict_matrix(const AnyModel& model, const FeatureMatrix& m);

} // namespace traceforest
