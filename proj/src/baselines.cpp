#include "traceforest/baselines.hpp"

#include <cmath>

#include "traceforest/errors.hpp"
#include "traceforest/rng.hpp"
#include "traceforest/stats.hpp"

namespace traceforest {

namespace {

constexpr double kRidgeLambda = 1e-8;

// Solves G w = b for symmetric positive definite G (Cholesky). G is the
// damped normal matrix, so positive definiteness holds by construction.
std::vector<double> solve_spd(std::vector<std::vector<double>> g, std::vector<double> b) {
    const std::size_t n = b.size();
    std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = g[i][j];
            for (std::size_t k = 0; k < j; ++k) sum -= l[i][k] * l[j][k];
            if (i == j) {
                if (sum <= 0.0) throw DataError("normal equations are not positive definite");
                l[i][j] = std::sqrt(sum);
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    // forward then back substitution
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = b[i];
        for (std::size_t k = 0; k < i; ++k) sum -= l[i][k] * z[k];
        z[i] = sum / l[i][i];
    }
    std::vector<double> w(n);
    for (std::size_t ii = n; ii > 0; --ii) {
        const std::size_t i = ii - 1;
        double sum = z[i];
        for (std::size_t k = i + 1; k < n; ++k) sum -= l[k][i] * w[k];
        w[i] = sum / l[i][i];
    }
    return w;
}

} // namespace

LinearModel fit_linear(const std::vector<std::vector<double>>& columns,
                       const std::vector<double>& y,
                       const std::vector<std::string>& feature_names) {
    if (y.empty()) throw DataError("cannot fit a linear model on zero rows");
    for (const auto& col : columns)
        if (col.size() != y.size())
            throw DataError("feature column length does not match target length");

    const std::size_t p = columns.size();
    const std::size_t n = y.size();
    const std::size_t d = p + 1; // trailing intercept column of ones

    auto value_at = [&](std::size_t r, std::size_t c) {
        return c < p ? columns[c][r] : 1.0;
    };

    std::vector<std::vector<double>> g(d, std::vector<double>(d, 0.0));
    std::vector<double> b(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            double sum = 0.0;
            for (std::size_t r = 0; r < n; ++r) sum += value_at(r, i) * value_at(r, j);
            g[i][j] = sum;
            g[j][i] = sum;
        }
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) sum += value_at(r, i) * y[r];
        b[i] = sum;
        g[i][i] += kRidgeLambda;
    }

    const std::vector<double> w = solve_spd(std::move(g), std::move(b));
    LinearModel model;
    model.coefficients.assign(w.begin(), w.end() - 1);
    model.intercept = w.back();
    model.feature_names = feature_names;
    model.schema_fp = schema_fingerprint(feature_names);
    return model;
}

LinearModel fit_linear(const FeatureMatrix& m) {
    return fit_linear(m.to_columns(), m.target, m.column_names);
}

double predict_linear(const LinearModel& model, const std::vector<double>& x) {
    if (x.size() != model.coefficients.size())
        throw SchemaError("linear model expects " + std::to_string(model.coefficients.size()) +
                          " features, got " + std::to_string(x.size()));
    double out = model.intercept;
    for (std::size_t c = 0; c < x.size(); ++c) out += model.coefficients[c] * x[c];
    return out;
}

std::vector<double> predict_matrix(const LinearModel& model, const FeatureMatrix& m) {
    if (m.column_names != model.feature_names)
        throw SchemaError("matrix schema does not match linear model schema");
    std::vector<double> out;
    out.reserve(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double v = model.intercept;
        const double* row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) v += model.coefficients[c] * row[c];
        out.push_back(v);
    }
    return out;
}

void GBTConfig::validate() const {
    if (learning_rate <= 0.0 || learning_rate > 1.0)
        throw DataError("learning_rate must be in (0, 1]");
}

GBTModel fit_gbt(const std::vector<std::vector<double>>& columns, const std::vector<double>& y,
                 const std::vector<std::string>& feature_names, const GBTConfig& config) {
    config.validate();
    if (y.empty()) throw DataError("cannot fit a boosted model on zero rows");

    GBTModel model;
    model.config = config;
    model.learning_rate = config.learning_rate;
    model.initial = mean_of(y);
    model.feature_names = feature_names;
    model.schema_fp = schema_fingerprint(feature_names);

    ForestConfig tree_config;
    tree_config.n_estimators = 1;
    tree_config.max_depth = config.max_depth;
    tree_config.min_samples_split = 2;
    tree_config.min_samples_leaf = 1;
    tree_config.max_features = MaxFeatures::all();

    const std::size_t n = y.size();
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - model.initial;

    model.trees.reserve(config.n_rounds);
    std::vector<double> row(columns.size());
    for (std::size_t round = 0; round < config.n_rounds; ++round) {
        Tree tree = fit_tree(columns, residual, tree_config, Rng(0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < columns.size(); ++c) row[c] = columns[c][i];
            residual[i] -= config.learning_rate * tree.predict_row(row.data());
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

GBTModel fit_gbt(const FeatureMatrix& m, const GBTConfig& config) {
    return fit_gbt(m.to_columns(), m.target, m.column_names, config);
}

double predict_gbt(const GBTModel& model, const std::vector<double>& x) {
    if (x.size() != model.feature_names.size())
        throw SchemaError("boosted model expects " + std::to_string(model.feature_names.size()) +
                          " features, got " + std::to_string(x.size()));
    double out = model.initial;
    for (const auto& tree : model.trees) out += model.learning_rate * tree.predict_row(x.data());
    return out;
}

std::vector<double> predict_matrix(const GBTModel& model, const FeatureMatrix& m) {
    if (m.column_names != model.feature_names)
        throw SchemaError("matrix schema does not match boosted model schema");
    std::vector<double> out;
    out.reserve(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double v = model.initial;
        for (const auto& tree : model.trees) v += model.learning_rate * tree.predict_row(m.row(r));
        out.push_back(v);
    }
    return out;
}

} // namespace traceforest
