// Brute-force reference implementations used only by tests. They stay
// deliberately naive and independent of the library's computation paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "traceforest/forest.hpp"

namespace oracle {

inline double quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    if (values.empty()) return 0.0;
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lower = static_cast<std::size_t>(std::floor(pos));
    const auto upper = static_cast<std::size_t>(std::ceil(pos));
    const double w = pos - static_cast<double>(lower);
    return values[lower] * (1.0 - w) + values[upper] * w;
}

inline double mae(const std::vector<double>& a, const std::vector<double>& p) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - p[i]);
    return total / static_cast<double>(a.size());
}

inline double rmse(const std::vector<double>& a, const std::vector<double>& p) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - p[i]) * (a[i] - p[i]);
    return std::sqrt(total / static_cast<double>(a.size()));
}

inline double r2(const std::vector<double>& a, const std::vector<double>& p) {
    double mean = 0.0;
    for (double v : a) mean += v;
    mean /= static_cast<double>(a.size());
    double res = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        res += (a[i] - p[i]) * (a[i] - p[i]);
        tot += (a[i] - mean) * (a[i] - mean);
    }
    if (tot == 0.0) return res == 0.0 ? 1.0 : 0.0;
    return 1.0 - res / tot;
}

// ---------------------------------------------------------------------------
// exhaustive greedy tree search
// ---------------------------------------------------------------------------

struct TreeNode {
    bool leaf = true;
    double value = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left, right;
};

inline double subset_mean(const std::vector<double>& y, const std::vector<std::size_t>& rows) {
    double sum = 0.0;
    for (std::size_t r : rows) sum += y[r];
    return sum / static_cast<double>(rows.size());
}

inline double subset_sse(const std::vector<double>& y, const std::vector<std::size_t>& rows) {
    const double mean = subset_mean(y, rows);
    double sse = 0.0;
    for (std::size_t r : rows) sse += (y[r] - mean) * (y[r] - mean);
    return sse;
}

// Greedy CART by explicit enumeration: every feature, every midpoint between
// distinct sorted values, children evaluated from scratch.
inline std::unique_ptr<TreeNode> grow_exhaustive(const std::vector<std::vector<double>>& columns,
                                                 const std::vector<double>& y,
                                                 const std::vector<std::size_t>& rows,
                                                 std::size_t depth,
                                                 const traceforest::ForestConfig& config) {
    auto node = std::make_unique<TreeNode>();
    node->value = subset_mean(y, rows);

    bool pure = true;
    for (std::size_t r : rows) pure = pure && y[r] == y[rows.front()];
    const bool depth_capped = config.max_depth && depth >= *config.max_depth;
    if (depth_capped || pure || rows.size() < config.min_samples_split) return node;

    const double parent_sse = subset_sse(y, rows);
    bool found = false;
    double best_sse = 0.0;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    std::vector<std::size_t> best_left, best_right;

    for (std::size_t f = 0; f < columns.size(); ++f) {
        std::vector<double> distinct;
        for (std::size_t r : rows) distinct.push_back(columns[f][r]);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
            double threshold = distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0;
            if (!(threshold < distinct[i + 1])) threshold = distinct[i];
            std::vector<std::size_t> left, right;
            for (std::size_t r : rows)
                (columns[f][r] <= threshold ? left : right).push_back(r);
            if (left.size() < config.min_samples_leaf || right.size() < config.min_samples_leaf)
                continue;
            const double sse = subset_sse(y, left) + subset_sse(y, right);
            if (!found || sse < best_sse) {
                found = true;
                best_sse = sse;
                best_feature = f;
                best_threshold = threshold;
                best_left = std::move(left);
                best_right = std::move(right);
            }
        }
    }
    if (!found || !(best_sse < parent_sse)) return node;

    node->leaf = false;
    node->feature = best_feature;
    node->threshold = best_threshold;
    node->left = grow_exhaustive(columns, y, best_left, depth + 1, config);
    node->right = grow_exhaustive(columns, y, best_right, depth + 1, config);
    return node;
}

inline double predict(const TreeNode& node, const std::vector<double>& x) {
    if (node.leaf) return node.value;
    return x[node.feature] <= node.threshold ? predict(*node.left, x) : predict(*node.right, x);
}

// Total training SSE of a fitted oracle tree / library tree, both evaluated
// the same way so any structural difference shows up bit-for-bit.
inline double training_sse(const TreeNode& root, const std::vector<std::vector<double>>& columns,
                           const std::vector<double>& y) {
    double sse = 0.0;
    std::vector<double> x(columns.size());
    for (std::size_t r = 0; r < y.size(); ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) x[c] = columns[c][r];
        const double d = predict(root, x) - y[r];
        sse += d * d;
    }
    return sse;
}

inline double training_sse(const traceforest::Tree& tree,
                           const std::vector<std::vector<double>>& columns,
                           const std::vector<double>& y) {
    double sse = 0.0;
    std::vector<double> x(columns.size());
    for (std::size_t r = 0; r < y.size(); ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) x[c] = columns[c][r];
        const double d = tree.predict_row(x.data()) - y[r];
        sse += d * d;
    }
    return sse;
}

} // namespace oracle
