#include "traceforest/forest.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "traceforest/errors.hpp"
#include "traceforest/stats.hpp"
#include "traceforest/strings.hpp"

namespace traceforest {

std::size_t MaxFeatures::resolve(std::size_t n_features) const {
    if (n_features == 0) return 0;
    switch (kind) {
    case Kind::All: return n_features;
    case Kind::Fraction: {
        auto k = static_cast<std::size_t>(
            std::llround(value * static_cast<double>(n_features)));
        return std::clamp<std::size_t>(k, 1, n_features);
    }
    case Kind::Count:
        return std::clamp<std::size_t>(static_cast<std::size_t>(value), 1, n_features);
    }
    return n_features;
}

std::string MaxFeatures::to_text() const {
    switch (kind) {
    case Kind::All: return "all";
    case Kind::Fraction: return "fraction:" + format_double(value);
    case Kind::Count: return "count:" + std::to_string(static_cast<std::size_t>(value));
    }
    return "all";
}

MaxFeatures MaxFeatures::from_text(const std::string& text) {
    if (text == "all") return MaxFeatures::all();
    if (text.rfind("fraction:", 0) == 0) {
        auto f = parse_double(text.substr(9));
        if (!f) throw DataError("bad max_features fraction '" + text + "'");
        return MaxFeatures::fraction(*f);
    }
    if (text.rfind("count:", 0) == 0) {
        auto k = parse_double(text.substr(6));
        if (!k || *k < 1) throw DataError("bad max_features count '" + text + "'");
        return MaxFeatures::count(static_cast<std::size_t>(*k));
    }
    throw DataError("bad max_features '" + text + "' (expected all, fraction:F or count:K)");
}

void ForestConfig::validate() const {
    if (n_estimators < 1) throw DataError("n_estimators must be >= 1");
    if (min_samples_split < 2) throw DataError("min_samples_split must be >= 2");
    if (min_samples_leaf < 1) throw DataError("min_samples_leaf must be >= 1");
    if (bootstrap_size <= 0.0 || bootstrap_size > 1.0)
        throw DataError("bootstrap_size must be in (0, 1]");
    if (max_features.kind == MaxFeatures::Kind::Fraction &&
        (max_features.value <= 0.0 || max_features.value > 1.0))
        throw DataError("max_features fraction must be in (0, 1]");
    if (max_features.kind == MaxFeatures::Kind::Count && max_features.value < 1)
        throw DataError("max_features count must be >= 1");
}

std::string ForestConfig::describe() const {
    std::string depth = max_depth ? std::to_string(*max_depth) : "none";
    return "n_estimators=" + std::to_string(n_estimators) + " max_depth=" + depth +
           " min_samples_split=" + std::to_string(min_samples_split) +
           " min_samples_leaf=" + std::to_string(min_samples_leaf) +
           " max_features=" + max_features.to_text() +
           " bootstrap_size=" + format_double(bootstrap_size) +
           " seed=" + std::to_string(seed);
}

double Tree::predict_row(const double* x) const {
    std::size_t at = 0;
    while (true) {
        const TreeNode& node = nodes[at];
        if (node.feature_index < 0) return node.value;
        at = static_cast<std::size_t>(
            x[node.feature_index] <= node.threshold ? node.left : node.right);
    }
}

namespace {

struct ScanEntry {
    double val;
    double y;
};

struct ScanBest {
    bool found = false;
    double score = 0.0; // yl^2/nl + yr^2/nr; larger means lower child SSE
    double threshold = 0.0;
};

// Walks one feature's value-sorted entries accumulating the prefix target
// sum; every boundary between distinct consecutive values is a candidate
// threshold. Minimizing total child SSE is equivalent to maximizing
// yl^2/nl + yr^2/nr, which spares a second accumulator in the hot loop;
// the 1/n factors come from a shared reciprocal table. Ties keep the first
// (lowest) threshold.
ScanBest scan_entries(const ScanEntry* entries, std::size_t n, std::size_t min_leaf,
                      double sum_y, const double* inv) {
    ScanBest best;
    if (n < 2 || n < 2 * min_leaf) return best;
    double yl = 0.0;
    std::size_t i = 0;
    for (; i + 1 < min_leaf; ++i) yl += entries[i].y; // too few on the left yet
    for (; i + min_leaf < n; ++i) {
        yl += entries[i].y;
        const double v = entries[i].val;
        const double v_next = entries[i + 1].val;
        if (!(v < v_next)) continue;
        const double yr = sum_y - yl;
        const double score = yl * yl * inv[i + 1] + yr * yr * inv[n - i - 1];
        if (!best.found || score > best.score) {
            double threshold = v + (v_next - v) / 2.0;
            if (!(threshold < v_next)) threshold = v; // keep the left group on the left
            best = {true, score, threshold};
        }
    }
    return best;
}

std::vector<double> reciprocal_table(std::size_t n) {
    std::vector<double> inv(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) inv[i] = 1.0 / static_cast<double>(i);
    return inv;
}

// Value-sorted full-data views, shared read-only by every tree of a forest.
struct PresortedEntry {
    double val;
    double y;
    std::uint32_t id;
};
using Presorted = std::vector<std::vector<PresortedEntry>>;

Presorted presort(const std::vector<std::vector<double>>& columns,
                  const std::vector<double>& y) {
    Presorted sorted(columns.size());
    for (std::size_t f = 0; f < columns.size(); ++f) {
        auto& slice = sorted[f];
        slice.resize(y.size());
        for (std::size_t r = 0; r < y.size(); ++r)
            slice[r] = {columns[f][r], y[r], static_cast<std::uint32_t>(r)};
        std::stable_sort(
            slice.begin(), slice.end(),
            [](const PresortedEntry& a, const PresortedEntry& b) { return a.val < b.val; });
    }
    return sorted;
}

// Grows one tree over a bootstrap bag. Per-feature value-sorted slices are
// materialized from the shared presorted views in one linear pass, then kept
// aligned across recursion by stable partitions. Partitions ping-pong
// between two buffers keyed by recursion parity, so nothing is copied back.
// A separate draw-order copy drives every target-sum so numbers do not
// depend on feature order.
class TreeBuilder {
    using Entry = ScanEntry;
    struct BagEntry {
        double y;
        std::uint32_t id;
    };

public:
    TreeBuilder(const Presorted& presorted, const std::vector<double>& y,
                const ForestConfig& config)
        : presorted_(presorted), y_(y), config_(config), p_(presorted.size()) {}

    // Reusable across trees; the rng stream is per tree.
    Tree build(const std::vector<std::uint32_t>& bag, Rng rng) {
        rng_ = rng;
        const std::size_t m = bag.size();
        for (int side = 0; side < 2; ++side) {
            bag_[side].resize(m);
            vy_[side].resize(p_);
            ids_[side].resize(p_);
            for (auto& slice : vy_[side]) slice.resize(m);
            for (auto& slice : ids_[side]) slice.resize(m);
        }
        for (std::size_t i = 0; i < m; ++i) bag_[0][i] = {y_[bag[i]], bag[i]};

        counts_.assign(y_.size(), 0);
        for (std::uint32_t id : bag) ++counts_[id];
        for (std::size_t f = 0; f < p_; ++f) {
            Entry* vy_out = vy_[0][f].data();
            std::uint32_t* id_out = ids_[0][f].data();
            for (const PresortedEntry& entry : presorted_[f]) {
                for (std::uint32_t c = 0; c < counts_[entry.id]; ++c) {
                    *vy_out++ = {entry.val, entry.y};
                    *id_out++ = entry.id;
                }
            }
        }

        goes_left_.assign(y_.size(), 0);
        if (inv_.size() < m + 1) inv_ = reciprocal_table(m);
        nodes_.clear();
        grow(0, m, 0, 0);
        Tree tree;
        tree.nodes = std::move(nodes_);
        return tree;
    }

private:
    std::int32_t grow(std::size_t lo, std::size_t hi, std::size_t depth, int side) {
        const std::size_t n = hi - lo;
        const BagEntry* bag_span = bag_[side].data() + lo;

        double sum_y = 0.0;
        bool pure = true;
        const double first = bag_span[0].y;
        for (std::size_t i = 0; i < n; ++i) {
            sum_y += bag_span[i].y;
            pure = pure && bag_span[i].y == first;
        }
        const double mean = sum_y / static_cast<double>(n);

        const bool depth_capped = config_.max_depth && depth >= *config_.max_depth;
        if (depth_capped || pure || n < config_.min_samples_split ||
            n < 2 * config_.min_samples_leaf)
            return make_leaf(mean, n);

        const double parent_score = sum_y * sum_y * inv_[n];

        pick_candidates();
        bool found = false;
        std::size_t best_feature = 0;
        ScanBest best;
        for (std::size_t f : cand_) {
            ScanBest scan = scan_entries(vy_[side][f].data() + lo, n,
                                         config_.min_samples_leaf, sum_y, inv_.data());
            if (scan.found && (!found || scan.score > best.score)) {
                found = true;
                best = scan;
                best_feature = f;
            }
        }
        if (!found || !(best.score > parent_score)) return make_leaf(mean, n);

        // Route rows off the split feature's own slice, then stable-partition
        // every slice into the other buffer; the children read from there.
        const Entry* split_vals = vy_[side][best_feature].data() + lo;
        const std::uint32_t* split_ids = ids_[side][best_feature].data() + lo;
        std::size_t n_left = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool left = split_vals[i].val <= best.threshold;
            goes_left_[split_ids[i]] = left;
            n_left += left;
        }
        const int other = side ^ 1;
        for (std::size_t f = 0; f < p_; ++f) {
            const Entry* vy_src = vy_[side][f].data() + lo;
            const std::uint32_t* id_src = ids_[side][f].data() + lo;
            Entry* vy_dst = vy_[other][f].data() + lo;
            std::uint32_t* id_dst = ids_[other][f].data() + lo;
            std::size_t wl = 0, wr = n_left;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t at = goes_left_[id_src[i]] ? wl++ : wr++;
                vy_dst[at] = vy_src[i];
                id_dst[at] = id_src[i];
            }
        }
        {
            const BagEntry* src = bag_[side].data() + lo;
            BagEntry* dst = bag_[other].data() + lo;
            std::size_t wl = 0, wr = n_left;
            for (std::size_t i = 0; i < n; ++i)
                dst[goes_left_[src[i].id] ? wl++ : wr++] = src[i];
        }

        const auto node_id = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        nodes_[static_cast<std::size_t>(node_id)].n_samples = static_cast<std::uint32_t>(n);
        const std::int32_t left_id = grow(lo, lo + n_left, depth + 1, other);
        const std::int32_t right_id = grow(lo + n_left, hi, depth + 1, other);

        TreeNode& node = nodes_[static_cast<std::size_t>(node_id)];
        node.feature_index = static_cast<std::int32_t>(best_feature);
        node.threshold = best.threshold;
        node.left = left_id;
        node.right = right_id;
        node.sse_reduction = best.score - parent_score;
        return node_id;
    }

    std::int32_t make_leaf(double mean, std::size_t n) {
        TreeNode leaf;
        leaf.value = mean;
        leaf.n_samples = static_cast<std::uint32_t>(n);
        nodes_.push_back(leaf);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    void pick_candidates() {
        const std::size_t k = config_.max_features.resolve(p_);
        if (k >= p_) {
            if (cand_.size() != p_) {
                cand_.resize(p_);
                for (std::size_t f = 0; f < p_; ++f) cand_[f] = f;
            }
            return;
        }
        pool_.resize(p_);
        for (std::size_t f = 0; f < p_; ++f) pool_[f] = f;
        for (std::size_t i = 0; i < k; ++i)
            std::swap(pool_[i], pool_[i + rng_.next_below(p_ - i)]);
        cand_.assign(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(cand_.begin(), cand_.end());
    }

    const Presorted& presorted_;
    const std::vector<double>& y_;
    const ForestConfig& config_;
    Rng rng_{0};
    std::size_t p_;
    std::vector<std::vector<Entry>> vy_[2];
    std::vector<std::vector<std::uint32_t>> ids_[2];
    std::vector<BagEntry> bag_[2];
    std::vector<std::uint32_t> counts_;
    std::vector<double> inv_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<TreeNode> nodes_;
    std::vector<std::size_t> cand_;
    std::vector<std::size_t> pool_;
};

void check_training_input(const std::vector<std::vector<double>>& columns,
                          const std::vector<double>& y) {
    if (columns.empty()) throw DataError("training data has no feature columns");
    if (y.empty()) throw DataError("training data has no rows");
    for (const auto& col : columns)
        if (col.size() != y.size())
            throw DataError("feature column length does not match target length");
}

std::vector<std::uint32_t> identity_bag(std::size_t n) {
    std::vector<std::uint32_t> bag(n);
    for (std::size_t i = 0; i < n; ++i) bag[i] = static_cast<std::uint32_t>(i);
    return bag;
}

} // namespace

std::optional<SplitChoice> best_split(const std::vector<std::vector<double>>& columns,
                                      const std::vector<double>& targets,
                                      const std::vector<std::size_t>& candidate_features,
                                      std::size_t min_samples_leaf) {
    check_training_input(columns, targets);
    std::vector<std::size_t> cand = candidate_features;
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (std::size_t f : cand)
        if (f >= columns.size()) throw DataError("candidate feature index out of range");

    const std::size_t n = targets.size();
    bool pure = true;
    double sum_y = 0.0;
    for (double t : targets) {
        sum_y += t;
        pure = pure && t == targets.front();
    }
    if (pure) return std::nullopt;
    const std::vector<double> inv = reciprocal_table(n);
    const double parent_score = sum_y * sum_y * inv[n];

    std::vector<ScanEntry> entries(n);
    bool found = false;
    std::size_t best_feature = 0;
    ScanBest best;
    for (std::size_t f : cand) {
        const auto& col = columns[f];
        for (std::size_t i = 0; i < n; ++i) entries[i] = {col[i], targets[i]};
        std::stable_sort(entries.begin(), entries.end(),
                         [](const ScanEntry& a, const ScanEntry& b) { return a.val < b.val; });
        ScanBest scan = scan_entries(entries.data(), n, min_samples_leaf, sum_y, inv.data());
        if (scan.found && (!found || scan.score > best.score)) {
            found = true;
            best = scan;
            best_feature = f;
        }
    }
    if (!found || !(best.score > parent_score)) return std::nullopt;
    return SplitChoice{best_feature, best.threshold, best.score - parent_score};
}

Tree fit_tree(const std::vector<std::vector<double>>& columns, const std::vector<double>& y,
              const ForestConfig& config, Rng rng) {
    check_training_input(columns, y);
    config.validate();
    const Presorted presorted = presort(columns, y);
    TreeBuilder builder(presorted, y, config);
    return builder.build(identity_bag(y.size()), rng);
}

RandomForestModel fit_forest(const std::vector<std::vector<double>>& columns,
                             const std::vector<double>& y,
                             const std::vector<std::string>& feature_names,
                             const ForestConfig& config, std::size_t n_threads) {
    check_training_input(columns, y);
    config.validate();
    if (feature_names.size() != columns.size())
        throw DataError("feature name count does not match column count");

    const std::size_t n = y.size();
    const auto bag_size = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.bootstrap_size * static_cast<double>(n))));

    RandomForestModel model;
    model.config = config;
    model.feature_names = feature_names;
    model.schema_fp = schema_fingerprint(feature_names);
    model.trees.resize(config.n_estimators);

    const Presorted presorted = presort(columns, y);
    const Rng base(config.seed);
    auto fit_one = [&](TreeBuilder& builder, std::vector<std::uint32_t>& bag, std::size_t t) {
        Rng rng = base.derive(t);
        bag.resize(bag_size);
        for (auto& row : bag) row = static_cast<std::uint32_t>(rng.next_below(n));
        model.trees[t] = builder.build(bag, rng);
    };

    const std::size_t workers = std::min<std::size_t>(
        std::max<std::size_t>(1, n_threads), config.n_estimators);
    if (workers <= 1) {
        TreeBuilder builder(presorted, y, config);
        std::vector<std::uint32_t> bag;
        for (std::size_t t = 0; t < config.n_estimators; ++t) fit_one(builder, bag, t);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                TreeBuilder builder(presorted, y, config);
                std::vector<std::uint32_t> bag;
                for (std::size_t t = w; t < config.n_estimators; t += workers)
                    fit_one(builder, bag, t);
            });
        }
        for (auto& th : pool) th.join();
    }

    model.importances = feature_importances(model);
    return model;
}

RandomForestModel fit_forest(const FeatureMatrix& m, const ForestConfig& config,
                             std::size_t n_threads) {
    return fit_forest(m.to_columns(), m.target, m.column_names, config, n_threads);
}

namespace {

void check_probe(const RandomForestModel& model, const std::vector<double>& x) {
    if (x.size() != model.n_features())
        throw SchemaError("model expects " + std::to_string(model.n_features()) +
                          " features (schema " + to_hex16(model.schema_fp) + "), got " +
                          std::to_string(x.size()));
}

} // namespace

double predict_point(const RandomForestModel& model, const std::vector<double>& x) {
    check_probe(model, x);
    double sum = 0.0;
    for (const auto& tree : model.trees) sum += tree.predict_row(x.data());
    return sum / static_cast<double>(model.trees.size());
}

IntervalPrediction predict_interval(const RandomForestModel& model, const std::vector<double>& x,
                                    double alpha) {
    if (alpha <= 0.0 || alpha >= 1.0) throw DataError("alpha must be in (0, 1)");
    check_probe(model, x);

    std::vector<double> preds;
    preds.reserve(model.trees.size());
    for (const auto& tree : model.trees) preds.push_back(tree.predict_row(x.data()));

    IntervalPrediction out;
    out.point = mean_of(preds);

    std::vector<double> sorted = preds;
    std::sort(sorted.begin(), sorted.end());
    out.lo = std::min(quantile_sorted(sorted, alpha / 2.0), out.point);
    out.hi = std::max(quantile_sorted(sorted, 1.0 - alpha / 2.0), out.point);

    const double spread = sample_std(preds);
    out.confidence = 1.0 - std::min(1.0, spread / (std::fabs(out.point) + 1e-9));
    return out;
}

std::vector<double> predict_matrix(const RandomForestModel& model, const FeatureMatrix& m) {
    if (m.column_names != model.feature_names)
        throw SchemaError("matrix schema " + to_hex16(schema_fingerprint(m.column_names)) +
                          " does not match model schema " + to_hex16(model.schema_fp));
    // Tree-major so each tree's nodes stay cache-resident; per-row sums still
    // accumulate in tree order, identical to predicting row by row.
    std::vector<double> out(m.rows, 0.0);
    for (const auto& tree : model.trees)
        for (std::size_t r = 0; r < m.rows; ++r) out[r] += tree.predict_row(m.row(r));
    for (double& v : out) v /= static_cast<double>(model.trees.size());
    return out;
}

std::vector<double> feature_importances(const RandomForestModel& model) {
    std::vector<double> acc(model.n_features(), 0.0);
    for (const auto& tree : model.trees)
        for (const auto& node : tree.nodes)
            if (node.feature_index >= 0)
                acc[static_cast<std::size_t>(node.feature_index)] += node.sse_reduction;
    if (model.trees.empty()) return acc;
    for (double& v : acc) v /= static_cast<double>(model.trees.size());
    double total = 0.0;
    for (double v : acc) total += v;
    if (total > 0.0)
        for (double& v : acc) v /= total;
    return acc;
}

std::vector<std::size_t> select_top_k(const std::vector<double>& importances, std::size_t k) {
    std::vector<std::size_t> idx(importances.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return importances[a] > importances[b];
    });
    if (k < idx.size()) idx.resize(k);
    return idx;
}

} // namespace traceforest
