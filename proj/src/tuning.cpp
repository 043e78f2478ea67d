#include "traceforest/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <ostream>
#include <thread>

#include "traceforest/errors.hpp"
#include "traceforest/evaluation.hpp"
#include "traceforest/rng.hpp"
#include "traceforest/strings.hpp"

namespace traceforest {

std::size_t ParamGrid::size() const {
    return n_estimators.size() * max_depth.size() * min_samples_split.size() *
           min_samples_leaf.size();
}

void ParamGrid::validate() const {
    if (n_estimators.empty() || max_depth.empty() || min_samples_split.empty() ||
        min_samples_leaf.empty())
        throw DataError("parameter grid has an empty axis");
}

std::vector<ForestConfig> sample_params(const ParamGrid& grid, std::size_t n_samples,
                                        std::uint64_t seed) {
    grid.validate();
    if (n_samples < 1) throw DataError("n_samples must be >= 1");

    const std::size_t total = grid.size();
    std::vector<std::size_t> order(total);
    for (std::size_t i = 0; i < total; ++i) order[i] = i;

    const std::size_t take = std::min(n_samples, total);
    Rng rng(seed);
    for (std::size_t i = 0; i < take; ++i)
        std::swap(order[i], order[i + rng.next_below(total - i)]);

    std::vector<ForestConfig> configs;
    configs.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t index = order[i];
        ForestConfig config;
        config.min_samples_leaf = grid.min_samples_leaf[index % grid.min_samples_leaf.size()];
        index /= grid.min_samples_leaf.size();
        config.min_samples_split =
            grid.min_samples_split[index % grid.min_samples_split.size()];
        index /= grid.min_samples_split.size();
        config.max_depth = grid.max_depth[index % grid.max_depth.size()];
        index /= grid.max_depth.size();
        config.n_estimators = grid.n_estimators[index];
        configs.push_back(config);
    }
    return configs;
}

SearchResult randomized_search(const FeatureMatrix& m, const ParamGrid& grid,
                               std::size_t n_samples, std::size_t k, std::uint64_t seed,
                               std::size_t n_threads) {
    SearchResult result;
    result.folds = kfold_indices(m.rows, k, seed);

    // Pre-slice the fold matrices once; they are shared by all trials.
    std::vector<FeatureMatrix> train_parts(k), held_parts(k);
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train_rows;
        for (std::size_t g = 0; g < k; ++g) {
            if (g == f) continue;
            train_rows.insert(train_rows.end(), result.folds.folds[g].begin(),
                              result.folds.folds[g].end());
        }
        std::sort(train_rows.begin(), train_rows.end());
        train_parts[f] = take_rows(m, train_rows);
        held_parts[f] = take_rows(m, result.folds.folds[f]);
    }

    const std::uint64_t forest_seed = derive_seed(seed, "forest");
    std::vector<ForestConfig> configs = sample_params(grid, n_samples, seed);
    for (auto& config : configs) config.seed = forest_seed;

    // Every (trial, fold) fit is independent; scores land in slots keyed by
    // index, so the schedule cannot change the result. Heavy trials are
    // dispatched first to keep the workers balanced near the end.
    const std::size_t n_tasks = configs.size() * k;
    std::vector<double> scores(n_tasks, 0.0);
    std::vector<std::string> failures(n_tasks);
    std::vector<std::size_t> order(n_tasks);
    for (std::size_t i = 0; i < n_tasks; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return configs[a / k].n_estimators > configs[b / k].n_estimators;
    });

    std::atomic<std::size_t> cursor{0};
    auto run_task = [&](std::size_t task) {
        const std::size_t trial = task / k;
        const std::size_t fold = task % k;
        try {
            const RandomForestModel model = fit_forest(train_parts[fold], configs[trial], 1);
            scores[task] = r2(held_parts[fold].target, predict_matrix(model, held_parts[fold]));
        } catch (const DataError& e) {
            failures[task] = e.what();
        }
    };

    const std::size_t workers = std::min(std::max<std::size_t>(1, n_threads), n_tasks);
    if (workers <= 1) {
        for (std::size_t task = 0; task < n_tasks; ++task) run_task(task);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t at = cursor.fetch_add(1); at < n_tasks;
                     at = cursor.fetch_add(1))
                    run_task(order[at]);
            });
        }
        for (auto& th : pool) th.join();
    }
    for (std::size_t task = 0; task < n_tasks; ++task) {
        if (!failures[task].empty())
            throw DataError("trial " + std::to_string(task / k) + " (" +
                            configs[task / k].describe() + ") failed: " + failures[task]);
    }

    for (std::size_t i = 0; i < configs.size(); ++i) {
        Trial trial;
        trial.config = configs[i];
        trial.fold_r2.assign(scores.begin() + static_cast<std::ptrdiff_t>(i * k),
                             scores.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
        double sum = 0.0;
        for (double score : trial.fold_r2) sum += score;
        trial.mean_r2 = sum / static_cast<double>(k);
        result.trials.push_back(std::move(trial));
    }

    result.best_index = 0;
    for (std::size_t i = 1; i < result.trials.size(); ++i)
        if (result.trials[i].mean_r2 > result.trials[result.best_index].mean_r2)
            result.best_index = i;
    result.best = result.trials[result.best_index].config;
    return result;
}

void write_search_report(const SearchResult& result, std::ostream& out) {
    const std::size_t k = result.folds.k;
    out << "trial,n_estimators,max_depth,min_samples_split,min_samples_leaf";
    for (std::size_t f = 0; f < k; ++f) out << ",fold" << (f + 1) << "_r2";
    out << ",mean_r2,best\n";
    for (std::size_t i = 0; i < result.trials.size(); ++i) {
        const Trial& t = result.trials[i];
        out << i << ',' << t.config.n_estimators << ','
            << (t.config.max_depth ? std::to_string(*t.config.max_depth) : "none") << ','
            << t.config.min_samples_split << ',' << t.config.min_samples_leaf;
        for (double score : t.fold_r2) out << ',' << format_double(score);
        out << ',' << format_double(t.mean_r2) << ',' << (i == result.best_index ? 1 : 0)
            << '\n';
    }
}

} // namespace traceforest
