#include "traceforest/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "traceforest/csv.hpp"
#include "traceforest/errors.hpp"
#include "traceforest/rng.hpp"
#include "traceforest/strings.hpp"

using ordered_json = nlohmann::ordered_json;

namespace traceforest {

std::vector<std::vector<double>> FeatureMatrix::to_columns() const {
    std::vector<std::vector<double>> columns(cols(), std::vector<double>(rows));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols(); ++c) columns[c][r] = at(r, c);
    return columns;
}

LeakagePolicy parse_leakage_policy(const std::string& text) {
    if (text == "exclude-siblings") return LeakagePolicy::ExcludeSiblings;
    if (text == "none") return LeakagePolicy::None;
    throw DataError("unknown leakage policy '" + text + "' (expected exclude-siblings or none)");
}

std::string feature_stem(const std::string& name) {
    static const char* kSuffixes[] = {"_cpus", "_cpu", "_memory", "_mean", "_std", "_min",
                                      "_max",  "_q25", "_q50",    "_q75",  "_freq"};
    for (const char* suffix : kSuffixes) {
        const std::size_t len = std::string_view(suffix).size();
        if (name.size() > len && name.compare(name.size() - len, len, suffix) == 0)
            return name.substr(0, name.size() - len);
    }
    return name;
}

FeatureMatrix build_feature_matrix(const PreprocessedTable& table,
                                   const std::string& target_name, LeakagePolicy policy) {
    if (table.rows.empty()) throw DataError("cannot build a feature matrix from zero rows");
    auto target_it = std::find(table.columns.begin(), table.columns.end(), target_name);
    if (target_it == table.columns.end())
        throw SchemaError("target column '" + target_name + "' not found");
    const std::size_t target_col =
        static_cast<std::size_t>(target_it - table.columns.begin());

    const std::string target_stem = feature_stem(target_name);
    std::vector<std::size_t> feature_cols;
    FeatureMatrix m;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c == target_col) continue;
        if (policy == LeakagePolicy::ExcludeSiblings &&
            feature_stem(table.columns[c]) == target_stem)
            continue;
        feature_cols.push_back(c);
        m.column_names.push_back(table.columns[c]);
    }

    m.rows = table.rows.size();
    m.target_name = target_name;
    m.values.reserve(m.rows * feature_cols.size());
    m.target.reserve(m.rows);
    for (const auto& row : table.rows) {
        for (std::size_t c : feature_cols) m.values.push_back(row[c]);
        m.target.push_back(row[target_col]);
    }
    return m;
}

std::vector<std::vector<double>> correlation_matrix(const FeatureMatrix& m) {
    if (m.rows < 2) throw DataError("correlation requires at least 2 rows");
    const std::size_t p = m.cols();
    const auto columns = m.to_columns();

    std::vector<std::vector<double>> centered(p, std::vector<double>(m.rows));
    std::vector<double> sum_sq(p, 0.0);
    for (std::size_t c = 0; c < p; ++c) {
        double mean = 0.0;
        for (double v : columns[c]) mean += v;
        mean /= static_cast<double>(m.rows);
        double ss = 0.0;
        for (std::size_t r = 0; r < m.rows; ++r) {
            centered[c][r] = columns[c][r] - mean;
            ss += centered[c][r] * centered[c][r];
        }
        sum_sq[c] = ss;
    }

    // dot / sqrt(ss_i * ss_j) rather than dot / (sqrt(ss_i) * sqrt(ss_j)):
    // identical columns then land on exactly +-1.
    std::vector<std::vector<double>> corr(p, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < p; ++i) {
        if (sum_sq[i] > 0.0) corr[i][i] = 1.0;
        for (std::size_t j = i + 1; j < p; ++j) {
            double r = 0.0;
            if (sum_sq[i] > 0.0 && sum_sq[j] > 0.0) {
                double dot = 0.0;
                for (std::size_t k = 0; k < m.rows; ++k) dot += centered[i][k] * centered[j][k];
                r = dot / std::sqrt(sum_sq[i] * sum_sq[j]);
            }
            corr[i][j] = r;
            corr[j][i] = r;
        }
    }
    return corr;
}

FeatureMatrix prune_correlated(const FeatureMatrix& m, double threshold) {
    if (threshold <= 0.0 || threshold > 1.0)
        throw DataError("prune threshold must be in (0, 1]");
    if (m.rows < 2 || m.cols() < 2) return m;

    const auto corr = correlation_matrix(m);
    std::vector<std::size_t> kept;
    std::vector<std::string> kept_names;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        bool redundant = false;
        for (std::size_t i : kept) {
            if (std::fabs(corr[i][j]) > threshold) {
                redundant = true;
                break;
            }
        }
        if (!redundant) {
            kept.push_back(j);
            kept_names.push_back(m.column_names[j]);
        }
    }
    if (kept.size() == m.cols()) return m;
    return select_features(m, kept_names);
}

SplitIndices train_test_split(const FeatureMatrix& m, double test_fraction, std::uint64_t seed) {
    if (m.rows < 2) throw DataError("train/test split requires at least 2 rows");
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw DataError("test fraction must be in (0, 1)");

    std::size_t n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(m.rows) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, m.rows - 1);

    std::vector<std::size_t> order(m.rows);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.next_below(i)]);

    SplitIndices split;
    split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(split.test.begin(), split.test.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

FoldPlan kfold_indices(std::size_t rows, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw DataError("k-fold requires k >= 2");
    if (k > rows) throw DataError("k-fold requires k <= rows");

    std::vector<std::size_t> order(rows);
    for (std::size_t i = 0; i < rows; ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = rows; i > 1; --i) std::swap(order[i - 1], order[rng.next_below(i)]);

    FoldPlan plan;
    plan.k = k;
    const std::size_t base = rows / k;
    const std::size_t extra = rows % k;
    std::size_t at = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        std::vector<std::size_t> fold(order.begin() + static_cast<std::ptrdiff_t>(at),
                                      order.begin() + static_cast<std::ptrdiff_t>(at + size));
        std::sort(fold.begin(), fold.end());
        plan.folds.push_back(std::move(fold));
        at += size;
    }
    return plan;
}

FeatureMatrix take_rows(const FeatureMatrix& m, const std::vector<std::size_t>& indices) {
    FeatureMatrix out;
    out.rows = indices.size();
    out.column_names = m.column_names;
    out.target_name = m.target_name;
    out.values.reserve(indices.size() * m.cols());
    out.target.reserve(indices.size());
    for (std::size_t r : indices) {
        const double* row = m.row(r);
        out.values.insert(out.values.end(), row, row + m.cols());
        out.target.push_back(m.target[r]);
    }
    return out;
}

FeatureMatrix select_features(const FeatureMatrix& m, const std::vector<std::string>& names) {
    std::vector<std::size_t> cols;
    cols.reserve(names.size());
    for (const auto& name : names) {
        auto it = std::find(m.column_names.begin(), m.column_names.end(), name);
        if (it == m.column_names.end())
            throw SchemaError("feature '" + name + "' not present in matrix");
        cols.push_back(static_cast<std::size_t>(it - m.column_names.begin()));
    }
    FeatureMatrix out;
    out.rows = m.rows;
    out.column_names = names;
    out.target_name = m.target_name;
    out.target = m.target;
    out.values.reserve(m.rows * cols.size());
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c : cols) out.values.push_back(m.at(r, c));
    return out;
}

std::uint64_t schema_fingerprint(const std::vector<std::string>& names) {
    return fnv1a64(join(names, "\n"));
}

void write_matrix_csv(const FeatureMatrix& m, const std::string& path) {
    std::set<std::string> unique(m.column_names.begin(), m.column_names.end());
    if (unique.size() != m.column_names.size())
        throw SchemaError("duplicate feature name in matrix");
    if (unique.count(m.target_name))
        throw SchemaError("target '" + m.target_name + "' overlaps a feature column");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    std::vector<std::string> header = m.column_names;
    header.push_back(m.target_name);
    write_csv_row(out, header);
    std::vector<std::string> cells(header.size());
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) cells[c] = format_double(m.at(r, c));
        cells[m.cols()] = format_double(m.target[r]);
        write_csv_row(out, cells);
    }
    if (!out) throw IoError("write failure on " + path);

    ordered_json meta;
    meta["format"] = "traceforest-matrix-meta";
    meta["version"] = 1;
    meta["target"] = m.target_name;
    meta["feature_names"] = m.column_names;
    meta["fingerprint"] = to_hex16(schema_fingerprint(m.column_names));
    meta["rows"] = m.rows;
    std::ofstream meta_out(path + ".meta.json", std::ios::binary);
    if (!meta_out) throw IoError("cannot write " + path + ".meta.json");
    meta_out << meta.dump(2) << '\n';
}

FeatureMatrix read_matrix_csv(const std::string& path) {
    std::ifstream meta_in(path + ".meta.json", std::ios::binary);
    if (!meta_in) throw SchemaError("missing matrix sidecar " + path + ".meta.json");
    ordered_json meta;
    try {
        meta_in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ".meta.json: " + e.what());
    }
    if (meta.value("format", "") != "traceforest-matrix-meta")
        throw SchemaError(path + ".meta.json: not a matrix sidecar");
    if (meta.value("version", 0) != 1)
        throw SchemaError(path + ".meta.json: unsupported version");

    FeatureMatrix m;
    m.target_name = meta.at("target").get<std::string>();
    m.column_names = meta.at("feature_names").get<std::vector<std::string>>();
    const std::string fp = meta.at("fingerprint").get<std::string>();
    if (fp != to_hex16(schema_fingerprint(m.column_names)))
        throw SchemaError(path + ".meta.json: fingerprint does not match feature names");

    CsvContent csv = read_csv_file(path);
    std::vector<std::string> expected = m.column_names;
    expected.push_back(m.target_name);
    if (csv.header != expected)
        throw SchemaError(path + ": header does not match sidecar schema");

    m.rows = csv.rows.size();
    m.values.reserve(m.rows * m.cols());
    m.target.reserve(m.rows);
    for (const auto& row : csv.rows) {
        if (row.cells.size() != expected.size())
            throw ParseError(path + ":" + std::to_string(row.line) + ": wrong cell count");
        for (std::size_t c = 0; c < row.cells.size(); ++c) {
            auto num = parse_double(row.cells[c]);
            if (!num)
                throw ParseError(path + ":" + std::to_string(row.line) +
                                 ": non-numeric cell '" + row.cells[c] + "'");
            if (c + 1 == row.cells.size()) m.target.push_back(*num);
            else m.values.push_back(*num);
        }
    }
    return m;
}

} // namespace traceforest
