#include "traceforest/evaluation.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "traceforest/csv.hpp"
#include "traceforest/errors.hpp"
#include "traceforest/strings.hpp"

namespace traceforest {

namespace {

void check_pair(const std::vector<double>& actual, const std::vector<double>& predicted) {
    if (actual.size() != predicted.size())
        throw DataError("actual/predicted length mismatch: " + std::to_string(actual.size()) +
                        " vs " + std::to_string(predicted.size()));
    if (actual.empty()) throw DataError("metrics need at least one observation");
}

} // namespace

double mae(const std::vector<double>& actual, const std::vector<double>& predicted) {
    check_pair(actual, predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) sum += std::fabs(predicted[i] - actual[i]);
    return sum / static_cast<double>(actual.size());
}

double rmse(const std::vector<double>& actual, const std::vector<double>& predicted) {
    check_pair(actual, predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double d = predicted[i] - actual[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(actual.size()));
}

double r2(const std::vector<double>& actual, const std::vector<double>& predicted) {
    check_pair(actual, predicted);
    double mean = 0.0;
    for (double v : actual) mean += v;
    mean /= static_cast<double>(actual.size());

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double r = predicted[i] - actual[i];
        const double c = actual[i] - mean;
        ss_res += r * r;
        ss_tot += c * c;
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

std::vector<double> residuals(const std::vector<double>& actual,
                              const std::vector<double>& predicted) {
    check_pair(actual, predicted);
    std::vector<double> out(actual.size());
    for (std::size_t i = 0; i < actual.size(); ++i) out[i] = predicted[i] - actual[i];
    return out;
}

EvalReport evaluate(const std::vector<double>& actual, const std::vector<double>& predicted) {
    EvalReport report;
    report.mae = mae(actual, predicted);
    report.rmse = rmse(actual, predicted);
    report.r2 = r2(actual, predicted);
    report.residuals = residuals(actual, predicted);
    report.n = actual.size();
    report.parity_pairs.reserve(actual.size());
    for (std::size_t i = 0; i < actual.size(); ++i)
        report.parity_pairs.emplace_back(actual[i], predicted[i]);
    return report;
}

BinReport error_by_bin(const std::vector<double>& actual, const std::vector<double>& predicted,
                       const std::vector<double>& bin_feature,
                       const std::vector<double>& edges) {
    check_pair(actual, predicted);
    if (bin_feature.size() != actual.size())
        throw DataError("bin feature length does not match observations");
    if (edges.size() < 2) throw DataError("need at least two bin edges");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i - 1] < edges[i])) throw DataError("bin edges must be strictly increasing");

    BinReport report;
    report.edges = edges;
    const std::size_t n_bins = edges.size() - 1;
    std::vector<std::vector<std::size_t>> members(n_bins);
    for (std::size_t i = 0; i < bin_feature.size(); ++i) {
        const double v = bin_feature[i];
        if (v < edges.front()) {
            ++report.underflow;
            continue;
        }
        if (v >= edges.back()) {
            ++report.overflow;
            continue;
        }
        std::size_t b = 0;
        while (b + 1 < n_bins && v >= edges[b + 1]) ++b;
        members[b].push_back(i);
    }

    for (std::size_t b = 0; b < n_bins; ++b) {
        BinStats stats;
        stats.lo = edges[b];
        stats.hi = edges[b + 1];
        stats.count = members[b].size();
        if (!members[b].empty()) {
            std::vector<double> a, p;
            a.reserve(members[b].size());
            p.reserve(members[b].size());
            for (std::size_t i : members[b]) {
                a.push_back(actual[i]);
                p.push_back(predicted[i]);
            }
            stats.mae = mae(a, p);
            stats.rmse = rmse(a, p);
        }
        report.bins.push_back(std::move(stats));
    }
    return report;
}

void export_report(const EvalReport& report, const BinReport& bins,
                   const CorrelationTable& correlation, const std::string& sink_dir) {
    if (report.n == 0) throw DataError("refusing to export an empty evaluation report");

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(sink_dir, ec);
    auto open = [&](const std::string& name) {
        std::ofstream out(sink_dir + "/" + name, std::ios::binary);
        if (!out) throw IoError("cannot write " + sink_dir + "/" + name);
        return out;
    };

    {
        auto out = open("metrics.csv");
        out << "metric,value\n";
        out << "mae," << format_double(report.mae) << '\n';
        out << "rmse," << format_double(report.rmse) << '\n';
        out << "r2," << format_double(report.r2) << '\n';
        out << "n," << report.n << '\n';
    }
    {
        auto out = open("parity.csv");
        out << "actual,predicted\n";
        for (const auto& [a, p] : report.parity_pairs)
            out << format_double(a) << ',' << format_double(p) << '\n';
    }
    {
        auto out = open("residuals.csv");
        out << "actual,residual\n";
        for (std::size_t i = 0; i < report.n; ++i)
            out << format_double(report.parity_pairs[i].first) << ','
                << format_double(report.residuals[i]) << '\n';
    }
    {
        auto out = open("bins.csv");
        out << "bin_lo,bin_hi,count,mae,rmse\n";
        for (const auto& b : bins.bins) {
            out << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << ',';
            if (b.mae) out << format_double(*b.mae);
            out << ',';
            if (b.rmse) out << format_double(*b.rmse);
            out << '\n';
        }
    }
    {
        auto out = open("correlation.csv");
        std::vector<std::string> header = {"feature"};
        header.insert(header.end(), correlation.names.begin(), correlation.names.end());
        write_csv_row(out, header);
        for (std::size_t i = 0; i < correlation.names.size(); ++i) {
            std::vector<std::string> cells = {correlation.names[i]};
            for (double v : correlation.grid[i]) cells.push_back(format_double(v));
            write_csv_row(out, cells);
        }
    }
}

std::vector<std::pair<std::string, double>> read_metrics_csv(const std::string& path) {
    CsvContent csv = read_csv_file(path);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& row : csv.rows) {
        if (row.cells.size() != 2)
            throw ParseError(path + ":" + std::to_string(row.line) + ": expected metric,value");
        auto num = parse_double(row.cells[1]);
        if (!num)
            throw ParseError(path + ":" + std::to_string(row.line) + ": non-numeric value");
        out.emplace_back(row.cells[0], *num);
    }
    return out;
}

} // namespace traceforest
