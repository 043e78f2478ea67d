#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace traceforest {

double mae(const std::vector<double>& actual, const std::vector<double>& predicted);
double rmse(const std::vector<double>& actual, const std::vector<double>& predicted);

// 1 - SS_res/SS_tot. A constant target gives 1 for a perfect fit and 0
// otherwise, so reports never carry NaNs.
double r2(const std::vector<double>& actual, const std::vector<double>& predicted);

// predicted - actual, elementwise.
std::vector<double> residuals(const std::vector<double>& actual,
                              const std::vector<double>& predicted);

struct EvalReport {
    double mae = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
    std::vector<double> residuals;
    std::vector<std::pair<double, double>> parity_pairs; // (actual, predicted)
    std::size_t n = 0;
};

EvalReport evaluate(const std::vector<double>& actual, const std::vector<double>& predicted);

struct BinStats {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    std::optional<double> mae;
    std::optional<double> rmse;
};

struct BinReport {
    std::vector<double> edges;
    std::vector<BinStats> bins;
    std::size_t underflow = 0; // bin feature below the first edge
    std::size_t overflow = 0;  // bin feature at or above the last edge
};

// Half-open bins [e_i, e_i+1) over a conditioning feature (typically the
// requested CPUs); per-bin MAE/RMSE on the rows that land in each bin.
BinReport error_by_bin(const std::vector<double>& actual, const std::vector<double>& predicted,
                       const std::vector<double>& bin_feature, const std::vector<double>& edges);

struct CorrelationTable {
    std::vector<std::string> names;
    std::vector<std::vector<double>> grid;
};

// Writes metrics.csv, parity.csv, residuals.csv, bins.csv and
// correlation.csv into the sink directory. Metrics re-read from disk equal
// the in-memory values bit-exactly.
void export_report(const EvalReport& report, const BinReport& bins,
                   const CorrelationTable& correlation, const std::string& sink_dir);

// Reads back a metrics.csv written by export_report.
std::vector<std::pair<std::string, double>> read_metrics_csv(const std::string& path);

} // namespace traceforest
