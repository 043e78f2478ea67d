#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace traceforest {

// Controls the ingestion pipeline. The defaults reproduce the standard
// cluster-trace cleanup: metadata columns dropped, nested request/usage
// literals decomposed, distribution arrays summarized, low-cardinality
// categoricals frequency-encoded, nulls coerced to a fill value.
struct PreprocessConfig {
    std::vector<std::string> drop_columns = default_drop_columns();
    std::vector<std::string> object_columns = {
        "resource_request", "average_usage", "maximum_usage", "random_sample_usage"};
    std::vector<std::string> array_columns = {
        "cpu_usage_distribution", "tail_cpu_usage_distribution"};
    std::size_t low_cardinality_threshold = 32;
    double missing_fill = 0.0;

    static std::vector<std::string> default_drop_columns();
};

// One trace row after column dropping, before numeric transformation.
// Nested fields keep their literal text so the transforms stay testable
// in isolation.
struct RawJobRecord {
    std::size_t line = 0;
    std::map<std::string, std::string> object_texts;
    std::map<std::string, std::string> array_texts;
    std::map<std::string, std::string> categorical;
    std::map<std::string, double> numeric;
};

struct IngestSkip {
    std::size_t line = 0;
    std::string reason;
};

struct IngestResult {
    std::vector<RawJobRecord> records;
    std::vector<IngestSkip> skipped;
};

// Summary statistics of one usage-distribution array. All fields are
// utilization values in the same unit as the input.
struct DistSummary {
    double mean = 0, std_dev = 0, min = 0, max = 0, q25 = 0, q50 = 0, q75 = 0;
};

struct FrequencyEncoding {
    std::vector<double> encoded;
    std::map<std::string, double> mapping; // category -> relative frequency
};

// Final numeric table: columns sorted lexicographically, one row per
// surviving record.
struct PreprocessedTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::map<std::string, std::map<std::string, double>> encodings;
    std::vector<std::string> dropped_high_cardinality;
    std::vector<IngestSkip> skip_log;

    std::size_t skipped_count() const { return skip_log.size(); }
};

// -- parsing -----------------------------------------------------------

// Object literal such as {'cpus': 0.5, 'memory': 0.25}. Either quote style
// is accepted; None/null values collapse to the fill; a non-numeric value
// for a present key is a ParseError carrying the offending text.
std::map<std::string, double> parse_object_literal(std::string_view text, double missing_fill);

// Array literal such as [0.1, 0.2]. Empty text gives an empty vector.
std::vector<double> parse_array_literal(std::string_view text);

std::pair<double, double> parse_resource_request(std::string_view text, double missing_fill = 0.0);

struct UsagePair {
    std::string cpu_name;
    std::string memory_name;
    double cpu = 0;
    double memory = 0;
};
UsagePair decompose_usage(std::string_view text, const std::string& prefix,
                          double missing_fill = 0.0);

DistSummary summarize_distribution(const std::vector<double>& values, double missing_fill = 0.0);

FrequencyEncoding frequency_encode(const std::vector<std::string>& column);
double apply_frequency_mapping(const std::map<std::string, double>& mapping,
                               const std::string& value);

// -- file-level operations ----------------------------------------------

// Reads a header-bearing delimited trace. Rows with the wrong cell count
// are skipped and reported; drop-listed columns never reach the records.
// Remaining columns are classified per file: object/array literals by
// configured name, otherwise numeric passthrough when every non-empty cell
// parses as a number, otherwise categorical.
IngestResult parse_trace_file(std::istream& source, const PreprocessConfig& config,
                              const std::string& source_name);
IngestResult parse_trace_file(const std::string& path, const PreprocessConfig& config);

// Applies every numeric transformation; rows whose nested literals fail to
// parse are skipped and logged.
PreprocessedTable preprocess_records(const std::vector<RawJobRecord>& records,
                                     const PreprocessConfig& config);

// Intermediate format: one self-describing keyed record per line with
// full-precision floats, bit-exact on re-read.
void write_table_jsonl(const PreprocessedTable& table, std::ostream& out);
PreprocessedTable read_table_jsonl(std::istream& in, const std::string& source_name);
void write_table_meta(const PreprocessedTable& table, std::ostream& out);

// -- synthetic traces -----------------------------------------------------

// Raw synthetic trace shaped like a real export, drop-listed metadata
// included. Deterministic for a fixed (n, seed); row i depends only on
// (seed, i). Requested CPUs are heavy-tailed: >= 80% of jobs below 5.
// The target column average_usage is synth_expected_cpu_usage plus bounded
// noise that scales with job size.
struct SyntheticTrace {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
SyntheticTrace synthesize_trace(std::size_t n, std::uint64_t seed);
void write_trace_csv(const SyntheticTrace& trace, std::ostream& out);

std::vector<RawJobRecord> generate_synthetic_trace(std::size_t n, std::uint64_t seed);

// Noise-free average CPU usage of a synthetic job: a saturating function of
// the requested CPUs and memory with small class/priority shifts. Exposed so
// tests can reason about the generative ground truth.
double synth_expected_cpu_usage(double cpus_request, double memory_request,
                                double class_bump, double priority);

} // namespace traceforest
