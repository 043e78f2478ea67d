#include "traceforest/trace_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "traceforest/csv.hpp"
#include "traceforest/errors.hpp"
#include "traceforest/rng.hpp"
#include "traceforest/stats.hpp"
#include "traceforest/strings.hpp"

using ordered_json = nlohmann::ordered_json;

namespace traceforest {

std::vector<std::string> PreprocessConfig::default_drop_columns() {
    return {"Unnamed:0",       "time",
            "machine_id",      "constraint",
            "user",            "collection_name",
            "collection_logical_name", "start_after_collection"};
}

// ---------------------------------------------------------------------------
// nested-literal parsing
// ---------------------------------------------------------------------------

namespace {

bool is_null_token(std::string_view t) {
    return t.empty() || t == "None" || t == "null" || t == "NULL" || t == "nan" || t == "NaN";
}

[[noreturn]] void bad_literal(std::string_view what, std::string_view text) {
    throw ParseError(std::string(what) + " in literal: " + std::string(text));
}

} // namespace

std::map<std::string, double> parse_object_literal(std::string_view text, double missing_fill) {
    std::map<std::string, double> out;
    std::string_view t = trim(text);
    if (t.empty()) return out;
    if (t.front() != '{' || t.back() != '}') bad_literal("expected {...} object", text);
    std::string_view body = trim(t.substr(1, t.size() - 2));
    size_t i = 0;
    while (i < body.size()) {
        while (i < body.size() && (body[i] == ' ' || body[i] == '\t')) ++i;
        if (i >= body.size()) break;
        char q = body[i];
        if (q != '\'' && q != '"') bad_literal("expected quoted key", text);
        size_t key_end = body.find(q, i + 1);
        if (key_end == std::string_view::npos) bad_literal("unterminated key", text);
        std::string key(body.substr(i + 1, key_end - i - 1));
        i = key_end + 1;
        while (i < body.size() && (body[i] == ' ' || body[i] == '\t')) ++i;
        if (i >= body.size() || body[i] != ':') bad_literal("expected ':' after key", text);
        ++i;
        size_t value_end = body.find(',', i);
        if (value_end == std::string_view::npos) value_end = body.size();
        std::string_view value = trim(body.substr(i, value_end - i));
        if (is_null_token(value)) {
            out[key] = missing_fill;
        } else if (auto num = parse_double(value)) {
            out[key] = *num;
        } else {
            bad_literal("non-numeric value for key '" + key + "'", text);
        }
        i = value_end + 1;
    }
    return out;
}

std::vector<double> parse_array_literal(std::string_view text) {
    std::vector<double> out;
    std::string_view t = trim(text);
    if (t.empty()) return out;
    if (t.front() != '[' || t.back() != ']') bad_literal("expected [...] array", text);
    std::string_view body = trim(t.substr(1, t.size() - 2));
    if (body.empty()) return out;
    size_t start = 0;
    for (size_t i = 0; i <= body.size(); ++i) {
        if (i == body.size() || body[i] == ',') {
            std::string_view item = trim(body.substr(start, i - start));
            auto num = parse_double(item);
            if (!num) bad_literal("non-numeric array element", text);
            out.push_back(*num);
            start = i + 1;
        }
    }
    return out;
}

std::pair<double, double> parse_resource_request(std::string_view text, double missing_fill) {
    auto fields = parse_object_literal(text, missing_fill);
    auto pick = [&](const char* key) {
        auto it = fields.find(key);
        return it == fields.end() ? missing_fill : it->second;
    };
    return {pick("cpus"), pick("memory")};
}

UsagePair decompose_usage(std::string_view text, const std::string& prefix, double missing_fill) {
    auto fields = parse_object_literal(text, missing_fill);
    auto pick = [&](const char* key) {
        auto it = fields.find(key);
        return it == fields.end() ? missing_fill : it->second;
    };
    UsagePair pair;
    pair.cpu_name = prefix + "_cpu";
    pair.memory_name = prefix + "_memory";
    pair.cpu = pick("cpus");
    pair.memory = pick("memory");
    return pair;
}

DistSummary summarize_distribution(const std::vector<double>& values, double missing_fill) {
    DistSummary s;
    if (values.empty()) {
        s.mean = s.std_dev = s.min = s.max = s.q25 = s.q50 = s.q75 = missing_fill;
        return s;
    }
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    s.mean = mean_of(values);
    s.std_dev = sample_std(values);
    s.min = sorted.front();
    s.max = sorted.back();
    s.q25 = quantile_sorted(sorted, 0.25);
    s.q50 = quantile_sorted(sorted, 0.50);
    s.q75 = quantile_sorted(sorted, 0.75);
    return s;
}

FrequencyEncoding frequency_encode(const std::vector<std::string>& column) {
    FrequencyEncoding enc;
    std::map<std::string, std::size_t> counts;
    for (const auto& v : column) ++counts[v];
    const double n = static_cast<double>(column.size());
    for (const auto& [category, count] : counts)
        enc.mapping[category] = static_cast<double>(count) / n;
    enc.encoded.reserve(column.size());
    for (const auto& v : column) enc.encoded.push_back(enc.mapping.at(v));
    return enc;
}

double apply_frequency_mapping(const std::map<std::string, double>& mapping,
                               const std::string& value) {
    auto it = mapping.find(value);
    return it == mapping.end() ? 0.0 : it->second;
}

// ---------------------------------------------------------------------------
// trace file ingestion
// ---------------------------------------------------------------------------

IngestResult parse_trace_file(std::istream& source, const PreprocessConfig& config,
                              const std::string& source_name) {
    CsvContent csv = read_csv(source, source_name);

    std::set<std::string> seen;
    for (const auto& name : csv.header) {
        if (!seen.insert(name).second)
            throw SchemaError("duplicate column '" + name + "' in " + source_name);
    }

    const std::set<std::string> drop(config.drop_columns.begin(), config.drop_columns.end());
    const std::set<std::string> object_cols(config.object_columns.begin(),
                                            config.object_columns.end());
    const std::set<std::string> array_cols(config.array_columns.begin(),
                                           config.array_columns.end());

    IngestResult result;
    std::vector<const CsvRow*> good_rows;
    for (const auto& row : csv.rows) {
        if (row.cells.size() != csv.header.size()) {
            result.skipped.push_back(
                {row.line, "expected " + std::to_string(csv.header.size()) + " cells, got " +
                               std::to_string(row.cells.size())});
            continue;
        }
        good_rows.push_back(&row);
    }

    // Classify the remaining columns over the whole file: numeric passthrough
    // when every non-empty cell parses as a number, categorical otherwise.
    std::vector<int> kind(csv.header.size(), 0); // 0 drop, 1 object, 2 array, 3 numeric, 4 categorical
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
        const std::string& name = csv.header[c];
        if (drop.count(name)) {
            kind[c] = 0;
        } else if (object_cols.count(name)) {
            kind[c] = 1;
        } else if (array_cols.count(name)) {
            kind[c] = 2;
        } else {
            bool numeric = true;
            for (const CsvRow* row : good_rows) {
                std::string_view cell = trim(row->cells[c]);
                if (cell.empty()) continue;
                if (!parse_double(cell)) {
                    numeric = false;
                    break;
                }
            }
            kind[c] = numeric ? 3 : 4;
        }
    }

    result.records.reserve(good_rows.size());
    for (const CsvRow* row : good_rows) {
        RawJobRecord rec;
        rec.line = row->line;
        for (std::size_t c = 0; c < csv.header.size(); ++c) {
            const std::string& name = csv.header[c];
            const std::string& cell = row->cells[c];
            switch (kind[c]) {
            case 0: break;
            case 1: rec.object_texts[name] = cell; break;
            case 2: rec.array_texts[name] = cell; break;
            case 3: {
                auto num = parse_double(cell);
                rec.numeric[name] = num ? *num : config.missing_fill;
                break;
            }
            case 4: rec.categorical[name] = cell; break;
            }
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

IngestResult parse_trace_file(const std::string& path, const PreprocessConfig& config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return parse_trace_file(in, config, path);
}

PreprocessedTable preprocess_records(const std::vector<RawJobRecord>& records,
                                     const PreprocessConfig& config) {
    PreprocessedTable table;

    // Nested and numeric transforms first; a record whose literals fail to
    // parse is skipped and logged, not fatal.
    std::vector<std::map<std::string, double>> feature_maps;
    std::vector<std::size_t> survivors;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const RawJobRecord& rec = records[i];
        std::map<std::string, double> features;
        try {
            for (const auto& [name, text] : rec.object_texts) {
                if (name == "resource_request") {
                    auto [cpus, memory] = parse_resource_request(text, config.missing_fill);
                    features["resource_request_cpus"] = cpus;
                    features["resource_request_memory"] = memory;
                } else {
                    UsagePair pair = decompose_usage(text, name, config.missing_fill);
                    features[pair.cpu_name] = pair.cpu;
                    features[pair.memory_name] = pair.memory;
                }
            }
            for (const auto& [name, text] : rec.array_texts) {
                DistSummary s = summarize_distribution(parse_array_literal(text),
                                                       config.missing_fill);
                features[name + "_mean"] = s.mean;
                features[name + "_std"] = s.std_dev;
                features[name + "_min"] = s.min;
                features[name + "_max"] = s.max;
                features[name + "_q25"] = s.q25;
                features[name + "_q50"] = s.q50;
                features[name + "_q75"] = s.q75;
            }
        } catch (const ParseError& e) {
            table.skip_log.push_back({rec.line, e.what()});
            continue;
        }
        for (const auto& [name, value] : rec.numeric) features[name] = value;
        feature_maps.push_back(std::move(features));
        survivors.push_back(i);
    }

    // Categorical columns over the surviving rows: frequency-encode when the
    // cardinality stays under the threshold, drop otherwise.
    std::map<std::string, std::vector<std::string>> cat_columns;
    for (std::size_t idx : survivors)
        for (const auto& [name, value] : records[idx].categorical)
            cat_columns[name].push_back(value);
    for (const auto& [name, values] : cat_columns) {
        std::set<std::string> distinct(values.begin(), values.end());
        if (distinct.size() > config.low_cardinality_threshold) {
            table.dropped_high_cardinality.push_back(name);
            continue;
        }
        FrequencyEncoding enc = frequency_encode(values);
        table.encodings[name] = enc.mapping;
        for (std::size_t r = 0; r < values.size(); ++r)
            feature_maps[r][name + "_freq"] = enc.encoded[r];
    }

    if (feature_maps.empty()) return table;

    for (const auto& [name, value] : feature_maps.front()) table.columns.push_back(name);
    table.rows.reserve(feature_maps.size());
    for (const auto& features : feature_maps) {
        if (features.size() != table.columns.size())
            throw SchemaError("inconsistent feature set across records");
        std::vector<double> row;
        row.reserve(table.columns.size());
        for (const auto& [name, value] : features) row.push_back(value);
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// intermediate format
// ---------------------------------------------------------------------------

void write_table_jsonl(const PreprocessedTable& table, std::ostream& out) {
    for (const auto& row : table.rows) {
        ordered_json rec;
        for (std::size_t c = 0; c < table.columns.size(); ++c) rec[table.columns[c]] = row[c];
        out << rec.dump() << '\n';
    }
}

PreprocessedTable read_table_jsonl(std::istream& in, const std::string& source_name) {
    PreprocessedTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ordered_json rec;
        try {
            rec = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!rec.is_object())
            throw SchemaError(source_name + ":" + std::to_string(line_no) + ": expected object");
        if (table.columns.empty()) {
            for (auto it = rec.begin(); it != rec.end(); ++it) table.columns.push_back(it.key());
        }
        if (rec.size() != table.columns.size())
            throw SchemaError(source_name + ":" + std::to_string(line_no) +
                              ": inconsistent record shape");
        std::vector<double> row;
        row.reserve(table.columns.size());
        for (const auto& col : table.columns) {
            auto it = rec.find(col);
            if (it == rec.end() || !it->is_number())
                throw SchemaError(source_name + ":" + std::to_string(line_no) +
                                  ": missing numeric field '" + col + "'");
            row.push_back(it->get<double>());
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_table_meta(const PreprocessedTable& table, std::ostream& out) {
    ordered_json meta;
    meta["format"] = "traceforest-table-meta";
    meta["version"] = 1;
    meta["columns"] = table.columns;
    ordered_json encodings = ordered_json::object();
    for (const auto& [col, mapping] : table.encodings) {
        ordered_json m = ordered_json::object();
        for (const auto& [category, freq] : mapping) m[category] = freq;
        encodings[col] = m;
    }
    meta["encodings"] = encodings;
    meta["dropped_high_cardinality"] = table.dropped_high_cardinality;
    meta["skipped_rows"] = table.skip_log.size();
    ordered_json skips = ordered_json::array();
    for (const auto& s : table.skip_log) skips.push_back({{"line", s.line}, {"reason", s.reason}});
    meta["skip_log"] = skips;
    out << meta.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// synthetic traces
// ---------------------------------------------------------------------------

double synth_expected_cpu_usage(double cpus_request, double memory_request,
                                double class_bump, double priority) {
    double util = 0.18 + 0.55 * std::exp(-cpus_request / 15.0) +
                  0.08 * std::sin(memory_request / (cpus_request + 1.0)) + class_bump +
                  0.0002 * priority;
    util = std::clamp(util, 0.05, 0.95);
    return cpus_request * util;
}

namespace {

std::string object_cell(double cpus, double memory) {
    return "{'cpus': " + format_double(cpus) + ", 'memory': " + format_double(memory) + "}";
}

std::string array_cell(const std::vector<double>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += format_double(values[i]);
    }
    return out + "]";
}

} // namespace

SyntheticTrace synthesize_trace(std::size_t n, std::uint64_t seed) {
    SyntheticTrace trace;
    trace.header = {"Unnamed:0",
                    "time",
                    "machine_id",
                    "constraint",
                    "user",
                    "collection_name",
                    "collection_logical_name",
                    "start_after_collection",
                    "job_name",
                    "scheduling_class",
                    "collection_type",
                    "priority",
                    "resource_request",
                    "average_usage",
                    "maximum_usage",
                    "random_sample_usage",
                    "cpu_usage_distribution",
                    "tail_cpu_usage_distribution"};

    static const char* kClasses[] = {"best-effort", "mid", "prod", "monitoring"};
    static const double kClassBump[] = {-0.06, 0.0, 0.06, 0.02};

    Rng base(seed);
    trace.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = base.derive(i);

        // Request sizes: a heavy-tailed mixture keeps >= 80% of jobs under
        // 5 CPUs while still populating the 5-10, 10-20 and 20-50 ranges.
        const double bucket = rng.next_unit();
        double cpus_req;
        if (bucket < 0.84) cpus_req = rng.next_range(0.2, 4.8);
        else if (bucket < 0.92) cpus_req = rng.next_range(5.0, 10.0);
        else if (bucket < 0.98) cpus_req = rng.next_range(10.0, 20.0);
        else cpus_req = rng.next_range(20.0, 50.0);
        const double mem_req = cpus_req * rng.next_range(1.5, 3.0) + 0.5 * rng.next_unit();

        const std::size_t class_idx = rng.next_below(4);
        const bool is_alloc = rng.next_unit() < 0.2;
        const double priority = 25.0 * static_cast<double>(rng.next_below(17));

        const double expected = synth_expected_cpu_usage(cpus_req, mem_req,
                                                         kClassBump[class_idx], priority);
        // Bounded noise, proportional to job size.
        const double avg_cpu =
            expected * (1.0 + 0.06 * rng.next_sym()) + 0.03 * cpus_req * rng.next_sym();

        // Small jobs burst harder relative to their mean, so the peak/mean
        // ratio shrinks with size; the sampled snapshot follows a mild power
        // law. Both relationships are deliberately non-affine in avg_cpu.
        const double max_cpu =
            avg_cpu * (1.10 + 0.80 * rng.next_unit() + 0.50 * std::exp(-avg_cpu / 2.0));
        const double rs_cpu = std::pow(avg_cpu, 0.9) * rng.next_range(0.6, 1.4);

        const double avg_mem = mem_req * rng.next_range(0.35, 0.65);
        const double max_mem = avg_mem * rng.next_range(1.10, 1.50);
        const double rs_mem = avg_mem * rng.next_range(0.80, 1.20);

        // Usage distributions are increasing sampled quantiles of utilization
        // normalized to the request, the way cluster traces report them.
        const double util_actual = avg_cpu / cpus_req;
        std::vector<double> dist;
        double level = util_actual * rng.next_range(0.55, 0.60);
        for (int j = 0; j < 11; ++j) {
            dist.push_back(level);
            level += util_actual * rng.next_range(0.05, 0.07);
        }
        std::vector<double> tail;
        for (int j = 0; j < 9; ++j) {
            tail.push_back(level);
            level += util_actual * rng.next_range(0.005, 0.015);
        }

        std::vector<std::string> row;
        row.reserve(trace.header.size());
        row.push_back(std::to_string(i));
        row.push_back(std::to_string(1700000000ULL + 37ULL * i));
        row.push_back(std::to_string(rng.next_below(5000) + 1));
        row.push_back("[]");
        row.push_back("user_" + std::to_string(rng.next_below(400)));
        row.push_back("collection_" + std::to_string(i));
        row.push_back("logical_" + std::to_string(rng.next_below(800)));
        row.push_back(std::to_string(rng.next_below(2)));
        row.push_back("job_" + std::to_string(i)); // high-cardinality, dropped downstream
        row.push_back(kClasses[class_idx]);
        row.push_back(is_alloc ? "alloc" : "job");
        row.push_back(format_double(priority));
        row.push_back(object_cell(cpus_req, mem_req));
        row.push_back(object_cell(avg_cpu, avg_mem));
        row.push_back(object_cell(max_cpu, max_mem));
        row.push_back(object_cell(rs_cpu, rs_mem));
        row.push_back(array_cell(dist));
        row.push_back(array_cell(tail));
        trace.rows.push_back(std::move(row));
    }
    return trace;
}

void write_trace_csv(const SyntheticTrace& trace, std::ostream& out) {
    write_csv_row(out, trace.header);
    for (const auto& row : trace.rows) write_csv_row(out, row);
}

std::vector<RawJobRecord> generate_synthetic_trace(std::size_t n, std::uint64_t seed) {
    SyntheticTrace trace = synthesize_trace(n, seed);
    std::stringstream buffer;
    write_trace_csv(trace, buffer);
    return parse_trace_file(buffer, PreprocessConfig{}, "<synthetic>").records;
}

} // namespace traceforest
