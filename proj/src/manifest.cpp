#include "traceforest/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "traceforest/errors.hpp"
#include "traceforest/rng.hpp"
#include "traceforest/strings.hpp"

using ordered_json = nlohmann::ordered_json;

namespace traceforest {

std::string RunManifest::config_hash() const {
    std::string joined = command;
    for (const auto& [key, value] : config) {
        joined += '\n';
        joined += key;
        joined += '=';
        joined += value;
    }
    return to_hex16(fnv1a64(joined));
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    ordered_json doc;
    doc["command"] = manifest.command;
    doc["seed"] = manifest.seed;
    ordered_json config = ordered_json::object();
    for (const auto& [key, value] : manifest.config) config[key] = value;
    doc["config"] = std::move(config);
    doc["config_hash"] = manifest.config_hash();
    doc["inputs"] = manifest.inputs;
    doc["outputs"] = manifest.outputs;
    doc["tool_version"] = manifest.tool_version;
    doc["duration_ms"] = manifest.duration_ms;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << doc.dump(2) << '\n';
}

} // namespace traceforest
