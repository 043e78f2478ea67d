#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace traceforest {

inline constexpr const char* kToolVersion = "0.1.0";

// Provenance record written next to every command's outputs: what ran,
// with which resolved settings, over which files, and for how long.
struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config; // resolved key/value pairs
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::string tool_version = kToolVersion;
    double duration_ms = 0.0;

    std::string config_hash() const;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

} // namespace traceforest
