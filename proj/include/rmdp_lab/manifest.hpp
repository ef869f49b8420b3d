// This file is part of rmdp-lab, a toolkit for tabular robust Markov
// decision processes. Distributed under the MIT license; see LICENSE.
#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rmdp_lab/types.hpp"

namespace rmdp_lab {

/// Library version reported by the CLI and stamped into run manifests.
inline constexpr const char* kVersion = "0.1.0";

/// FNV-1a 64-bit hash of a byte string.
inline std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= static_cast<std::uint64_t>(bytes[i]);
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& text) {
    return fnv1a64(text.data(), text.size());
}

/// FNV-1a 64 hash of a file's bytes, rendered as 16 hex digits.
inline std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "' for hashing");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    std::ostringstream hex;
    hex << std::hex << std::setfill('0') << std::setw(16) << fnv1a64(bytes);
    return hex.str();
}

/**
 * Provenance sidecar for a CLI run: tool version, the exact command line,
 * the seed, content hashes of every input and output file, and the wall
 * time. Everything except wall_time_ms is deterministic, so re-runs with
 * identical inputs differ in that one field only — and all data payloads
 * they hash are byte-identical.
 */
struct RunManifest {
    std::string command;
    std::string seed;       ///< empty when the command takes no seed
    double wall_time_ms = 0.0;
    std::vector<std::pair<std::string, std::string>> inputs;  ///< (path, hash)
    std::vector<std::pair<std::string, std::string>> outputs; ///< (path, hash)

    void add_input(const std::string& path) {
        inputs.emplace_back(path, hash_file(path));
    }
    void add_output(const std::string& path) {
        outputs.emplace_back(path, hash_file(path));
    }

    /// Writes the manifest as sorted-key JSON next to the outputs.
    void save(const std::string& path) const {
        nlohmann::json j;
        j["version"] = kVersion;
        j["command"] = command;
        j["seed"] = seed;
        j["wall_time_ms"] = wall_time_ms;
        nlohmann::json in = nlohmann::json::object();
        for (const auto& [p, h] : inputs) in[p] = h;
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [p, h] : outputs) out[p] = h;
        j["inputs"] = std::move(in);
        j["outputs"] = std::move(out);
        std::ofstream f(path);
        if (!f) throw ParseError("cannot open '" + path + "' for writing");
        f << j.dump(2) << '\n';
        if (!f) throw ParseError("failed writing '" + path + "'");
    }
};

} // namespace rmdp_lab
