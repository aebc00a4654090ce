#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dualq::cli {

struct ArtifactChecksum {
    std::string path;
    std::uintmax_t bytes = 0;
    std::string sha256;
};

/// Record of one CLI invocation: what ran, with which inputs, and what it produced.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::optional<std::string> config_path;
    std::vector<uint64_t> seeds;
    bool canonical = false;
    std::string started_at;
    std::string finished_at;
    std::string status = "ok";
    int exit_code = 0;
    std::optional<nlohmann::json> error;
    std::vector<ArtifactChecksum> outputs;
};

nlohmann::json to_json(const RunManifest& m);

/// Lowercase hex SHA-256 of the file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view data);

ArtifactChecksum checksum(const std::filesystem::path& path);

} // namespace dualq::cli
