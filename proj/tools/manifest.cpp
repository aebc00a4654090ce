#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "dualq/errors.hpp"

namespace dualq::cli {

namespace {

struct DigestCtx {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

    DigestCtx() {
        if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
            throw StateError("cannot initialise SHA-256");
        }
    }
    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw StateError("SHA-256 update failed");
    }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw StateError("SHA-256 finalisation failed");
        static constexpr char kHex[] = "0123456789abcdef";
        std::string out;
        out.reserve(len * 2);
        for (unsigned int i = 0; i < len; ++i) {
            out += kHex[md[i] >> 4];
            out += kHex[md[i] & 0xF];
        }
        return out;
    }
};

} // namespace

std::string sha256_hex(std::string_view data) {
    DigestCtx d;
    d.update(data.data(), data.size());
    return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot read " + path.string());
    DigestCtx d;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return d.hex();
}

ArtifactChecksum checksum(const std::filesystem::path& path) {
    return {path.generic_string(), std::filesystem::file_size(path), sha256_file(path)};
}

nlohmann::json to_json(const RunManifest& m) {
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& o : m.outputs) outputs.push_back({{"path", o.path}, {"bytes", o.bytes}, {"sha256", o.sha256}});
    nlohmann::json j = {{"tool", "dualq"},
                        {"command", m.command},
                        {"argv", m.argv},
                        {"config", m.config_path ? nlohmann::json(*m.config_path) : nlohmann::json(nullptr)},
                        {"seeds", m.seeds},
                        {"canonical", m.canonical},
                        {"started_at", m.started_at},
                        {"finished_at", m.finished_at},
                        {"status", m.status},
                        {"exit_code", m.exit_code},
                        {"outputs", outputs}};
    if (m.error) j["error"] = *m.error;
    return j;
}

} // namespace dualq::cli
