// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/io/csv.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace delayctl {

[[nodiscard]] inline std::string sha256_hex(const std::string& bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw NumericalError("sha256: digest failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

/// Everything needed to re-run a command and check its outputs.
/// CSV bytes depend only on `parameters` and the spec; `wall_clock` does not enter them.
struct RunManifest {
    std::string version;
    std::string command;
    std::string spec_path;
    std::string spec_sha256;
    nlohmann::json parameters = nlohmann::json::object();
    std::vector<std::pair<std::string, std::string>> artifacts;  // (path, sha256)
    double wall_clock = 0.0;                                     // seconds
    unsigned threads = 1;

    void add_artifact(const std::string& path, const std::string& bytes) { artifacts.emplace_back(path, sha256_hex(bytes)); }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j;
        j["version"] = version;
        j["command"] = command;
        j["spec"] = {{"path", spec_path}, {"sha256", spec_sha256}};
        j["parameters"] = parameters;
        j["threads"] = threads;
        j["wall_clock_seconds"] = wall_clock;
        auto arts = nlohmann::json::array();
        for (const auto& [p, h] : artifacts) arts.push_back({{"path", p}, {"sha256", h}});
        j["artifacts"] = arts;
        return j;
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ValidationError("cannot write " + path);
        f << to_json().dump(2) << '\n';
    }
};

}  // namespace delayctl
