#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "boostsel/common.hpp"

namespace boostsel {

inline uint64_t fnv1a64(const void* data, size_t n) {
    uint64_t h = 1469598103934665603ULL;
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(const void* data, size_t n) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data, n)));
    return buf;
}

inline std::string hash_file_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::io_error, "cannot open '" + path + "' for hashing");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64_hex(bytes.data(), bytes.size());
}

inline std::string now_iso_utc() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

// Audit record emitted once per CLI run: the command, every resolved
// parameter, input content hashes, and output paths. Timestamps are the only
// fields that may differ between reruns with identical inputs.
class RunManifest {
public:
    explicit RunManifest(std::string command) : command_(std::move(command)) {
        started_at_ = now_iso_utc();
    }

    void set_parameters(nlohmann::json params) { parameters_ = std::move(params); }

    void add_input(const std::string& path) { inputs_[path] = hash_file_hex(path); }

    void add_output(const std::string& path) { outputs_.push_back(path); }

    void write(const std::string& path) {
        add_output(path);
        nlohmann::json j{{"command", command_},
                         {"version", kVersion},
                         {"parameters", parameters_},
                         {"inputs", inputs_},
                         {"outputs", outputs_},
                         {"started_at", started_at_},
                         {"finished_at", now_iso_utc()}};
        std::ofstream out(path, std::ios::binary);
        if (!out) raise(Errc::io_error, "cannot write '" + path + "'");
        out << j.dump(2) << '\n';
        if (!out) raise(Errc::io_error, "failed writing '" + path + "'");
    }

private:
    std::string command_;
    nlohmann::json parameters_;
    std::map<std::string, std::string> inputs_;
    std::vector<std::string> outputs_;
    std::string started_at_;
};

}  // namespace boostsel
