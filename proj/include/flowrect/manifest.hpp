#ifndef FLOWRECT_MANIFEST_HPP
#define FLOWRECT_MANIFEST_HPP

#include <chrono>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>

#include "flowrect/errors.hpp"

namespace flowrect {

#ifndef FLOWRECT_VERSION
#define FLOWRECT_VERSION "0.0.0"
#endif

// Streamed FNV-1a 64 over file bytes; used to fingerprint inputs/outputs for
// reproducibility checks (not a cryptographic digest).
inline std::uint64_t file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for digest: " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Everything needed to reproduce one command invocation and verify its
// outputs. Wall times live here (and only here) so that digested artifacts
// stay deterministic.
class RunManifest {
  public:
    explicit RunManifest(const std::string& command) {
        j_["command"] = command;
        j_["tool_version"] = FLOWRECT_VERSION;
        j_["config"] = nlohmann::json::object();
        j_["inputs"] = nlohmann::json::object();
        j_["outputs"] = nlohmann::json::object();
        j_["wall_time_seconds"] = nlohmann::json::object();
    }

    template <typename T>
    void config(const std::string& key, const T& value) {
        j_["config"][key] = value;
    }
    void input(const std::string& label, const std::filesystem::path& path) {
        j_["inputs"][label] = {{"path", path.string()}, {"digest", hex64(file_digest(path))}};
    }
    void output(const std::string& label, const std::filesystem::path& path) {
        j_["outputs"][label] = {{"path", path.string()}, {"digest", hex64(file_digest(path))}};
    }
    void timing(const std::string& phase, double seconds) {
        j_["wall_time_seconds"][phase] = seconds;
    }
    void note(const std::string& key, const std::string& value) { j_[key] = value; }

    const nlohmann::json& json() const { return j_; }

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot open for writing: " + path.string());
        out << j_.dump(2) << "\n";
    }

    static nlohmann::json read(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open manifest: " + path.string());
        return nlohmann::json::parse(in);
    }

  private:
    nlohmann::json j_;
};

// Simple wall-clock phase timer feeding the manifest.
class PhaseTimer {
  public:
    PhaseTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace flowrect

#endif
