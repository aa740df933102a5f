#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "radblow/grid.hpp"

//
// Result persistence: CSV tables, self-describing snapshot pairs (text header
// + little-endian float64 payload), and a run manifest with per-file
// checksums. Everything written here is deterministic; wall-clock timings go
// into the manifest's log section only, never into the CSVs.
//

namespace radblow {

inline std::uint64_t fnv1a64(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string fnv1a64_hex(const std::string& s) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(s.data(), s.size())));
    return buf;
}

inline std::string csv_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Writes through a ".incomplete" staging name; the final name appears only on
// success, so a crash can never leave a truncated file under the real name.
class OutputWriter {
public:
    explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }

    void write_file(const std::string& name, const std::string& content) {
        const auto staged = dir_ / (name + ".incomplete");
        const auto final_path = dir_ / name;
        {
            std::ofstream out(staged, std::ios::binary);
            if (!out) throw std::runtime_error("cannot open " + staged.string());
            out.write(content.data(), static_cast<std::streamsize>(content.size()));
            if (!out.good()) throw std::runtime_error("write failed: " + staged.string());
        }
        std::filesystem::rename(staged, final_path);
        checksums_[name] = fnv1a64_hex(content);
    }

    const std::map<std::string, std::string>& checksums() const { return checksums_; }

private:
    std::filesystem::path dir_;
    std::map<std::string, std::string> checksums_;
};

// ---------------------------------------------------------------------------
// Snapshots: <name>.snap (text header) + <name>.snap.bin (payload)
// ---------------------------------------------------------------------------

struct SnapshotHeader {
    std::string field;
    int dim = 0;
    double radius = 0.0;
    int cells = 0;
    double time = 0.0;
    std::map<std::string, std::string> params;  // free-form state parameters
};

inline void write_snapshot(OutputWriter& out, const std::string& name, const Profile& p,
                           double time, const std::string& field,
                           const std::map<std::string, std::string>& params = {}) {
    static_assert(sizeof(double) == 8);
    if constexpr (std::endian::native != std::endian::little)
        throw std::runtime_error("snapshot payloads are little-endian; unsupported host byte order");

    std::string payload(p.values.size() * 8, '\0');
    std::memcpy(payload.data(), p.values.data(), payload.size());

    std::string header;
    header += "radblow-snapshot 1\n";
    header += "field = " + field + "\n";
    header += "n = " + std::to_string(p.grid->dim) + "\n";
    header += "R = " + csv_double(p.grid->radius) + "\n";
    header += "N = " + std::to_string(p.grid->cells) + "\n";
    header += "time = " + csv_double(time) + "\n";
    for (const auto& [k, v] : params) header += "param." + k + " = " + v + "\n";
    header += "payload = " + name + ".snap.bin\n";
    header += "encoding = float64-le\n";
    header += "count = " + std::to_string(p.values.size()) + "\n";
    header += "checksum = " + fnv1a64_hex(payload) + "\n";

    out.write_file(name + ".snap.bin", payload);
    out.write_file(name + ".snap", header);
}

inline std::pair<SnapshotHeader, std::vector<double>> read_snapshot(const std::filesystem::path& header_path) {
    std::ifstream in(header_path);
    if (!in) throw std::runtime_error("cannot open snapshot " + header_path.string());
    std::string line;
    std::getline(in, line);
    if (line != "radblow-snapshot 1") throw std::runtime_error("not a snapshot header: " + header_path.string());

    SnapshotHeader h;
    std::string payload_name, checksum;
    size_t count = 0;
    while (std::getline(in, line)) {
        const size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        if (key == "field") h.field = value;
        else if (key == "n") h.dim = std::stoi(value);
        else if (key == "R") h.radius = std::strtod(value.c_str(), nullptr);
        else if (key == "N") h.cells = std::stoi(value);
        else if (key == "time") h.time = std::strtod(value.c_str(), nullptr);
        else if (key == "payload") payload_name = value;
        else if (key == "count") count = static_cast<size_t>(std::stoul(value));
        else if (key == "checksum") checksum = value;
        else if (key.rfind("param.", 0) == 0) h.params[key.substr(6)] = value;
    }

    const auto payload_path = header_path.parent_path() / payload_name;
    std::ifstream bin(payload_path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot open snapshot payload " + payload_path.string());
    std::string payload((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    if (payload.size() != count * 8)
        throw std::runtime_error("snapshot payload size mismatch in " + payload_path.string());
    if (fnv1a64_hex(payload) != checksum)
        throw std::runtime_error("snapshot checksum mismatch in " + payload_path.string());

    std::vector<double> values(count);
    std::memcpy(values.data(), payload.data(), payload.size());
    return {h, values};
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

inline std::string build_manifest(const std::string& version, const std::string& config_echo,
                                  const std::map<std::string, std::string>& checksums,
                                  const std::vector<std::string>& log_lines, bool incomplete) {
    std::string m;
    m += "radblow-manifest 1\n";
    m += "version = " + version + "\n";
    m += "status = " + std::string(incomplete ? "incomplete" : "complete") + "\n";
    m += "\n[config]\n";
    m += config_echo;
    m += "\n[files]\n";
    for (const auto& [name, sum] : checksums) m += sum + "  " + name + "\n";
    if (!log_lines.empty()) {
        m += "\n[log]\n";  // wall-clock notes; excluded from determinism guarantees
        for (const auto& l : log_lines) m += l + "\n";
    }
    return m;
}

}  // namespace radblow
