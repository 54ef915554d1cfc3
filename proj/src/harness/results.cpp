// SPDX-License-Identifier: Apache-2.0
#include "harness/results.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace isac::harness {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string grid_to_csv(const Grid2D& grid, double axis1_unit, double axis2_unit,
                        const std::string& axis1_name, const std::string& axis2_name) {
    std::string out;
    out.reserve(static_cast<std::size_t>(grid.values.size()) * 12 + 256);
    out += axis1_name + "\\" + axis2_name;
    for (int j = 0; j < grid.axis2.count(); ++j) {
        out += ',';
        out += format_double(grid.axis2.value(j) / axis2_unit);
    }
    out += '\n';
    for (int i = 0; i < grid.axis1.count(); ++i) {
        out += format_double(grid.axis1.value(i) / axis1_unit);
        for (int j = 0; j < grid.axis2.count(); ++j) {
            out += ',';
            out += format_double(grid.values(i, j));
        }
        out += '\n';
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

EmitReport emit(const ResultBundle& bundle, const std::string& out_dir) {
    namespace fs = std::filesystem;
    EmitReport report;
    const fs::path base(out_dir);

    nlohmann::json manifest;
    manifest["experiment"] = bundle.experiment;
    manifest["seed"] = bundle.seed;
    manifest["files"] = nlohmann::json::array();

    for (const Artifact& a : bundle.artifacts) {
        const fs::path path = base / a.relpath;
        fs::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("emit: cannot write " + path.string());
        out.write(a.content.data(), static_cast<std::streamsize>(a.content.size()));
        if (!out) throw std::runtime_error("emit: short write to " + path.string());

        char hash[20];
        std::snprintf(hash, sizeof(hash), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(a.content)));
        manifest["files"].push_back({{"path", a.relpath},
                                     {"bytes", a.content.size()},
                                     {"fnv1a64", std::string(hash)}});
        report.paths.push_back(path.string());
    }

    {
        const fs::path mpath = base / bundle.experiment / "manifest.json";
        fs::create_directories(mpath.parent_path());
        std::ofstream out(mpath);
        if (!out) throw std::runtime_error("emit: cannot write " + mpath.string());
        out << manifest.dump(2) << '\n';
        report.manifest_path = mpath.string();
    }
    if (!bundle.metadata_json.empty()) {
        const fs::path mpath = base / bundle.experiment / "metadata.json";
        std::ofstream out(mpath);
        out << bundle.metadata_json;
    }
    return report;
}

}  // namespace isac::harness
