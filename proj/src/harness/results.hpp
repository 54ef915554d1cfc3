// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isac/grid.hpp"

namespace isac::harness {

// One output file of an experiment, fully rendered in memory so runs are
// deterministic and hashable before anything touches the filesystem.
struct Artifact {
    std::string relpath;  // e.g. "sensing-accuracy/estimates.json"
    std::string content;
};

struct ResultBundle {
    std::string experiment;
    std::uint64_t seed = 0;
    std::vector<Artifact> artifacts;   // deterministic numeric payloads
    std::string metadata_json;         // run metadata (wall time etc), not hashed
};

// Deterministic float formatting: shortest round-trip representation.
std::string format_double(double v);

// CSV rendering of a 2-D grid with an axis header row; axis values are
// emitted in the stated unit (e.g. degrees for angles).
std::string grid_to_csv(const Grid2D& grid, double axis1_unit, double axis2_unit,
                        const std::string& axis1_name, const std::string& axis2_name);

std::uint64_t fnv1a64(const std::string& bytes);

// Writes every artifact under out_dir plus a manifest.json listing paths,
// sizes, and content hashes, and metadata.json (excluded from the manifest
// because it carries wall-clock timing).
struct EmitReport {
    std::vector<std::string> paths;
    std::string manifest_path;
};
EmitReport emit(const ResultBundle& bundle, const std::string& out_dir);

}  // namespace isac::harness
