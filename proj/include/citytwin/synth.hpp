// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic city in the source formats of the real dataset:
// a grid of box buildings per tile, street-side antennas split across the two
// antenna datasets, and a ground-truth sidecar for tests.
#pragma once

#include "citytwin/geodesy.hpp"
#include "citytwin/ingest.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace citytwin {

struct SynthSpec {
    std::uint64_t seed = 1;
    std::vector<std::string> tiles{"BOS_F_4"};
    int block_rows = 3;
    int block_cols = 3;
    double street_width_m = 20.0;
    double footprint_m = 30.0;
    double height_min_m = 10.0;
    double height_max_m = 40.0;
    int antennas_per_block = 1;
    /// Antennas placed south of each tile, outside its boundary.
    int outside_antennas = 0;
    /// Adds one low "Wall" model in front of every block.
    bool walls = false;
    /// Antennas listed in both datasets; merging keeps one record each.
    int duplicate_antennas = 0;
    /// Source models with an invalid face index, skipped by the converter.
    int broken_models = 0;

    /// Throws ConfigError.
    void validate() const;
};

/// Reads the JSON form; absent keys keep their defaults, unknown keys are errors.
SynthSpec parse_synth_spec(std::string_view json);

/// Unit-interval draws from mt19937_64 that do not depend on the standard
/// library's distribution implementations.
class SynthRng {
public:
    explicit SynthRng(std::uint64_t seed);
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

/// Axis-aligned box without its base face: 8 vertices, 5 quads facing outward.
RawObjMesh make_box_obj(const std::string& name, const Vec3& min_corner, const Vec3& max_corner);

struct SynthResult {
    nlohmann::json ground_truth;
    std::vector<ConvertResult> tiles;
};

/// Writes <out>/source (OBJ files, catalog.csv per tile, both antenna
/// datasets), converts each tile, merges the antennas, writes one scene
/// descriptor per tile and <out>/ground_truth.json.
SynthResult generate_synthetic_dataset(const SynthSpec& spec, const std::filesystem::path& out,
                                       const SourceCrs& crs = {}, unsigned threads = 0);

} // namespace citytwin
