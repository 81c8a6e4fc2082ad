// SPDX-License-Identifier: Apache-2.0
//
// Source-format readers/writers and the tile conversion pipeline.
//
// Dataset layout produced by the converter:
//
//   <root>/boston3d/meshes/<model_id>.ply
//   <root>/boston3d/<tile>.geojson            model catalog
//   <root>/boston3d/<tile>_tileinfo.geojson   tile boundary and center
//   <root>/boston3d/<tile>.xml                scene descriptor
//   <root>/boston_antennas/antennas.geojson   merged antenna records
#pragma once

#include "citytwin/geodesy.hpp"
#include "citytwin/mesh.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace citytwin {

inline constexpr std::string_view kModelsDir = "boston3d";
inline constexpr std::string_view kMeshesDir = "meshes";
inline constexpr std::string_view kAntennasDir = "boston_antennas";
inline constexpr std::string_view kAntennasFile = "antennas.geojson";

// ---------------------------------------------------------------------------
// OBJ

struct RawObjMesh {
    std::string name;
    std::vector<Vec3> vertices;
    std::vector<std::vector<std::uint32_t>> faces;
};

/// Reads `v` and `f` records; `vt`, `vn`, groups and materials are ignored.
/// Indices become 0-based (negative indices are relative to the end).
RawObjMesh parse_obj(std::string_view text);
std::string write_obj(const RawObjMesh& mesh);

/// Splits polygon faces into triangles: fan from the first vertex, or ear
/// clipping when the fan would invert a triangle.
std::vector<Triangle> triangulate_polygon(const std::vector<Vec3>& vertices,
                                          const std::vector<std::uint32_t>& polygon);

// ---------------------------------------------------------------------------
// PLY (binary little endian, float32 positions, int32 indices)

std::string write_ply(const TriangleMesh& mesh);
TriangleMesh read_ply(std::string_view bytes);

TriangleMesh load_ply_file(const std::filesystem::path& path);
void save_ply_file(const TriangleMesh& mesh, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Catalogs

struct LodCode {
    double code = 0.0;
    std::string_view description;
};

/// The nine level-of-detail codes of the citySchema format.
std::span<const LodCode> lod_codes();
/// Throws SchemaError for values outside the table.
LodCode lod_from_value(double code);

struct ModelRecord {
    std::string model_id;
    GeoCoord centroid;
    /// "Wall", "Building", "Ground" or any other label found in the source.
    std::string model_type;
    LodCode lod;
    std::string mesh_path;
    std::size_t triangle_count = 0;
    /// Source properties not covered by the fields above.
    nlohmann::json attributes = nlohmann::json::object();
};

std::vector<ModelRecord> parse_catalog(std::string_view geojson);
std::string write_catalog(const std::vector<ModelRecord>& models);

struct TileInfo {
    std::string name;
    /// Closed ring (first == last), counter-clockwise.
    std::vector<GeoCoord> boundary;
    GeoCoord center;
    double side_m = 0.0;
};

TileInfo parse_tileinfo(std::string_view geojson);
std::string write_tileinfo(const TileInfo& tile);

/// Side of a standard tile: 5000 US survey feet.
inline constexpr double kTileSideFeet = 5000.0;

/// Column letter and row number of a `BOS_<L>_<N>` tile name.
struct TileIndex {
    char letter = 'A';
    int number = 1;
};

std::optional<TileIndex> parse_tile_name(std::string_view name);

/// South-west corner of a standard tile in the source state plane. The tile
/// grid starts one tile east and one tile north of the custom origin; column A
/// is westmost and row numbers increase southwards.
ProjectedCoord tile_south_west(const TileIndex& tile, const SourceCrs& crs);

/// Boundary and center of a standard tile, georeferenced through the LCC.
TileInfo make_tileinfo(std::string_view name, const SourceCrs& crs);

// ---------------------------------------------------------------------------
// Antennas

enum class AntennaSource { pre_2017, post_2017 };

std::string_view to_string(AntennaSource source);

struct AntennaRecord {
    std::string antenna_id;
    /// Two-dimensional location (alt = 0).
    GeoCoord location;
    std::string pole_type;
    AntennaSource source_dataset = AntennaSource::post_2017;
    nlohmann::json attributes = nlohmann::json::object();
};

/// Maps heterogeneous source property names onto canonical fields
/// ("antenna_id", "pole_type"). Matching is exact on the property name.
struct AntennaColumnMap {
    std::map<std::string, std::string> columns;

    static AntennaColumnMap defaults();
};

/// One record per input point; records with equal id within 0.5 m of each
/// other are collapsed, keeping the post-2017 one. Output is sorted by id.
std::vector<AntennaRecord> merge_antenna_datasets(std::string_view pre2017_geojson, std::string_view post2017_geojson,
                                                  const AntennaColumnMap& columns = AntennaColumnMap::defaults());

std::vector<AntennaRecord> parse_antennas(std::string_view geojson);
std::string write_antennas(const std::vector<AntennaRecord>& antennas);

// ---------------------------------------------------------------------------
// Conversion

/// One row of the source model catalog.
struct SourceModel {
    std::string model_id;
    std::string model_type;
    double lod = 1.0;
    /// OBJ file name relative to the OBJ directory.
    std::string obj_file;
    nlohmann::json attributes = nlohmann::json::object();
};

/// CSV with a header row; required columns: model_id, type, lod, obj.
std::vector<SourceModel> parse_source_catalog_csv(std::string_view csv);
/// GeoJSON FeatureCollection whose feature properties carry the same columns.
std::vector<SourceModel> parse_source_catalog_geojson(std::string_view geojson);

struct ConvertedModel {
    /// Metric mesh with its footprint centroid at the (x, y) origin.
    TriangleMesh mesh;
    /// Footprint centroid in the state plane (source unit).
    ProjectedCoord centroid;
    GeoCoord centroid_geo;
};

/// Steps (1)-(6) of the conversion on an in-memory mesh: add the custom origin,
/// convert to meters, triangulate, compute the footprint centroid (mean of
/// vertex x, y), recenter x/y (z untouched) and georeference the centroid.
ConvertedModel convert_model(const RawObjMesh& raw, const SourceCrs& crs);

struct SkippedModel {
    std::string model_id;
    std::string reason;
};

struct ConvertResult {
    TileInfo tile;
    std::vector<ModelRecord> models;
    std::vector<SkippedModel> skipped;
    std::size_t total_triangles = 0;
};

/// Converts every catalog row of one tile and writes meshes, catalog and
/// tileinfo under `out_root`. Broken models are skipped and reported.
ConvertResult convert_tile(const std::filesystem::path& obj_dir, const std::vector<SourceModel>& catalog,
                           const SourceCrs& crs, const std::string& tile_name, const std::filesystem::path& out_root,
                           unsigned threads = 0);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

} // namespace citytwin
