// SPDX-License-Identifier: Apache-2.0
#include "citytwin/synth.hpp"

#include "citytwin/error.hpp"
#include "citytwin/scene.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace citytwin {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 3> kPoleTypes = {"utility_pole", "street_light", "traffic_signal"};
/// Distance of the outside antennas south of their tile, meters.
constexpr double kOutsideOffsetM = 100.0;

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

json point_feature(const GeoCoord& g, json properties)
{
    return {{"type", "Feature"},
            {"geometry", {{"type", "Point"}, {"coordinates", json::array({g.lon, g.lat})}}},
            {"properties", std::move(properties)}};
}

struct SynthAntenna {
    std::string id;
    GeoCoord location;
    std::string pole_type;
    std::string tile;
    bool inside = true;
    bool post2017 = true;
    bool duplicated = false;
};

} // namespace

void SynthSpec::validate() const
{
    if (tiles.empty())
        throw ConfigError("synth: at least one tile is required");
    std::set<std::string> seen;
    for (const auto& t : tiles) {
        if (!parse_tile_name(t))
            throw ConfigError("synth: invalid tile name '" + t + "'");
        if (!seen.insert(t).second)
            throw ConfigError("synth: duplicate tile '" + t + "'");
    }
    if (block_rows < 1 || block_cols < 1)
        throw ConfigError("synth: blocks must be at least 1x1");
    if (!(street_width_m > 0.0) || !(footprint_m > 0.0) || !(height_min_m > 0.0) || !(height_max_m >= height_min_m))
        throw ConfigError("synth: street width, footprint and heights must be positive with min <= max");
    if (antennas_per_block < 0 || outside_antennas < 0 || duplicate_antennas < 0 || broken_models < 0)
        throw ConfigError("synth: counts must be non-negative");
    const double side = length_to_meters(kTileSideFeet, LengthUnit::us_survey_foot);
    const double pitch = footprint_m + street_width_m;
    if ((std::max(block_rows, block_cols) + 1) * pitch > side)
        throw ConfigError("synth: block grid does not fit in one tile");
    if (duplicate_antennas > block_rows * block_cols * antennas_per_block)
        throw ConfigError("synth: more duplicate antennas than antennas");
}

SynthSpec parse_synth_spec(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("synth spec: ") + e.what());
    }
    if (!j.is_object())
        throw ConfigError("synth spec must be a JSON object");
    SynthSpec s;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "seed")
                s.seed = v.get<std::uint64_t>();
            else if (key == "tile")
                s.tiles = {v.get<std::string>()};
            else if (key == "tiles")
                s.tiles = v.get<std::vector<std::string>>();
            else if (key == "blocks") {
                s.block_rows = v.at("rows").get<int>();
                s.block_cols = v.at("cols").get<int>();
            } else if (key == "street_width_m")
                s.street_width_m = v.get<double>();
            else if (key == "footprint_m")
                s.footprint_m = v.get<double>();
            else if (key == "height_m") {
                s.height_min_m = v.at("min").get<double>();
                s.height_max_m = v.at("max").get<double>();
            } else if (key == "antennas_per_block")
                s.antennas_per_block = v.get<int>();
            else if (key == "outside_antennas")
                s.outside_antennas = v.get<int>();
            else if (key == "walls")
                s.walls = v.get<bool>();
            else if (key == "duplicate_antennas")
                s.duplicate_antennas = v.get<int>();
            else if (key == "broken_models")
                s.broken_models = v.get<int>();
            else
                throw ConfigError("synth spec: unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synth spec: ") + e.what());
    }
    s.validate();
    return s;
}

SynthRng::SynthRng(std::uint64_t seed) : engine_(seed) {}

double SynthRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

RawObjMesh make_box_obj(const std::string& name, const Vec3& lo, const Vec3& hi)
{
    RawObjMesh m;
    m.name = name;
    m.vertices = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
                  {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
    // Counter-clockwise seen from outside.
    m.faces = {{0, 1, 5, 4}, {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7}, {4, 5, 6, 7}};
    return m;
}

SynthResult generate_synthetic_dataset(const SynthSpec& spec, const std::filesystem::path& out, const SourceCrs& crs,
                                       unsigned threads)
{
    spec.validate();
    crs.validate();
    namespace fs = std::filesystem;
    SynthRng rng(spec.seed);
    const LambertConformalConic lcc(crs.lcc);
    const ProjectedCoord origin = crs.custom_origin.to(LengthUnit::us_survey_foot);
    const double pitch = spec.footprint_m + spec.street_width_m;
    const double half_tile_ft = 0.5 * kTileSideFeet;
    auto ft = [](double m) { return meters_to_length(m, LengthUnit::us_survey_foot); };

    json truth;
    truth["seed"] = spec.seed;
    truth["tiles"] = json::array();
    truth["models"] = json::array();
    std::vector<SynthAntenna> antennas;
    std::size_t total_triangles = 0;
    std::size_t antenna_counter = 0;

    const fs::path source_root = out / "source";
    std::vector<std::vector<SourceModel>> catalogs;

    for (const auto& tile : spec.tiles) {
        const ProjectedCoord sw = tile_south_west(*parse_tile_name(tile), crs).to(LengthUnit::us_survey_foot);
        const double ce = sw.easting() + half_tile_ft;
        const double cn = sw.northing() + half_tile_ft;
        // Source coordinates are relative to the custom origin, in feet.
        auto to_source = [&](double x_m, double y_m, double z_m) {
            return Vec3{ce - origin.easting() + ft(x_m), cn - origin.northing() + ft(y_m), ft(z_m)};
        };
        auto to_geo = [&](double x_m, double y_m) {
            return lcc.inverse(ProjectedCoord(ce + ft(x_m), cn + ft(y_m), LengthUnit::us_survey_foot));
        };
        const fs::path dir = source_root / tile;
        fs::create_directories(dir);
        std::string csv = "model_id,type,lod,obj,block\n";
        std::vector<SourceModel> catalog;

        auto add_model = [&](const std::string& id, const std::string& type, double lod, const RawObjMesh& obj,
                             const std::string& block, const Vec3& center_m, double height_m, bool valid) {
            const std::string file = id + ".obj";
            write_file(dir / file, write_obj(obj));
            csv += csv_field(id) + "," + type + "," + (lod == 1.0 ? "1" : "2") + "," + csv_field(file) + "," +
                   csv_field(block) + "\n";
            catalog.push_back({id, type, lod, file, {{"block", block}}});
            if (!valid)
                return;
            const GeoCoord g = to_geo(center_m.x, center_m.y);
            truth["models"].push_back({{"model_id", id},
                                       {"tile", tile},
                                       {"type", type},
                                       {"triangles", 10},
                                       {"center_m", {center_m.x, center_m.y}},
                                       {"centroid", {g.lon, g.lat}},
                                       {"height_m", height_m}});
            total_triangles += 10;
        };

        for (int r = 0; r < spec.block_rows; ++r) {
            for (int c = 0; c < spec.block_cols; ++c) {
                const double cx = (c - 0.5 * (spec.block_cols - 1)) * pitch;
                const double cy = (r - 0.5 * (spec.block_rows - 1)) * pitch;
                const double h = rng.uniform(spec.height_min_m, spec.height_max_m);
                const double f = 0.5 * spec.footprint_m;
                char block[32];
                std::snprintf(block, sizeof block, "R%02dC%02d", r, c);
                const std::string base = tile + "_" + block;
                add_model(base + "_B", "Building", 2.0,
                          make_box_obj(base + "_B", to_source(cx - f, cy - f, 0.0), to_source(cx + f, cy + f, h)),
                          block, {cx, cy, 0.0}, h, true);
                if (spec.walls) {
                    const double wy = cy - f - 0.25 * spec.street_width_m;
                    add_model(base + "_W", "Wall", 1.0,
                              make_box_obj(base + "_W", to_source(cx - f, wy - 0.15, 0.0),
                                           to_source(cx + f, wy + 0.15, 2.0)),
                              block, {cx, wy, 0.0}, 2.0, true);
                }
                for (int k = 0; k < spec.antennas_per_block; ++k) {
                    // Street corner south-west of the block, jittered within the street.
                    const double ax = cx - 0.5 * pitch + rng.uniform(-0.25, 0.25) * spec.street_width_m;
                    const double ay = cy - 0.5 * pitch + rng.uniform(-0.25, 0.25) * spec.street_width_m;
                    const std::size_t pole = static_cast<std::size_t>(rng.uniform() * kPoleTypes.size());
                    char id[64];
                    std::snprintf(id, sizeof id, "ANT-%05zu", ++antenna_counter);
                    antennas.push_back({id, to_geo(ax, ay), kPoleTypes[pole], tile, true,
                                        antennas.size() % 2 == 0, false});
                }
            }
        }
        for (int b = 0; b < spec.broken_models; ++b) {
            RawObjMesh broken = make_box_obj(tile + "_BROKEN" + std::to_string(b), to_source(0, 0, 0),
                                             to_source(1, 1, 1));
            broken.faces.push_back({0, 1, 99});
            add_model(broken.name, "Building", 1.0, broken, "none", {}, 0.0, false);
        }
        const double south_m = -0.5 * length_to_meters(kTileSideFeet, LengthUnit::us_survey_foot) - kOutsideOffsetM;
        for (int k = 0; k < spec.outside_antennas; ++k) {
            char id[64];
            std::snprintf(id, sizeof id, "ANT-%05zu", ++antenna_counter);
            antennas.push_back({id, to_geo(10.0 * k, south_m), kPoleTypes[0], "", false, k % 2 == 0, false});
        }
        write_file(dir / "catalog.csv", csv);
        catalogs.push_back(std::move(catalog));

        const GeoCoord center = to_geo(0.0, 0.0);
        truth["tiles"].push_back({{"name", tile}, {"center", {center.lon, center.lat}}});
    }

    for (int d = 0; d < spec.duplicate_antennas; ++d)
        antennas[static_cast<std::size_t>(d)].duplicated = true;

    json pre = {{"type", "FeatureCollection"}, {"features", json::array()}};
    json post = pre;
    for (const auto& a : antennas) {
        const json pre_props = {{"DAS_ID", a.id}, {"Pole_Type", a.pole_type}, {"Street_Address", "synthetic"}};
        const json post_props = {{"Request_ID", a.id}, {"New_Pole_Type", a.pole_type}};
        if (a.post2017 || a.duplicated)
            post["features"].push_back(point_feature(a.location, post_props));
        if (!a.post2017 || a.duplicated)
            pre["features"].push_back(point_feature(a.location, pre_props));
    }
    const std::string pre_text = pre.dump(1) + "\n";
    const std::string post_text = post.dump(1) + "\n";
    write_file(source_root / "antennas_pre2017.geojson", pre_text);
    write_file(source_root / "antennas_post2017.geojson", post_text);

    SynthResult result;
    for (std::size_t t = 0; t < spec.tiles.size(); ++t)
        result.tiles.push_back(convert_tile(source_root / spec.tiles[t], catalogs[t], crs, spec.tiles[t], out, threads));

    const auto merged = merge_antenna_datasets(pre_text, post_text);
    fs::create_directories(out / kAntennasDir);
    write_file(out / kAntennasDir / kAntennasFile, write_antennas(merged));

    for (const auto& tile : spec.tiles) {
        const Scene scene = load_tile_scene(out, tile, crs.lcc);
        write_scene_descriptor(scene, out / kModelsDir / (tile + ".xml"));
    }

    truth["antennas"] = json::array();
    for (const auto& a : antennas)
        truth["antennas"].push_back({{"antenna_id", a.id},
                                     {"location", {a.location.lon, a.location.lat}},
                                     {"pole_type", a.pole_type},
                                     {"tile", a.inside ? json(a.tile) : json(nullptr)},
                                     {"source", a.duplicated ? "both" : (a.post2017 ? "post-2017" : "pre-2017")}});
    truth["total_triangles"] = total_triangles;
    truth["broken_models"] = spec.broken_models * static_cast<int>(spec.tiles.size());
    write_file(out / "ground_truth.json", truth.dump(1) + "\n");
    result.ground_truth = std::move(truth);
    return result;
}

} // namespace citytwin
