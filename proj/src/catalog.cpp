// SPDX-License-Identifier: Apache-2.0
#include "citytwin/error.hpp"
#include "citytwin/ingest.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace citytwin {

using nlohmann::json;

namespace {

constexpr std::array<LodCode, 9> kLodCodes = {{
    {0.0, "Polygon Footprint"},
    {1.0, "Extruded Polygon Footprint"},
    {1.5, "Massing model made from extruded roof prints when a structure with parts that have different heights"},
    {2.0, "3D roof detail, extruded to the ground along drip-line"},
    {3.0, "Model portrays undercuts where appropriate"},
    {3.25, "Architectural details indicated by materials or image textures"},
    {3.5, "Building model expresses the location of windows and entryways as 3D indentations"},
    {4.0, "Model is divided horizontally as individual stories"},
    {4.5, "Model divides interior spaces: rooms or zones"},
}};

json parse_json(std::string_view text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
}

const json& features_of(const json& doc)
{
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array())
        throw SchemaError("expected a GeoJSON FeatureCollection");
    return doc["features"];
}

GeoCoord point_of(const json& feature, const std::string& label)
{
    const json& geom = feature.contains("geometry") ? feature["geometry"] : json();
    if (!geom.is_object() || geom.value("type", "") != "Point" || !geom.contains("coordinates") ||
        !geom["coordinates"].is_array() || geom["coordinates"].size() < 2)
        throw SchemaError("feature " + label + " is not a Point");
    const auto& c = geom["coordinates"];
    if (!c[0].is_number() || !c[1].is_number())
        throw SchemaError("feature " + label + " has non-numeric coordinates");
    GeoCoord g{c[0].get<double>(), c[1].get<double>(), c.size() > 2 && c[2].is_number() ? c[2].get<double>() : 0.0};
    try {
        g.validate();
    } catch (const InputError& e) {
        throw SchemaError("feature " + label + ": " + e.what());
    }
    return g;
}

std::string feature_label(const json& feature, std::size_t index, const char* id_key)
{
    std::string label = "#" + std::to_string(index);
    if (feature.contains("properties") && feature["properties"].is_object()) {
        const auto& p = feature["properties"];
        if (p.contains(id_key) && p[id_key].is_string())
            label += " (" + p[id_key].get<std::string>() + ")";
    }
    return label;
}

json point_geometry(const GeoCoord& g)
{
    return {{"type", "Point"}, {"coordinates", json::array({g.lon, g.lat})}};
}

} // namespace

std::span<const LodCode> lod_codes() { return kLodCodes; }

LodCode lod_from_value(double code)
{
    for (const auto& l : kLodCodes)
        if (std::fabs(l.code - code) < 1e-9)
            return l;
    throw SchemaError("unknown LOD code " + std::to_string(code));
}

std::vector<ModelRecord> parse_catalog(std::string_view geojson)
{
    const json doc = parse_json(geojson);
    std::vector<ModelRecord> out;
    std::size_t index = 0;
    for (const json& f : features_of(doc)) {
        const std::string label = feature_label(f, index++, "model_id");
        if (!f.contains("properties") || !f["properties"].is_object())
            throw SchemaError("feature " + label + " has no properties");
        json props = f["properties"];
        ModelRecord r;
        if (!props.contains("model_id") || !props["model_id"].is_string())
            throw SchemaError("feature " + label + " is missing 'model_id'");
        if (!props.contains("type") || !props["type"].is_string())
            throw SchemaError("feature " + label + " is missing 'type'");
        r.model_id = props["model_id"].get<std::string>();
        r.model_type = props["type"].get<std::string>();
        r.centroid = point_of(f, label);
        r.lod = lod_from_value(props.contains("lod") && props["lod"].is_number() ? props["lod"].get<double>() : 0.0);
        if (props.contains("mesh") && props["mesh"].is_string())
            r.mesh_path = props["mesh"].get<std::string>();
        if (props.contains("n_triangles") && props["n_triangles"].is_number_unsigned())
            r.triangle_count = props["n_triangles"].get<std::size_t>();
        for (const char* key : {"model_id", "type", "lod", "mesh", "n_triangles"})
            props.erase(key);
        r.attributes = std::move(props);
        out.push_back(std::move(r));
    }
    return out;
}

std::string write_catalog(const std::vector<ModelRecord>& models)
{
    json features = json::array();
    for (const auto& r : models) {
        json props = r.attributes.is_object() ? r.attributes : json::object();
        props["model_id"] = r.model_id;
        props["type"] = r.model_type;
        props["lod"] = r.lod.code;
        props["mesh"] = r.mesh_path;
        props["n_triangles"] = r.triangle_count;
        features.push_back({{"type", "Feature"}, {"geometry", point_geometry(r.centroid)}, {"properties", props}});
    }
    return json{{"type", "FeatureCollection"}, {"features", features}}.dump(1) + "\n";
}

TileInfo parse_tileinfo(std::string_view geojson)
{
    const json doc = parse_json(geojson);
    const json& features = features_of(doc);
    if (features.size() != 1)
        throw SchemaError("tileinfo must hold exactly one feature");
    const json& f = features[0];
    const json& geom = f.contains("geometry") ? f["geometry"] : json();
    if (!geom.is_object() || geom.value("type", "") != "Polygon" || !geom.contains("coordinates") ||
        !geom["coordinates"].is_array() || geom["coordinates"].empty())
        throw SchemaError("tileinfo feature is not a Polygon");
    TileInfo tile;
    for (const json& c : geom["coordinates"][0]) {
        if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
            throw SchemaError("tileinfo polygon has malformed coordinates");
        GeoCoord g{c[0].get<double>(), c[1].get<double>(), 0.0};
        g.validate();
        tile.boundary.push_back(g);
    }
    if (tile.boundary.size() < 4 || !(tile.boundary.front() == tile.boundary.back()))
        throw SchemaError("tileinfo polygon ring must be closed with at least three corners");

    const json props = f.contains("properties") && f["properties"].is_object() ? f["properties"] : json::object();
    if (!props.contains("name") || !props["name"].is_string())
        throw SchemaError("tileinfo is missing 'name'");
    tile.name = props["name"].get<std::string>();
    if (props.contains("center_lon") && props.contains("center_lat")) {
        tile.center = {props["center_lon"].get<double>(), props["center_lat"].get<double>(), 0.0};
    } else {
        for (std::size_t i = 0; i + 1 < tile.boundary.size(); ++i) {
            tile.center.lon += tile.boundary[i].lon;
            tile.center.lat += tile.boundary[i].lat;
        }
        tile.center.lon /= static_cast<double>(tile.boundary.size() - 1);
        tile.center.lat /= static_cast<double>(tile.boundary.size() - 1);
    }
    tile.center.validate();
    tile.side_m = props.contains("side_m") && props["side_m"].is_number() ? props["side_m"].get<double>() : 0.0;
    return tile;
}

std::string write_tileinfo(const TileInfo& tile)
{
    json ring = json::array();
    for (const auto& g : tile.boundary)
        ring.push_back(json::array({g.lon, g.lat}));
    json props = {{"name", tile.name},
                  {"center_lon", tile.center.lon},
                  {"center_lat", tile.center.lat},
                  {"side_m", tile.side_m}};
    json feature = {{"type", "Feature"},
                    {"geometry", {{"type", "Polygon"}, {"coordinates", json::array({ring})}}},
                    {"properties", props}};
    return json{{"type", "FeatureCollection"}, {"features", json::array({feature})}}.dump(1) + "\n";
}

std::optional<TileIndex> parse_tile_name(std::string_view name)
{
    // BOS_<L>_<N>, L in A..O, N in 1..13
    if (name.size() < 7 || name.substr(0, 4) != "BOS_" || name[5] != '_')
        return std::nullopt;
    const char letter = name[4];
    if (letter < 'A' || letter > 'O')
        return std::nullopt;
    const std::string_view digits = name.substr(6);
    int number = 0;
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), number);
    if (res.ec != std::errc() || res.ptr != digits.data() + digits.size() || number < 1 || number > 13)
        return std::nullopt;
    return TileIndex{letter, number};
}

ProjectedCoord tile_south_west(const TileIndex& tile, const SourceCrs& crs)
{
    const double side = meters_to_length(length_to_meters(kTileSideFeet, LengthUnit::us_survey_foot), crs.lcc.unit);
    const double column = static_cast<double>(tile.letter - 'A') + 1.0;
    const double row = 14.0 - static_cast<double>(tile.number);
    return crs.custom_origin + ProjectedCoord(side * column, side * row, crs.lcc.unit);
}

TileInfo make_tileinfo(std::string_view name, const SourceCrs& crs)
{
    const auto index = parse_tile_name(name);
    if (!index)
        throw InputError("'" + std::string(name) + "' is not a BOS_<L>_<N> tile name");
    const LambertConformalConic lcc(crs.lcc);
    const double side = meters_to_length(length_to_meters(kTileSideFeet, LengthUnit::us_survey_foot), crs.lcc.unit);
    const ProjectedCoord sw = tile_south_west(*index, crs);
    const LengthUnit u = crs.lcc.unit;

    TileInfo tile;
    tile.name = std::string(name);
    const std::array<std::pair<double, double>, 5> corners = {{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}};
    for (const auto& [cx, cy] : corners)
        tile.boundary.push_back(lcc.inverse(sw + ProjectedCoord(cx * side, cy * side, u)));
    tile.center = lcc.inverse(sw + ProjectedCoord(0.5 * side, 0.5 * side, u));
    tile.side_m = length_to_meters(side, u);
    return tile;
}

} // namespace citytwin
