// SPDX-License-Identifier: Apache-2.0
#include "citytwin/error.hpp"
#include "citytwin/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace citytwin {

using nlohmann::json;

namespace {

constexpr double kDuplicateDistanceM = 0.5;
constexpr double kMeanEarthRadiusM = 6371008.8;

double ground_distance_m(const GeoCoord& a, const GeoCoord& b)
{
    // Equirectangular approximation; exact enough at the sub-meter scale it is used for.
    constexpr double deg = std::numbers::pi / 180.0;
    const double x = (b.lon - a.lon) * deg * std::cos(0.5 * (a.lat + b.lat) * deg);
    const double y = (b.lat - a.lat) * deg;
    return kMeanEarthRadiusM * std::hypot(x, y);
}

std::string scalar_text(const json& v)
{
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_null())
        return {};
    return v.dump();
}

std::vector<AntennaRecord> read_dataset(std::string_view geojson, AntennaSource source, const AntennaColumnMap& columns)
{
    json doc;
    try {
        doc = json::parse(geojson);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid antenna GeoJSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array())
        throw SchemaError("antenna dataset is not a FeatureCollection");

    std::vector<AntennaRecord> out;
    std::size_t index = 0;
    for (const json& f : doc["features"]) {
        const std::string label = std::string(to_string(source)) + " feature #" + std::to_string(index);
        const json& geom = f.contains("geometry") ? f["geometry"] : json();
        if (!geom.is_object() || geom.value("type", "") != "Point" || !geom.contains("coordinates") ||
            !geom["coordinates"].is_array() || geom["coordinates"].size() < 2 || !geom["coordinates"][0].is_number() ||
            !geom["coordinates"][1].is_number())
            throw SchemaError(label + " is not a Point");
        AntennaRecord r;
        r.source_dataset = source;
        r.location = {geom["coordinates"][0].get<double>(), geom["coordinates"][1].get<double>(), 0.0};
        try {
            r.location.validate();
        } catch (const InputError& e) {
            throw SchemaError(label + ": " + e.what());
        }
        const json props = f.contains("properties") && f["properties"].is_object() ? f["properties"] : json::object();
        for (const auto& [key, value] : props.items()) {
            const auto it = columns.columns.find(key);
            const std::string canonical = it == columns.columns.end() ? key : it->second;
            if (canonical == "antenna_id" && r.antenna_id.empty())
                r.antenna_id = scalar_text(value);
            else if (canonical == "pole_type" && r.pole_type.empty())
                r.pole_type = scalar_text(value);
            else if (canonical != "antenna_id" && canonical != "pole_type")
                r.attributes[canonical] = value;
        }
        if (r.antenna_id.empty())
            r.antenna_id = std::string(to_string(source)) + "-" + std::to_string(index);
        out.push_back(std::move(r));
        ++index;
    }
    return out;
}

} // namespace

std::string_view to_string(AntennaSource source)
{
    return source == AntennaSource::pre_2017 ? "pre-2017" : "post-2017";
}

AntennaColumnMap AntennaColumnMap::defaults()
{
    AntennaColumnMap m;
    m.columns = {
        {"antenna_id", "antenna_id"}, {"DAS_ID", "antenna_id"},       {"Request_ID", "antenna_id"},
        {"ID", "antenna_id"},         {"pole_type", "pole_type"},     {"Pole_Type", "pole_type"},
        {"New_Pole_Type", "pole_type"}, {"Street_Address", "address"}, {"Address", "address"},
    };
    return m;
}

std::vector<AntennaRecord> merge_antenna_datasets(std::string_view pre2017_geojson, std::string_view post2017_geojson,
                                                  const AntennaColumnMap& columns)
{
    std::vector<AntennaRecord> post = read_dataset(post2017_geojson, AntennaSource::post_2017, columns);
    std::vector<AntennaRecord> pre = read_dataset(pre2017_geojson, AntennaSource::pre_2017, columns);

    std::vector<AntennaRecord> merged = post;
    for (auto& r : pre) {
        const bool duplicate = std::any_of(post.begin(), post.end(), [&](const AntennaRecord& p) {
            return p.antenna_id == r.antenna_id && ground_distance_m(p.location, r.location) <= kDuplicateDistanceM;
        });
        if (!duplicate)
            merged.push_back(std::move(r));
    }
    std::stable_sort(merged.begin(), merged.end(), [](const AntennaRecord& a, const AntennaRecord& b) {
        return a.antenna_id < b.antenna_id;
    });
    return merged;
}

std::vector<AntennaRecord> parse_antennas(std::string_view geojson)
{
    json doc;
    try {
        doc = json::parse(geojson);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid antenna GeoJSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array())
        throw SchemaError("antenna file is not a FeatureCollection");
    std::vector<AntennaRecord> out;
    std::size_t index = 0;
    for (const json& f : doc["features"]) {
        const std::string label = "antenna feature #" + std::to_string(index++);
        const json& geom = f.contains("geometry") ? f["geometry"] : json();
        if (!geom.is_object() || geom.value("type", "") != "Point" || !geom.contains("coordinates") ||
            geom["coordinates"].size() < 2)
            throw SchemaError(label + " is not a Point");
        json props = f.contains("properties") && f["properties"].is_object() ? f["properties"] : json::object();
        if (!props.contains("antenna_id") || !props["antenna_id"].is_string())
            throw SchemaError(label + " is missing 'antenna_id'");
        AntennaRecord r;
        r.antenna_id = props["antenna_id"].get<std::string>();
        r.location = {geom["coordinates"][0].get<double>(), geom["coordinates"][1].get<double>(), 0.0};
        r.location.validate();
        r.pole_type = props.value("pole_type", "");
        r.source_dataset = props.value("source", "post-2017") == "pre-2017" ? AntennaSource::pre_2017
                                                                            : AntennaSource::post_2017;
        for (const char* key : {"antenna_id", "pole_type", "source"})
            props.erase(key);
        r.attributes = std::move(props);
        out.push_back(std::move(r));
    }
    return out;
}

std::string write_antennas(const std::vector<AntennaRecord>& antennas)
{
    json features = json::array();
    for (const auto& r : antennas) {
        json props = r.attributes.is_object() ? r.attributes : json::object();
        props["antenna_id"] = r.antenna_id;
        props["pole_type"] = r.pole_type;
        props["source"] = std::string(to_string(r.source_dataset));
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "Point"}, {"coordinates", json::array({r.location.lon, r.location.lat})}}},
                            {"properties", props}});
    }
    return json{{"type", "FeatureCollection"}, {"features", features}}.dump(1) + "\n";
}

} // namespace citytwin
