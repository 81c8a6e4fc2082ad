// SPDX-License-Identifier: Apache-2.0
#include "citytwin/error.hpp"
#include "citytwin/ingest.hpp"
#include "citytwin/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>

namespace citytwin {

using nlohmann::json;

namespace {

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_record(std::string_view line, std::size_t line_no)
{
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted)
        throw ParseError("unterminated quoted CSV field", line_no);
    fields.push_back(std::move(field));
    return fields;
}

double parse_lod(std::string_view text, const std::string& where)
{
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw SchemaError(where + ": malformed lod '" + std::string(text) + "'");
    lod_from_value(v);
    return v;
}

} // namespace

std::vector<SourceModel> parse_source_catalog_csv(std::string_view csv)
{
    std::vector<std::string> header;
    std::vector<SourceModel> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    int col_id = -1, col_type = -1, col_lod = -1, col_obj = -1;
    while (pos < csv.size()) {
        std::size_t end = csv.find('\n', pos);
        if (end == std::string_view::npos)
            end = csv.size();
        std::string_view line = csv.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;
        auto fields = split_csv_record(line, line_no);
        if (header.empty()) {
            header = std::move(fields);
            for (std::size_t i = 0; i < header.size(); ++i) {
                const int idx = static_cast<int>(i);
                if (header[i] == "model_id")
                    col_id = idx;
                else if (header[i] == "type")
                    col_type = idx;
                else if (header[i] == "lod")
                    col_lod = idx;
                else if (header[i] == "obj")
                    col_obj = idx;
            }
            for (auto [col, name] : {std::pair{col_id, "model_id"}, {col_type, "type"}, {col_lod, "lod"},
                                     {col_obj, "obj"}})
                if (col < 0)
                    throw SchemaError(std::string("source catalog lacks required column '") + name + "'");
            continue;
        }
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        SourceModel m;
        m.model_id = fields[col_id];
        m.model_type = fields[col_type];
        m.obj_file = fields[col_obj];
        if (m.model_id.empty())
            throw SchemaError("row at line " + std::to_string(line_no) + " has an empty model_id");
        m.lod = parse_lod(fields[col_lod], "model " + m.model_id);
        for (std::size_t i = 0; i < header.size(); ++i) {
            const int idx = static_cast<int>(i);
            if (idx != col_id && idx != col_type && idx != col_lod && idx != col_obj)
                m.attributes[header[i]] = fields[i];
        }
        out.push_back(std::move(m));
    }
    if (header.empty())
        throw SchemaError("source catalog has no header row");
    return out;
}

std::vector<SourceModel> parse_source_catalog_geojson(std::string_view geojson)
{
    json doc;
    try {
        doc = json::parse(geojson);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array())
        throw SchemaError("source catalog is not a FeatureCollection");
    std::vector<SourceModel> out;
    std::size_t index = 0;
    for (const json& f : doc["features"]) {
        const std::string label = "feature #" + std::to_string(index++);
        if (!f.contains("properties") || !f["properties"].is_object())
            throw SchemaError(label + " has no properties");
        json props = f["properties"];
        for (const char* key : {"model_id", "type", "obj"})
            if (!props.contains(key) || !props[key].is_string())
                throw SchemaError(label + " is missing '" + key + "'");
        SourceModel m;
        m.model_id = props["model_id"].get<std::string>();
        m.model_type = props["type"].get<std::string>();
        m.obj_file = props["obj"].get<std::string>();
        if (props.contains("lod") && props["lod"].is_number())
            m.lod = lod_from_value(props["lod"].get<double>()).code;
        else if (props.contains("lod") && props["lod"].is_string())
            m.lod = parse_lod(props["lod"].get<std::string>(), label);
        for (const char* key : {"model_id", "type", "obj", "lod"})
            props.erase(key);
        m.attributes = std::move(props);
        out.push_back(std::move(m));
    }
    return out;
}

ConvertedModel convert_model(const RawObjMesh& raw, const SourceCrs& crs)
{
    crs.validate();
    if (raw.vertices.empty())
        throw InputError("mesh has no vertices");
    const LengthUnit unit = crs.lcc.unit;
    const double origin_e = length_to_meters(crs.custom_origin.easting(), unit);
    const double origin_n = length_to_meters(crs.custom_origin.northing(), unit);

    // State-plane position of every vertex in meters.
    std::vector<Vec3> metric(raw.vertices.size());
    double sum_x = 0.0;
    double sum_y = 0.0;
    for (std::size_t i = 0; i < raw.vertices.size(); ++i) {
        const Vec3& v = raw.vertices[i];
        if (!is_finite(v))
            throw InputError("vertex " + std::to_string(i) + " is not finite");
        metric[i] = {origin_e + length_to_meters(v.x, unit), origin_n + length_to_meters(v.y, unit),
                     length_to_meters(v.z, unit)};
        sum_x += metric[i].x;
        sum_y += metric[i].y;
    }
    const double n = static_cast<double>(metric.size());
    const double cx = sum_x / n;
    const double cy = sum_y / n;

    ConvertedModel out{TriangleMesh{}, ProjectedCoord(meters_to_length(cx, unit), meters_to_length(cy, unit), unit),
                       GeoCoord{}};
    out.mesh.vertices.reserve(metric.size());
    for (const Vec3& p : metric)
        out.mesh.vertices.push_back(
            {static_cast<float>(p.x - cx), static_cast<float>(p.y - cy), static_cast<float>(p.z)});
    for (const auto& face : raw.faces) {
        if (face.size() < 3)
            throw InputError("face with fewer than three vertices");
        for (const Triangle& t : triangulate_polygon(metric, face))
            out.mesh.triangles.push_back(t);
    }
    out.centroid_geo = LambertConformalConic(crs.lcc).inverse(out.centroid);
    return out;
}

ConvertResult convert_tile(const std::filesystem::path& obj_dir, const std::vector<SourceModel>& catalog,
                           const SourceCrs& crs, const std::string& tile_name, const std::filesystem::path& out_root,
                           unsigned threads)
{
    if (catalog.empty())
        throw InputError("source catalog for " + tile_name + " lists no models");
    crs.validate();
    const std::filesystem::path models_dir = out_root / kModelsDir;
    const std::filesystem::path meshes_dir = models_dir / kMeshesDir;
    std::filesystem::create_directories(meshes_dir);

    struct Slot {
        std::optional<ModelRecord> record;
        std::optional<ProjectedCoord> centroid;
        std::string skip_reason;
    };
    std::vector<Slot> slots(catalog.size());
    parallel_for(catalog.size(), threads, [&](std::size_t i) {
        const SourceModel& src = catalog[i];
        Slot& slot = slots[i];
        try {
            const RawObjMesh raw = parse_obj(read_file(obj_dir / src.obj_file));
            ConvertedModel cm = convert_model(raw, crs);
            const ValidationReport report = validate(cm.mesh);
            if (cm.mesh.triangles.empty())
                throw InputError("mesh has no faces");
            if (!report.clean())
                throw InputError("mesh fails validation with " + std::to_string(report.defects.size()) + " defect(s)");
            const std::string mesh_rel = std::string(kMeshesDir) + "/" + src.model_id + ".ply";
            save_ply_file(cm.mesh, models_dir / mesh_rel);
            ModelRecord r;
            r.model_id = src.model_id;
            r.centroid = cm.centroid_geo;
            r.model_type = src.model_type;
            r.lod = lod_from_value(src.lod);
            r.mesh_path = mesh_rel;
            r.triangle_count = cm.mesh.triangles.size();
            r.attributes = src.attributes;
            slot.record = std::move(r);
            slot.centroid = cm.centroid;
        } catch (const Error& e) {
            slot.skip_reason = e.what();
        }
    });

    ConvertResult result;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].record) {
            result.total_triangles += slots[i].record->triangle_count;
            result.models.push_back(std::move(*slots[i].record));
        } else {
            result.skipped.push_back({catalog[i].model_id, slots[i].skip_reason});
        }
    }

    if (parse_tile_name(tile_name)) {
        result.tile = make_tileinfo(tile_name, crs);
    } else {
        // Custom tile: the projected bounding square of the converted centroids.
        double lo_e = INFINITY, lo_n = INFINITY, hi_e = -INFINITY, hi_n = -INFINITY;
        for (const auto& s : slots)
            if (s.centroid) {
                lo_e = std::min(lo_e, s.centroid->easting());
                hi_e = std::max(hi_e, s.centroid->easting());
                lo_n = std::min(lo_n, s.centroid->northing());
                hi_n = std::max(hi_n, s.centroid->northing());
            }
        if (!std::isfinite(lo_e))
            throw InputError("no model of " + tile_name + " could be converted");
        const double side = std::max({hi_e - lo_e, hi_n - lo_n, 1.0});
        const double ce = 0.5 * (lo_e + hi_e);
        const double cn = 0.5 * (lo_n + hi_n);
        const LambertConformalConic lcc(crs.lcc);
        const LengthUnit u = crs.lcc.unit;
        result.tile.name = tile_name;
        for (auto [sx, sy] : {std::pair{-1, -1}, {1, -1}, {1, 1}, {-1, 1}, {-1, -1}})
            result.tile.boundary.push_back(lcc.inverse(ProjectedCoord(ce + sx * side / 2, cn + sy * side / 2, u)));
        result.tile.center = lcc.inverse(ProjectedCoord(ce, cn, u));
        result.tile.side_m = length_to_meters(side, u);
    }

    write_file(models_dir / (tile_name + ".geojson"), write_catalog(result.models));
    write_file(models_dir / (tile_name + "_tileinfo.geojson"), write_tileinfo(result.tile));
    return result;
}

} // namespace citytwin
