// SPDX-License-Identifier: Apache-2.0
#include "citytwin/error.hpp"
#include "citytwin/scene.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

namespace citytwin {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

constexpr std::string_view kVersion = "1.0";

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void put_attr(pt::ptree& node, const std::string& key, const std::string& value)
{
    node.put("<xmlattr>." + key, value);
}

std::string get_attr(const pt::ptree& node, const std::string& key, const std::string& where)
{
    const auto v = node.get_optional<std::string>("<xmlattr>." + key);
    if (!v)
        throw SchemaError(where + " lacks attribute '" + key + "'");
    return *v;
}

double get_num(const pt::ptree& node, const std::string& key, const std::string& where)
{
    const std::string s = get_attr(node, key, where);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw SchemaError(where + ": attribute '" + key + "' is not a number");
    return v;
}

pt::ptree vec_node(const Vec3& v)
{
    pt::ptree n;
    put_attr(n, "x", num(v.x));
    put_attr(n, "y", num(v.y));
    put_attr(n, "z", num(v.z));
    return n;
}

Vec3 read_vec(const pt::ptree& parent, const std::string& child, const std::string& where)
{
    const auto n = parent.get_child_optional(child);
    if (!n)
        return {};
    return {get_num(*n, "x", where), get_num(*n, "y", where), get_num(*n, "z", where)};
}

} // namespace

std::string scene_descriptor_xml(const Scene& scene, const fs::path& base_dir)
{
    pt::ptree root;
    pt::ptree& s = root.add_child("scene", pt::ptree());
    put_attr(s, "version", std::string(kVersion));
    put_attr(s, "name", scene.name);

    pt::ptree frame;
    put_attr(frame, "lon", num(scene.frame.origin().lon));
    put_attr(frame, "lat", num(scene.frame.origin().lat));
    put_attr(frame, "alt", num(scene.frame.origin().alt));
    s.add_child("frame", frame);

    const LccSpec& l = scene.frame.projection().spec();
    pt::ptree proj;
    put_attr(proj, "semi_major_axis_m", num(l.semi_major_axis_m));
    put_attr(proj, "inverse_flattening", num(l.inverse_flattening));
    put_attr(proj, "standard_parallel_1", num(l.standard_parallel_1));
    put_attr(proj, "standard_parallel_2", num(l.standard_parallel_2));
    put_attr(proj, "origin_latitude", num(l.origin_latitude));
    put_attr(proj, "central_meridian", num(l.central_meridian));
    put_attr(proj, "false_easting", num(l.false_easting));
    put_attr(proj, "false_northing", num(l.false_northing));
    put_attr(proj, "unit", std::string(to_string(l.unit)));
    s.add_child("projection", proj);

    pt::ptree boundary;
    for (const auto& g : scene.boundary) {
        pt::ptree p;
        put_attr(p, "lon", num(g.lon));
        put_attr(p, "lat", num(g.lat));
        boundary.add_child("point", p);
    }
    s.add_child("boundary", boundary);

    for (const auto& m : scene.meshes) {
        pt::ptree shape;
        put_attr(shape, "id", m.model_id);
        put_attr(shape, "model_type", m.model_type);
        put_attr(shape, "material", m.material);
        if (m.mesh_file.empty()) {
            // Generated rectangle (ground plane): stored by its corners.
            if (!m.mesh || m.mesh->vertices.size() != 4)
                throw InputError("shape " + m.model_id + " has neither a file nor rectangle geometry");
            put_attr(shape, "type", "rectangle");
            const auto& v = m.mesh->vertices;
            pt::ptree rect;
            put_attr(rect, "x0", num(v[0][0]));
            put_attr(rect, "y0", num(v[0][1]));
            put_attr(rect, "x1", num(v[2][0]));
            put_attr(rect, "y1", num(v[2][1]));
            put_attr(rect, "z", num(v[0][2]));
            shape.add_child("rectangle", rect);
        } else {
            put_attr(shape, "type", "ply");
            put_attr(shape, "filename", fs::relative(fs::absolute(m.mesh_file), fs::absolute(base_dir)).generic_string());
        }
        shape.add_child("translate", vec_node(m.translation));
        s.add_child("shape", shape);
    }

    for (const auto& a : scene.antennas) {
        pt::ptree ant;
        put_attr(ant, "id", a.antenna_id);
        put_attr(ant, "lon", num(a.location.lon));
        put_attr(ant, "lat", num(a.location.lat));
        put_attr(ant, "pole_type", a.pole_type);
        put_attr(ant, "source", std::string(to_string(a.source_dataset)));
        put_attr(ant, "attributes", a.attributes.dump());
        s.add_child("antenna", ant);
    }

    for (const auto& d : scene.devices) {
        pt::ptree dev;
        put_attr(dev, "id", d.device_id);
        put_attr(dev, "role", std::string(to_string(d.role)));
        put_attr(dev, "source", std::string(to_string(d.source)));
        dev.add_child("position", vec_node(d.position));
        for (const auto& sec : d.sectors) {
            pt::ptree sn;
            put_attr(sn, "azimuth", num(sec.azimuth_deg));
            put_attr(sn, "width", num(sec.width_deg));
            put_attr(sn, "downtilt", num(sec.downtilt_deg));
            dev.add_child("sector", sn);
        }
        s.add_child("device", dev);
    }

    std::ostringstream out;
    pt::write_xml(out, root, pt::xml_writer_make_settings<std::string>(' ', 2));
    return out.str();
}

void write_scene_descriptor(const Scene& scene, const fs::path& path)
{
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    fs::create_directories(dir);
    write_file(path, scene_descriptor_xml(scene, dir));
}

Scene load_scene_descriptor(const fs::path& path)
{
    const std::string text = read_file(path);
    pt::ptree root;
    try {
        std::istringstream in(text);
        pt::read_xml(in, root);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError("invalid scene descriptor: " + std::string(e.message()), e.line());
    }
    const auto s = root.get_child_optional("scene");
    if (!s)
        throw SchemaError("descriptor has no <scene> root");
    if (get_attr(*s, "version", "scene") != kVersion)
        throw SchemaError("unsupported descriptor version");
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

    const auto frame = s->get_child_optional("frame");
    if (!frame)
        throw SchemaError("descriptor has no <frame>");
    const GeoCoord origin{get_num(*frame, "lon", "frame"), get_num(*frame, "lat", "frame"),
                          get_num(*frame, "alt", "frame")};
    LccSpec lcc = LccSpec::massachusetts_mainland();
    if (const auto p = s->get_child_optional("projection")) {
        lcc.semi_major_axis_m = get_num(*p, "semi_major_axis_m", "projection");
        lcc.inverse_flattening = get_num(*p, "inverse_flattening", "projection");
        lcc.standard_parallel_1 = get_num(*p, "standard_parallel_1", "projection");
        lcc.standard_parallel_2 = get_num(*p, "standard_parallel_2", "projection");
        lcc.origin_latitude = get_num(*p, "origin_latitude", "projection");
        lcc.central_meridian = get_num(*p, "central_meridian", "projection");
        lcc.false_easting = get_num(*p, "false_easting", "projection");
        lcc.false_northing = get_num(*p, "false_northing", "projection");
        lcc.unit = parse_length_unit(get_attr(*p, "unit", "projection"));
    }
    Scene scene(get_attr(*s, "name", "scene"), origin, lcc);

    if (const auto b = s->get_child_optional("boundary"))
        for (const auto& [key, node] : *b)
            if (key == "point")
                scene.boundary.push_back({get_num(node, "lon", "boundary point"), get_num(node, "lat", "boundary point"), 0.0});

    std::map<fs::path, std::shared_ptr<const TriangleMesh>> cache;
    for (const auto& [key, node] : *s) {
        if (key == "shape") {
            PlacedMesh m;
            m.model_id = get_attr(node, "id", "shape");
            const std::string where = "shape '" + m.model_id + "'";
            m.model_type = node.get<std::string>("<xmlattr>.model_type", "");
            m.material = get_attr(node, "material", where);
            m.translation = read_vec(node, "translate", where);
            const std::string type = get_attr(node, "type", where);
            if (type == "rectangle") {
                const auto r = node.get_child_optional("rectangle");
                if (!r)
                    throw SchemaError(where + " lacks <rectangle>");
                const auto x0 = static_cast<float>(get_num(*r, "x0", where));
                const auto y0 = static_cast<float>(get_num(*r, "y0", where));
                const auto x1 = static_cast<float>(get_num(*r, "x1", where));
                const auto y1 = static_cast<float>(get_num(*r, "y1", where));
                const auto z = static_cast<float>(get_num(*r, "z", where));
                auto mesh = std::make_shared<TriangleMesh>();
                mesh->vertices = {{x0, y0, z}, {x1, y0, z}, {x1, y1, z}, {x0, y1, z}};
                mesh->triangles = {{0, 1, 2}, {0, 2, 3}};
                m.mesh = std::move(mesh);
            } else if (type == "ply") {
                m.mesh_file = (base / get_attr(node, "filename", where)).lexically_normal();
                if (!fs::exists(m.mesh_file))
                    throw NotFoundError(where + " references missing mesh " + m.mesh_file.string());
                auto& cached = cache[m.mesh_file];
                if (!cached)
                    cached = std::make_shared<const TriangleMesh>(load_ply_file(m.mesh_file));
                m.mesh = cached;
            } else {
                throw SchemaError(where + " has unknown type '" + type + "'");
            }
            scene.meshes.push_back(std::move(m));
        } else if (key == "antenna") {
            AntennaRecord a;
            a.antenna_id = get_attr(node, "id", "antenna");
            a.location = {get_num(node, "lon", "antenna"), get_num(node, "lat", "antenna"), 0.0};
            a.pole_type = node.get<std::string>("<xmlattr>.pole_type", "");
            a.source_dataset = node.get<std::string>("<xmlattr>.source", "post-2017") == "pre-2017"
                                   ? AntennaSource::pre_2017
                                   : AntennaSource::post_2017;
            try {
                a.attributes = nlohmann::json::parse(node.get<std::string>("<xmlattr>.attributes", "{}"));
            } catch (const nlohmann::json::parse_error&) {
                throw SchemaError("antenna '" + a.antenna_id + "' has malformed attributes");
            }
            scene.antennas.push_back(std::move(a));
        } else if (key == "device") {
            RadioDevice d;
            d.device_id = get_attr(node, "id", "device");
            const std::string where = "device '" + d.device_id + "'";
            const std::string role = get_attr(node, "role", where);
            if (role != "tx" && role != "rx")
                throw SchemaError(where + " has unknown role '" + role + "'");
            d.role = role == "tx" ? DeviceRole::tx : DeviceRole::rx;
            d.source = node.get<std::string>("<xmlattr>.source", "custom") == "catalog-antenna"
                           ? DeviceSource::catalog_antenna
                           : DeviceSource::custom;
            d.position = read_vec(node, "position", where);
            for (const auto& [sk, sn] : node)
                if (sk == "sector")
                    d.sectors.push_back({get_num(sn, "azimuth", where), get_num(sn, "width", where),
                                         get_num(sn, "downtilt", where)});
            if (d.role == DeviceRole::tx && d.sectors.empty())
                throw SchemaError(where + " is a transmitter without sectors");
            scene.devices.push_back(std::move(d));
        }
    }
    return scene;
}

} // namespace citytwin
