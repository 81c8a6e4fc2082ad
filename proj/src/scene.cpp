// SPDX-License-Identifier: Apache-2.0
#include "citytwin/scene.hpp"

#include "citytwin/error.hpp"
#include "citytwin/log.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace citytwin {

namespace fs = std::filesystem;

namespace {

constexpr double kBoundaryTolerance = 1e-6;
constexpr double kGroundMargin = 0.10;

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b)
{
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

bool polygon_contains(const std::vector<Vec3>& ring, const Vec3& p)
{
    if (ring.size() < 4)
        return false;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i)
        if (point_segment_distance(p, ring[i], ring[i + 1]) <= kBoundaryTolerance)
            return true;
    bool inside = false;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const Vec3& a = ring[i];
        const Vec3& b = ring[i + 1];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x)
                inside = !inside;
        }
    }
    return inside;
}

std::vector<Vec3> to_local_ring(const LocalFrame& frame, const std::vector<GeoCoord>& ring)
{
    std::vector<Vec3> out;
    out.reserve(ring.size());
    for (const auto& g : ring) {
        Vec3 p = frame.to_local(g);
        p.z = 0.0;
        out.push_back(p);
    }
    return out;
}

fs::path models_dir(const fs::path& root) { return root / kModelsDir; }

std::vector<AntennaRecord> load_antennas(const fs::path& root)
{
    const fs::path file = root / kAntennasDir / kAntennasFile;
    if (!fs::exists(file))
        return {};
    return parse_antennas(read_file(file));
}

PlacedMesh place_model(const fs::path& root, const ModelRecord& r, const LocalFrame& frame)
{
    PlacedMesh pm;
    pm.model_id = r.model_id;
    pm.model_type = r.model_type;
    pm.mesh_file = models_dir(root) / r.mesh_path;
    if (!fs::exists(pm.mesh_file))
        throw NotFoundError("mesh of model " + r.model_id + " not found at " + pm.mesh_file.string());
    pm.mesh = std::make_shared<const TriangleMesh>(load_ply_file(pm.mesh_file));
    pm.translation = frame.to_local(GeoCoord{r.centroid.lon, r.centroid.lat, 0.0});
    pm.translation.z = 0.0;
    pm.material = assign_material(r.model_type);
    return pm;
}

} // namespace

std::string_view to_string(DeviceRole role) { return role == DeviceRole::tx ? "tx" : "rx"; }

std::string_view to_string(DeviceSource source)
{
    return source == DeviceSource::catalog_antenna ? "catalog-antenna" : "custom";
}

std::vector<Sector> default_sectors() { return {{0.0, 120.0, 0.0}, {120.0, 120.0, 0.0}, {240.0, 120.0, 0.0}}; }

PoleHeightTable PoleHeightTable::defaults()
{
    PoleHeightTable t;
    t.heights = {{"utility_pole", 8.0}, {"street_light", 9.0}, {"traffic_signal", 6.0}};
    return t;
}

double PoleHeightTable::height_of(std::string_view pole_type) const
{
    const auto it = heights.find(std::string(pole_type));
    return it == heights.end() ? default_height : it->second;
}

double antenna_height_from_pole_type(std::string_view pole_type, const PoleHeightTable& table)
{
    return table.height_of(pole_type);
}

Scene::Scene(std::string scene_name, const GeoCoord& origin, const LccSpec& lcc)
    : name(std::move(scene_name)), frame(origin, lcc)
{
}

std::vector<Vec3> Scene::local_boundary() const { return to_local_ring(frame, boundary); }

bool Scene::contains_local(const Vec3& p) const { return polygon_contains(local_boundary(), p); }

const PlacedMesh* Scene::ground() const
{
    for (const auto& m : meshes)
        if (m.model_id == kGroundId)
            return &m;
    return nullptr;
}

std::size_t Scene::triangle_count() const
{
    std::size_t n = 0;
    for (const auto& m : meshes)
        n += m.mesh ? m.mesh->triangles.size() : 0;
    return n;
}

std::size_t Scene::tx_count() const
{
    return static_cast<std::size_t>(
        std::count_if(devices.begin(), devices.end(), [](const RadioDevice& d) { return d.role == DeviceRole::tx; }));
}

fs::path dataset_root(const fs::path& fallback)
{
    if (const char* env = std::getenv("CITYTWIN_DATA"); env && *env)
        return fs::path(env);
    return fallback;
}

std::vector<std::string> available_tiles(const fs::path& root)
{
    std::vector<std::string> tiles;
    const fs::path dir = models_dir(root);
    if (!fs::is_directory(dir))
        return tiles;
    constexpr std::string_view suffix = "_tileinfo.geojson";
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string file = entry.path().filename().string();
        if (file.size() > suffix.size() && file.ends_with(suffix))
            tiles.push_back(file.substr(0, file.size() - suffix.size()));
    }
    std::sort(tiles.begin(), tiles.end());
    return tiles;
}

Scene load_tile_scene(const fs::path& root, const std::string& tile_name, const LccSpec& lcc)
{
    const fs::path info_file = models_dir(root) / (tile_name + "_tileinfo.geojson");
    const fs::path catalog_file = models_dir(root) / (tile_name + ".geojson");
    if (!fs::exists(info_file) || !fs::exists(catalog_file)) {
        std::string list;
        for (const auto& t : available_tiles(root))
            list += (list.empty() ? "" : ", ") + t;
        throw NotFoundError("unknown tile '" + tile_name + "'; available tiles: " + (list.empty() ? "(none)" : list));
    }
    const TileInfo tile = parse_tileinfo(read_file(info_file));
    Scene scene(tile_name, tile.center, lcc);
    scene.boundary = tile.boundary;
    for (const ModelRecord& r : parse_catalog(read_file(catalog_file)))
        scene.meshes.push_back(place_model(root, r, scene.frame));

    const std::vector<Vec3> ring = scene.local_boundary();
    for (auto& a : load_antennas(root))
        if (polygon_contains(ring, scene.frame.to_local(a.location)))
            scene.antennas.push_back(std::move(a));
    add_ground_plane(scene);
    return scene;
}

Scene extract_scene(const fs::path& root, const GeoCoord& center, double radius_m, const LccSpec& lcc)
{
    if (!(radius_m > 0.0) || !std::isfinite(radius_m))
        throw InputError("radius must be positive and finite");
    center.validate();
    char name[96];
    std::snprintf(name, sizeof name, "disc_%.6f_%.6f_%g", center.lon, center.lat, radius_m);
    Scene scene(name, GeoCoord{center.lon, center.lat, 0.0}, lcc);

    bool any_tile = false;
    for (const std::string& tile_name : available_tiles(root)) {
        const TileInfo tile = parse_tileinfo(read_file(models_dir(root) / (tile_name + "_tileinfo.geojson")));
        const std::vector<Vec3> ring = to_local_ring(scene.frame, tile.boundary);
        bool touches = polygon_contains(ring, Vec3{});
        for (std::size_t i = 0; !touches && i + 1 < ring.size(); ++i)
            touches = point_segment_distance(Vec3{}, ring[i], ring[i + 1]) <= radius_m;
        if (!touches)
            continue;
        any_tile = true;
        for (const ModelRecord& r : parse_catalog(read_file(models_dir(root) / (tile_name + ".geojson")))) {
            const Vec3 p = scene.frame.to_local(GeoCoord{r.centroid.lon, r.centroid.lat, 0.0});
            if (std::hypot(p.x, p.y) <= radius_m)
                scene.meshes.push_back(place_model(root, r, scene.frame));
        }
    }
    if (!any_tile || scene.meshes.empty())
        throw NotFoundError("no model within " + std::to_string(radius_m) + " m of the requested center (empty scene)");

    for (auto [sx, sy] : {std::pair{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}, {-1.0, -1.0}})
        scene.boundary.push_back(scene.frame.to_geo(Vec3{sx * radius_m, sy * radius_m, 0.0}));
    for (auto& a : load_antennas(root)) {
        const Vec3 p = scene.frame.to_local(a.location);
        if (std::hypot(p.x, p.y) <= radius_m)
            scene.antennas.push_back(std::move(a));
    }
    add_ground_plane(scene);
    return scene;
}

void add_ground_plane(Scene& scene)
{
    std::erase_if(scene.meshes, [](const PlacedMesh& m) { return m.model_id == kGroundId; });
    const std::vector<Vec3> ring = scene.local_boundary();
    if (ring.empty())
        throw InputError("scene has no boundary to cover with a ground plane");
    Vec3 lo{INFINITY, INFINITY, 0.0};
    Vec3 hi{-INFINITY, -INFINITY, 0.0};
    for (const Vec3& p : ring) {
        lo = min(lo, p);
        hi = max(hi, p);
    }
    const double cx = 0.5 * (lo.x + hi.x);
    const double cy = 0.5 * (lo.y + hi.y);
    const double hx = 0.5 * (hi.x - lo.x) * (1.0 + kGroundMargin);
    const double hy = 0.5 * (hi.y - lo.y) * (1.0 + kGroundMargin);

    auto mesh = std::make_shared<TriangleMesh>();
    mesh->vertices = {{static_cast<float>(cx - hx), static_cast<float>(cy - hy), 0.0f},
                      {static_cast<float>(cx + hx), static_cast<float>(cy - hy), 0.0f},
                      {static_cast<float>(cx + hx), static_cast<float>(cy + hy), 0.0f},
                      {static_cast<float>(cx - hx), static_cast<float>(cy + hy), 0.0f}};
    mesh->triangles = {{0, 1, 2}, {0, 2, 3}};
    PlacedMesh ground;
    ground.model_id = std::string(kGroundId);
    ground.model_type = "Ground";
    ground.mesh = std::move(mesh);
    ground.material = std::string(kMediumDryGround);
    scene.meshes.push_back(std::move(ground));
}

RadioDevice& place_device(Scene& scene, const DeviceLocation& location, DeviceRole role, std::string device_id,
                          std::optional<double> height_m, std::vector<Sector> sectors)
{
    const double default_height = role == DeviceRole::tx ? kDefaultTxHeight : kDefaultRxHeight;
    Vec3 p;
    if (const auto* geo = std::get_if<GeoCoord>(&location)) {
        geo->validate();
        p = scene.frame.to_local(GeoCoord{geo->lon, geo->lat, 0.0});
        p.z = height_m.value_or(default_height);
    } else {
        p = std::get<Vec3>(location);
        p.z = height_m ? *height_m : (p.z != 0.0 ? p.z : default_height);
    }
    if (!is_finite(p) || p.z < 0.0)
        throw PlacementError("device " + device_id + " has an invalid position");
    if (!scene.contains_local(p))
        throw PlacementError("device " + device_id + " lies outside the scene boundary");
    for (const auto& d : scene.devices)
        if (d.device_id == device_id)
            throw PlacementError("duplicate device id '" + device_id + "'");
    for (const auto& s : sectors)
        if (!(s.width_deg > 0.0 && s.width_deg <= 360.0))
            throw PlacementError("sector width must lie in (0, 360]");
    if (role == DeviceRole::tx && sectors.empty())
        sectors = default_sectors();
    if (role == DeviceRole::rx)
        sectors.clear();
    scene.devices.push_back({std::move(device_id), p, role, std::move(sectors), DeviceSource::custom});
    return scene.devices.back();
}

std::size_t deploy_antennas(Scene& scene, const PoleHeightTable& poles)
{
    std::size_t placed = 0;
    for (const auto& a : scene.antennas) {
        try {
            RadioDevice& d =
                place_device(scene, a.location, DeviceRole::tx, a.antenna_id, poles.height_of(a.pole_type));
            d.source = DeviceSource::catalog_antenna;
            ++placed;
        } catch (const PlacementError& e) {
            warn(std::string("antenna skipped: ") + e.what());
        }
    }
    return placed;
}

} // namespace citytwin
