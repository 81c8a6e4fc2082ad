// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "../support.hpp"

#include "citytwin/config.hpp"
#include "citytwin/error.hpp"
#include "citytwin/scene.hpp"
#include "citytwin/synth.hpp"

#include <cmath>
#include <set>

using namespace citytwin;
using nlohmann::json;

namespace {

struct Dataset {
    test::ScratchDir dir;
    SynthResult result;

    Dataset(const std::string& tag, const SynthSpec& spec) : dir(tag), result(generate_synthetic_dataset(spec, dir.path(), {}, 2)) {}
};

SynthSpec ten_buildings()
{
    SynthSpec spec;
    spec.seed = 21;
    spec.block_rows = 2;
    spec.block_cols = 5;
    spec.outside_antennas = 2;
    return spec;
}

} // namespace

TEST_CASE("tile scene matches the generator")
{
    const Dataset ds("scene_tile", ten_buildings());
    const json& truth = ds.result.ground_truth;
    const Scene scene = load_tile_scene(ds.dir.path(), "BOS_F_4");
    std::size_t inside = 0;
    for (const auto& a : truth.at("antennas"))
        inside += !a.at("tile").is_null();
    REQUIRE(truth.at("antennas").size() == 12);
    CHECK(inside == 10);
    CHECK(scene.meshes.size() == 11);
    CHECK(scene.ground() != nullptr);
    CHECK(scene.antennas.size() == inside);
    CHECK(scene.triangle_count() == 10 * 10 + 2);

    // Frame origin at the tile center.
    const Vec3 c = scene.frame.to_local(make_tileinfo("BOS_F_4", SourceCrs{}).center);
    CHECK(norm(c) < 1e-9);

    for (const auto& m : truth.at("models")) {
        const auto it = std::find_if(scene.meshes.begin(), scene.meshes.end(),
                                     [&](const PlacedMesh& p) { return p.model_id == m.at("model_id"); });
        REQUIRE(it != scene.meshes.end());
        CHECK(it->translation.x == doctest::Approx(m.at("center_m")[0].get<double>()).epsilon(1e-9));
        CHECK(it->translation.y == doctest::Approx(m.at("center_m")[1].get<double>()).epsilon(1e-9));
        CHECK(it->material == kConcrete);
    }

    Scene deployed = scene;
    CHECK(deploy_antennas(deployed) == inside);
    CHECK(deployed.tx_count() == inside);
    for (const auto& d : deployed.devices) {
        CHECK(d.source == DeviceSource::catalog_antenna);
        CHECK(d.sectors.size() == 3);
    }
}

TEST_CASE("tile without antennas is still a valid scene")
{
    SynthSpec spec = ten_buildings();
    spec.antennas_per_block = 0;
    spec.outside_antennas = 0;
    const Dataset ds("scene_noant", spec);
    const Scene scene = load_tile_scene(ds.dir.path(), "BOS_F_4");
    CHECK(scene.antennas.empty());
    CHECK(scene.meshes.size() == 11);
}

TEST_CASE("unknown tile lists the available ones")
{
    const Dataset ds("scene_unknown", ten_buildings());
    CHECK(available_tiles(ds.dir.path()) == std::vector<std::string>{"BOS_F_4"});
    try {
        load_tile_scene(ds.dir.path(), "BOS_Z_9");
        FAIL("expected NotFoundError");
    } catch (const NotFoundError& e) {
        CHECK(std::string(e.what()).find("BOS_F_4") != std::string::npos);
    }
}

TEST_CASE("disc extraction equals the brute-force filter")
{
    SynthSpec spec;
    spec.seed = 3;
    spec.tiles = {"BOS_F_4", "BOS_G_4"};
    spec.block_rows = 4;
    spec.block_cols = 4;
    spec.walls = true;
    const Dataset ds("scene_disc", spec);
    const json& truth = ds.result.ground_truth;

    const LocalFrame f4(make_tileinfo("BOS_F_4", SourceCrs{}).center, LccSpec::massachusetts_mainland());
    // Both block grids sit around their tile centers, 1524 m apart.
    const GeoCoord center = f4.to_geo({762.0, -20.0, 0.0});
    for (double radius : {700.0, 740.0, 900.0}) {
        CAPTURE(radius);
        const Scene scene = extract_scene(ds.dir.path(), center, radius);
        std::set<std::string> expected;
        std::set<std::string> tiles;
        for (const auto& m : truth.at("models")) {
            const GeoCoord g{m.at("centroid")[0].get<double>(), m.at("centroid")[1].get<double>(), 0.0};
            const Vec3 p = scene.frame.to_local(g);
            if (std::hypot(p.x, p.y) <= radius) {
                expected.insert(m.at("model_id").get<std::string>());
                tiles.insert(m.at("tile").get<std::string>());
            }
        }
        std::set<std::string> got;
        for (const auto& m : scene.meshes)
            if (m.model_id != kGroundId)
                got.insert(m.model_id);
        CHECK(got == expected);
        CHECK(tiles.size() == 2);
    }

    // Radius of one meter around a building centroid yields exactly that building.
    const auto& first = truth.at("models")[5];
    const GeoCoord c{first.at("centroid")[0].get<double>(), first.at("centroid")[1].get<double>(), 0.0};
    const Scene single = extract_scene(ds.dir.path(), c, 1.0);
    REQUIRE(single.meshes.size() == 2);
    CHECK(single.meshes[0].model_id == first.at("model_id"));

    CHECK_THROWS_AS(extract_scene(ds.dir.path(), f4.to_geo({-740.0, 740.0, 0.0}), 0.001), NotFoundError);
    CHECK_THROWS_AS(extract_scene(ds.dir.path(), center, -1.0), InputError);
}

TEST_CASE("materials")
{
    CHECK(assign_material("Building") == kConcrete);
    CHECK(assign_material("Wall") == kBrick);
    CHECK(assign_material("Ground") == kMediumDryGround);
    CHECK(assign_material("Gazebo") == kConcrete);

    const MaterialTable t = MaterialTable::itu();
    const Material& concrete = t.at(kConcrete);
    CHECK(concrete.relative_permittivity(1e9) == doctest::Approx(5.24));
    CHECK(concrete.conductivity(1e9) == doctest::Approx(0.0462));
    CHECK(concrete.in_band(12.7e9));
    CHECK_THROWS_AS(t.at("unobtainium"), NotFoundError);
}

TEST_CASE("device placement")
{
    Scene scene = test::empty_scene(500.0);
    const RadioDevice& tx = place_device(scene, scene.frame.origin(), DeviceRole::tx, "tx");
    CHECK(norm(tx.position - Vec3{0, 0, 10}) < 1e-9);
    CHECK(tx.sectors.size() == 3);
    CHECK(tx.sectors[1].azimuth_deg == 120.0);

    const RadioDevice& rx = place_device(scene, Vec3{5, 5, 0}, DeviceRole::rx, "rx");
    CHECK(rx.position == Vec3{5, 5, 1.5});
    CHECK(rx.sectors.empty());

    const GeoCoord g{-71.1010, 42.3580, 0.0};
    const RadioDevice& geo = place_device(scene, g, DeviceRole::rx, "geo", 2.0);
    const GeoCoord back = scene.frame.to_geo(geo.position);
    CHECK(std::abs(back.lon - g.lon) < 1e-9);
    CHECK(std::abs(back.lat - g.lat) < 1e-9);
    CHECK(geo.position.z == 2.0);

    CHECK_THROWS_AS(place_device(scene, Vec3{600, 0, 0}, DeviceRole::tx, "far"), PlacementError);
    CHECK_THROWS_AS(place_device(scene, Vec3{1, 1, 0}, DeviceRole::tx, "tx"), PlacementError);
    CHECK(scene.tx_count() == 1);
}

TEST_CASE("pole heights")
{
    CHECK(antenna_height_from_pole_type("utility_pole") == 8.0);
    CHECK(antenna_height_from_pole_type("spaceship") == 10.0);
    CHECK(antenna_height_from_pole_type("") == 10.0);
    const AppConfig cfg = parse_config("[pole_heights]\nutility_pole = 12.5\ndefault = 7\n");
    CHECK(cfg.poles.height_of("utility_pole") == 12.5);
    CHECK(cfg.poles.height_of("other") == 7.0);
}

TEST_CASE("ground plane")
{
    Scene scene = test::empty_scene(762.0015);
    add_ground_plane(scene);
    add_ground_plane(scene);
    std::size_t grounds = 0;
    for (const auto& m : scene.meshes)
        grounds += m.model_id == kGroundId;
    CHECK(grounds == 1);
    const PlacedMesh* g = scene.ground();
    REQUIRE(g);
    CHECK(g->mesh->triangle_count() == 2);
    CHECK(g->material == kMediumDryGround);
    float lo = 0.0f, hi = 0.0f;
    for (const auto& v : g->mesh->vertices) {
        CHECK(v[2] == 0.0f);
        lo = std::min(lo, v[0]);
        hi = std::max(hi, v[0]);
    }
    CHECK(hi - lo == doctest::Approx(1676.4).epsilon(1e-4));
}

TEST_CASE("scene descriptor round trip")
{
    const Dataset ds("scene_xml", ten_buildings());
    Scene scene = load_tile_scene(ds.dir.path(), "BOS_F_4");
    place_device(scene, Vec3{10, -20, 0}, DeviceRole::tx, "custom", 12.0, {{45.0, 90.0, 5.0}});
    place_device(scene, Vec3{-30, 15, 0}, DeviceRole::rx, "probe");
    const auto path = ds.dir.path() / "boston3d" / "roundtrip.xml";
    write_scene_descriptor(scene, path);
    const Scene back = load_scene_descriptor(path);

    CHECK(back.name == scene.name);
    CHECK(back.frame.origin() == scene.frame.origin());
    CHECK(back.boundary == scene.boundary);
    REQUIRE(back.meshes.size() == scene.meshes.size());
    for (std::size_t i = 0; i < scene.meshes.size(); ++i) {
        CHECK(back.meshes[i].model_id == scene.meshes[i].model_id);
        CHECK(back.meshes[i].translation == scene.meshes[i].translation);
        CHECK(back.meshes[i].material == scene.meshes[i].material);
        CHECK(*back.meshes[i].mesh == *scene.meshes[i].mesh);
    }
    REQUIRE(back.devices.size() == 2);
    CHECK(back.devices[0].position == scene.devices[0].position);
    CHECK(back.devices[0].sectors.size() == 1);
    CHECK(back.devices[0].sectors[0].downtilt_deg == 5.0);
    CHECK(back.devices[1].role == DeviceRole::rx);
    CHECK(back.antennas.size() == scene.antennas.size());
    CHECK(scene_descriptor_xml(back, path.parent_path()) == scene_descriptor_xml(scene, path.parent_path()));

    // Ground-only scene.
    Scene empty = test::empty_scene(100.0);
    add_ground_plane(empty);
    const auto empty_path = ds.dir.path() / "empty.xml";
    write_scene_descriptor(empty, empty_path);
    const Scene empty_back = load_scene_descriptor(empty_path);
    REQUIRE(empty_back.meshes.size() == 1);
    CHECK(*empty_back.ground()->mesh == *empty.ground()->mesh);

    std::filesystem::remove(ds.dir.path() / "boston3d" / scene.meshes[3].mesh_file.relative_path());
    std::filesystem::remove(scene.meshes[3].mesh_file);
    try {
        load_scene_descriptor(path);
        FAIL("expected NotFoundError");
    } catch (const NotFoundError& e) {
        CHECK(std::string(e.what()).find(scene.meshes[3].model_id) != std::string::npos);
    }
}
