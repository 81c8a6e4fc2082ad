// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "../support.hpp"

#include "citytwin/error.hpp"
#include "citytwin/radio.hpp"

#include <cmath>
#include <numbers>

using namespace citytwin;
using citytwin::test::add_quad;
using citytwin::test::make_geometry;

namespace {

constexpr double kPi = std::numbers::pi;

PropagationPath los_path(double length, double extra_phase_delay = 0.0)
{
    PropagationPath p;
    p.interactions = {{InteractionType::los, 0}};
    p.vertices = {{0, 0, 0}, {length, 0, 0}};
    p.length = length;
    p.delay = length / kSpeedOfLight + extra_phase_delay;
    p.amplitude = {cplx(kSpeedOfLight / 12.7e9 / (4.0 * kPi * length), 0.0), 0.0, 0.0, 0.0};
    p.aod_theta = kPi / 2.0;
    p.aoa_theta = kPi / 2.0;
    p.aoa_phi = kPi;
    return p;
}

const GainFn kIso = [](const Vec3&) { return 0.0; };

Scene scene_with_ground(double half, const std::vector<Vec3>& txs)
{
    Scene scene = test::empty_scene(half);
    add_ground_plane(scene);
    for (std::size_t i = 0; i < txs.size(); ++i)
        place_device(scene, txs[i], DeviceRole::tx, "tx" + std::to_string(i));
    return scene;
}

} // namespace

TEST_CASE("element pattern")
{
    const ElementPattern p;
    CHECK(element_gain(90.0, 0.0, p) == doctest::Approx(8.0));
    // A_H = 12 (φ/φ3dB)² = 3 dB at φ = φ3dB / 2.
    CHECK(element_gain(90.0, 32.5, p) == doctest::Approx(5.0));
    CHECK(element_gain(90.0 + 32.5, 0.0, p) == doctest::Approx(5.0));
    CHECK(element_gain(90.0, 180.0, p) == doctest::Approx(8.0 - 30.0));
    CHECK(element_gain(0.0, 180.0, p) == doctest::Approx(8.0 - 30.0));
}

TEST_CASE("sector gain")
{
    RadioConfig cfg;
    const Sector north{0.0, 120.0, 0.0};
    CHECK(tx_gain({0, 1, 0}, north, cfg) == doctest::Approx(8.0 + 10.0 * std::log10(16.0)));
    CHECK(10.0 * std::log10(16.0) == doctest::Approx(12.04).epsilon(1e-3));
    cfg.array_rows = 1;
    cfg.array_cols = 1;
    CHECK(tx_gain({0, 1, 0}, north, cfg) == doctest::Approx(element_gain(90.0, 0.0, cfg.pattern)));
    // East is 90° clockwise from north.
    CHECK(tx_gain({1, 0, 0}, north, cfg) == doctest::Approx(element_gain(90.0, 90.0, cfg.pattern)));
    CHECK(tx_gain({1, 0, 0}, {90.0, 120.0, 0.0}, cfg) == doctest::Approx(8.0));
    // Outside the nominal width the pattern still rolls off smoothly.
    const double outside = tx_gain({-1, 0, 0}, north, cfg);
    CHECK(outside > 8.0 - 30.0 - 1e-9);
    CHECK(outside < 8.0);
    // Downtilt moves the boresight below the horizon.
    const Vec3 down = normalized(Vec3{0, std::cos(0.1), -std::sin(0.1)});
    CHECK(tx_gain(down, {0.0, 120.0, 0.1 * 180.0 / kPi}, cfg) == doctest::Approx(8.0));
}

TEST_CASE("received power")
{
    RadioConfig cfg;
    const PropagationPath p = los_path(100.0);
    const double one = received_power({p}, kIso, kIso, cfg);
    CHECK(one == doctest::Approx(30.0 + 20.0 * std::log10(std::abs(p.amplitude[0]))));
    CHECK(one == doctest::Approx(30.0 - 94.52).epsilon(1e-3));
    CHECK(std::isinf(received_power({}, kIso, kIso, cfg)));

    // Same path twice: +6.02 dB coherently, +3.01 dB in power-sum mode.
    CHECK(received_power({p, p}, kIso, kIso, cfg) - one == doctest::Approx(20.0 * std::log10(2.0)));
    RadioConfig power = cfg;
    power.power_sum = true;
    CHECK(received_power({p, p}, kIso, kIso, power) - one == doctest::Approx(10.0 * std::log10(2.0)));

    // Half a period of delay cancels the sum.
    const PropagationPath shifted = los_path(100.0, 0.5 / cfg.frequency_hz);
    CHECK(received_power({p, shifted}, kIso, kIso, cfg) < one - 100.0);

    const GainFn plus3 = [](const Vec3&) { return 3.0; };
    CHECK(received_power({p}, plus3, plus3, cfg) == doctest::Approx(one + 6.0));
}

TEST_CASE("noise and capacity")
{
    RadioConfig cfg;
    CHECK(noise_floor_dbm(cfg) == doctest::Approx(-80.98).epsilon(1e-4));
    CHECK(snr(noise_floor_dbm(cfg), cfg) == doctest::Approx(0.0));
    RadioConfig narrow;
    narrow.bandwidth_hz = 1.0;
    narrow.noise_figure_db = 0.0;
    CHECK(snr(-174.0, narrow) == doctest::Approx(0.0));

    CHECK(shannon_capacity(0.0, 400e6) == doctest::Approx(400e6));
    CHECK(shannon_capacity(24.0, 400e6) == doctest::Approx(3.19e9).epsilon(2e-3));
    CHECK(shannon_capacity(-INFINITY, 400e6) == 0.0);

    CHECK(min_snr_for_rate(30e6, 400e6) == doctest::Approx(-12.73).epsilon(1e-3));
    CHECK(min_snr_for_rate(700e6, 400e6) == doctest::Approx(3.74).epsilon(1e-3));
    CHECK(std::abs(min_snr_for_rate(400e6, 400e6)) < 1e-12);
    for (double r : {1e6, 30e6, 700e6, 2e9})
        CHECK(shannon_capacity(min_snr_for_rate(r, 400e6), 400e6) == doctest::Approx(r));

    RadioConfig bad;
    bad.bandwidth_hz = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("coverage over an empty scene follows Friis")
{
    const Scene scene = scene_with_ground(30.0, {{0, 0, 10}});
    // Without the ground the only path is the line of sight.
    Scene bare = scene;
    bare.meshes.clear();
    const SceneGeometry g = build_scene_geometry(bare, MaterialTable::itu(), 12.7e9);
    RadioConfig radio;
    radio.array_rows = radio.array_cols = 1;
    RtConfig rt;
    rt.n_launch_rays = 1000;
    const CoverageMap map = coverage_map(bare, g, radio, rt, {2.0, 1.5}, {{}, 2});
    CHECK(map.nx == 30);
    CHECK(map.ny == 30);
    const double lambda = kSpeedOfLight / radio.frequency_hz;
    for (std::size_t iy = 0; iy < map.ny; ++iy)
        for (std::size_t ix = 0; ix < map.nx; ++ix) {
            const Vec3 c = map.center(ix, iy);
            const Vec3 d = c - Vec3{0, 0, 10};
            double best = -INFINITY;
            for (const auto& s : default_sectors())
                best = std::max(best, tx_gain(normalized(d), s, radio));
            const double expected =
                radio.tx_power_dbm + best + 20.0 * std::log10(lambda / (4.0 * kPi * norm(d))) - noise_floor_dbm(radio);
            CHECK(map.at(ix, iy).flags == cell_ok);
            CHECK(std::abs(map.at(ix, iy).snr_db - expected) < 0.05);
        }
}

TEST_CASE("closed box shadows its inside and outside")
{
    Scene scene = scene_with_ground(40.0, {{-30, 0, 10}});
    auto box = std::make_shared<TriangleMesh>(make_box({-5, -5, 0}, {5, 5, 20}));
    scene.meshes.push_back({"box", "Building", {}, box, {20.5, 0.5, 0}, std::string(kConcrete)});
    const SceneGeometry g = build_scene_geometry(scene, MaterialTable::itu(), 12.7e9);
    RtConfig rt;
    rt.enable_diffraction = false;
    rt.max_reflections = 1;
    rt.n_launch_rays = 2000;
    const CoverageMap map = coverage_map(scene, g, RadioConfig{}, rt, {2.0, 1.5}, {{}, 2});
    std::size_t indoor = 0;
    for (std::size_t iy = 0; iy < map.ny; ++iy)
        for (std::size_t ix = 0; ix < map.nx; ++ix) {
            const Vec3 c = map.center(ix, iy);
            const bool inside = std::abs(c.x - 20.5) < 5 && std::abs(c.y - 0.5) < 5;
            if (inside) {
                CHECK(map.at(ix, iy).flags == cell_indoor);
                ++indoor;
            }
        }
    CHECK(indoor == 25);
    // Directly behind the box (x in (25, 40), |y| < 1) only the ground bounce could help, and it is blocked too.
    const std::size_t ix = static_cast<std::size_t>((36.0 - map.x0) / map.cell_m);
    const std::size_t iy = static_cast<std::size_t>((0.0 - map.y0) / map.cell_m + 0.5);
    CHECK(map.at(ix, iy).flags == cell_outage);
    CHECK(map.at(ix, iy).best_tx == -1);
}

TEST_CASE("a second transmitter never lowers the best-server SNR")
{
    Scene scene = scene_with_ground(40.0, {{-20, -10, 10}});
    auto box = std::make_shared<TriangleMesh>(make_box({-6, -4, 0}, {6, 4, 15}));
    scene.meshes.push_back({"box", "Building", {}, box, {5, 5, 0}, std::string(kConcrete)});
    const SceneGeometry g = build_scene_geometry(scene, MaterialTable::itu(), 12.7e9);
    RtConfig rt;
    rt.n_launch_rays = 3000;
    rt.max_reflections = 2;
    const CoverageMap one = coverage_map(scene, g, RadioConfig{}, rt, {4.0, 1.5}, {{}, 2});
    place_device(scene, Vec3{25, 20, 0}, DeviceRole::tx, "tx1");
    const CoverageMap two = coverage_map(scene, g, RadioConfig{}, rt, {4.0, 1.5}, {{}, 2});
    REQUIRE(one.cells.size() == two.cells.size());
    for (std::size_t i = 0; i < one.cells.size(); ++i)
        CHECK(two.cells[i].snr_db >= one.cells[i].snr_db);

    // Restricting to one id reproduces the single-TX map.
    const CoverageMap only = coverage_map(scene, g, RadioConfig{}, rt, {4.0, 1.5}, {{"tx0"}, 2});
    CHECK(export_csv(only) == export_csv(one));
    CHECK_THROWS_AS(coverage_map(scene, g, RadioConfig{}, rt, {4.0, 1.5}, {{"nope"}, 2}), ConfigError);

    Scene no_tx = test::empty_scene(10.0);
    CHECK_THROWS_AS(coverage_map(no_tx, g, RadioConfig{}, rt, {4.0, 1.5}), ConfigError);
}

TEST_CASE("ties go to the lowest device id")
{
    Scene scene = test::empty_scene(20.0);
    // Two co-located transmitters; "b" is placed first.
    place_device(scene, Vec3{0, 0, 0}, DeviceRole::tx, "b");
    place_device(scene, Vec3{0, 0, 0}, DeviceRole::tx, "a");
    const SceneGeometry g = build_scene_geometry(scene, MaterialTable::itu(), 12.7e9);
    RtConfig rt;
    rt.n_launch_rays = 100;
    const CoverageMap map = coverage_map(scene, g, RadioConfig{}, rt, {10.0, 1.5}, {{}, 1});
    for (const auto& c : map.cells)
        CHECK(map.tx_ids[static_cast<std::size_t>(c.best_tx)] == "a");
}

TEST_CASE("threshold maps")
{
    CoverageMap map;
    map.nx = 4;
    map.ny = 1;
    map.cell_m = 1.0;
    map.tx_ids = {"t"};
    map.cells = {{0, 0, -13.0, shannon_capacity(-13.0, 400e6), cell_ok},
                 {0, 0, -12.0, shannon_capacity(-12.0, 400e6), cell_ok},
                 {-1, -1, -INFINITY, 0.0, cell_outage},
                 {-1, -1, -INFINITY, 0.0, cell_indoor}};
    const auto pass30 = threshold_map(map, {"30 Mbps", 30e6});
    CHECK(pass30 == std::vector<std::uint8_t>{0, 1, 0, 0});
    CHECK(threshold_map(map, {"tiny", 1e-9}) == std::vector<std::uint8_t>{1, 1, 0, 0});
    CHECK(threshold_map(map, {"huge", 1e12}) == std::vector<std::uint8_t>{0, 0, 0, 0});
    const std::string csv = export_threshold_csv(map, pass30, {"30 Mbps", 30e6});
    CHECK(csv.find("min_snr_db") != std::string::npos);
}

TEST_CASE("map export")
{
    CoverageMap map;
    map.x0 = -2.5;
    map.y0 = 7.25;
    map.cell_m = 5.0;
    map.rx_height_m = 1.5;
    map.nx = 2;
    map.ny = 2;
    map.tx_ids = {"ANT-1", "ANT-2"};
    map.cells = {{0, 1, 12.345678901234567, shannon_capacity(12.345678901234567, 400e6), cell_ok},
                 {1, 0, -3.5, shannon_capacity(-3.5, 400e6), cell_ok},
                 {-1, -1, -INFINITY, 0.0, cell_outage},
                 {-1, -1, -INFINITY, 0.0, cell_indoor}};
    const std::string csv = export_csv(map);
    std::size_t rows = 0;
    bool header = false;
    std::istringstream in(csv);
    for (std::string line; std::getline(in, line);) {
        if (line.starts_with("#"))
            continue;
        if (!header) {
            CHECK(line == "x,y,best_tx,snr_db,capacity_bps,flags");
            header = true;
            continue;
        }
        ++rows;
    }
    CHECK(rows == 4);
    CHECK(csv.find("# radio.frequency_hz = ") != std::string::npos);
    CHECK(csv.find("# raytrace.max_reflections = ") != std::string::npos);
    CHECK(csv.find("# raytrace.capture_mode = auto") != std::string::npos);

    const CoverageMap back = import_csv(csv);
    CHECK(back.x0 == map.x0);
    CHECK(back.y0 == map.y0);
    CHECK(back.cell_m == map.cell_m);
    CHECK(back.nx == 2);
    CHECK(back.ny == 2);
    CHECK(back.tx_ids == map.tx_ids);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(back.cells[i].best_tx == map.cells[i].best_tx);
        CHECK(back.cells[i].snr_db == map.cells[i].snr_db);
        CHECK(back.cells[i].capacity_bps == map.cells[i].capacity_bps);
        CHECK(back.cells[i].flags == map.cells[i].flags);
    }
    CHECK(export_csv(back).substr(csv.find("x,y,")) == csv.substr(csv.find("x,y,")));
    CHECK_THROWS_AS(import_csv(csv.substr(0, csv.size() - 20)), ParseError);

    const std::string pgm = export_pgm(map, -20.0, 40.0);
    const std::string head = "P5\n# snr_db -20 40\n2 2\n65535\n";
    REQUIRE(pgm.rfind(head, 0) == 0);
    CHECK(pgm.size() == head.size() + 2 * 2 * 2);
    // Top row is the north row (cells 2, 3): both zero.
    CHECK(pgm.substr(head.size(), 4) == std::string(4, '\0'));
    const auto sample = [&](std::size_t i) {
        return static_cast<unsigned>(static_cast<unsigned char>(pgm[head.size() + 2 * i])) << 8 |
               static_cast<unsigned char>(pgm[head.size() + 2 * i + 1]);
    };
    CHECK(sample(2) == 1 + std::lround((12.345678901234567 + 20.0) / 60.0 * 65534.0));
    CHECK(sample(3) == 1 + std::lround(16.5 / 60.0 * 65534.0));
    CHECK_THROWS_AS(export_pgm(map, 10.0, 10.0), ConfigError);
}
