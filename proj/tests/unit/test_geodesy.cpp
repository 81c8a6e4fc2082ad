// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "citytwin/error.hpp"
#include "citytwin/geodesy.hpp"
#include "citytwin/ingest.hpp"

#include <cmath>
#include <random>

using namespace citytwin;

namespace {

const LccSpec kMa = LccSpec::massachusetts_mainland();

// Tile centers of the downtown dataset (lon, lat).
struct TileCenter {
    const char* name;
    double lon;
    double lat;
};
constexpr TileCenter kCenters[] = {
    {"BOS_F_4", -71.1025189571, 42.3570902827}, {"BOS_F_5", -71.1026051428, 42.3433701314},
    {"BOS_F_9", -71.1029495121, 42.2884891223}, {"BOS_G_3", -71.0839300113, 42.3707449543},
    {"BOS_G_4", -71.0840202471, 42.3570248589}, {"BOS_H_5", -71.0656157838, 42.3432363368},
};

} // namespace

TEST_CASE("survey foot conversions")
{
    CHECK(length_to_meters(5000.0, LengthUnit::us_survey_foot) == doctest::Approx(1524.0030480061).epsilon(1e-12));
    CHECK(length_to_meters(0.0, LengthUnit::us_survey_foot) == 0.0);
    CHECK(length_to_meters(2460625.0, LengthUnit::us_survey_foot) == 750000.0);
    CHECK(meters_to_length(750000.0, LengthUnit::us_survey_foot) == doctest::Approx(2460625.0).epsilon(1e-15));
    CHECK(Length{3.0, LengthUnit::meter}.to(LengthUnit::meter).value == 3.0);
    CHECK_THROWS_AS(length_to_meters(NAN, LengthUnit::meter), InputError);
    CHECK(parse_length_unit("ftUS") == LengthUnit::us_survey_foot);
    CHECK(parse_length_unit("meter") == LengthUnit::meter);
    CHECK_THROWS_AS(parse_length_unit("ft"), InputError);
}

TEST_CASE("projected coordinates keep their unit")
{
    const ProjectedCoord a{10.0, 20.0, LengthUnit::us_survey_foot};
    const ProjectedCoord b{1.0, 2.0, LengthUnit::meter};
    CHECK_THROWS_AS(a + b, InputError);
    const ProjectedCoord c = a + b.to(LengthUnit::us_survey_foot);
    CHECK(c.unit() == LengthUnit::us_survey_foot);
    CHECK(c.to(LengthUnit::meter).easting() == doctest::Approx(10.0 * kUsSurveyFootMeters + 1.0));
    CHECK_THROWS_AS(ProjectedCoord(INFINITY, 0.0, LengthUnit::meter), InputError);
}

TEST_CASE("lcc forward")
{
    // Custom origin of the city model.
    const ProjectedCoord p = lcc_forward({-71.223391, 42.213379, 0.0}, kMa);
    CHECK(p.unit() == LengthUnit::us_survey_foot);
    CHECK(std::abs(p.easting() - 731100.0) < 0.5);
    CHECK(std::abs(p.northing() - 2902900.0) < 5.0);

    // Projection origin maps to the false origin.
    const ProjectedCoord o = lcc_forward({kMa.central_meridian, kMa.origin_latitude, 0.0}, kMa);
    CHECK(std::abs(o.easting() - kMa.false_easting) < 1e-6);
    CHECK(std::abs(o.northing() - kMa.false_northing) < 1e-6);

    // Reference values from an independent EPSG:2249 implementation (PROJ).
    const ProjectedCoord r = lcc_forward({-71.0, 42.35, 0.0}, kMa);
    CHECK(std::abs(r.easting() - 791324.018535) < 0.003);
    CHECK(std::abs(r.northing() - 2952965.066595) < 0.003);
}

TEST_CASE("lcc inverse")
{
    const GeoCoord g = lcc_inverse({731100.0, 2902900.0, LengthUnit::us_survey_foot}, kMa);
    CHECK(std::abs(g.lon - -71.223391) < 1e-4);
    CHECK(std::abs(g.lat - 42.213379) < 1e-4);

    const GeoCoord o = lcc_inverse({kMa.false_easting, kMa.false_northing, kMa.unit}, kMa);
    CHECK(std::abs(o.lon - kMa.central_meridian) < 1e-12);
    CHECK(std::abs(o.lat - kMa.origin_latitude) < 1e-12);

    std::mt19937_64 rng(2249);
    std::uniform_real_distribution<double> lon(-73.5, -69.9), lat(41.2, 42.9);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const GeoCoord in{lon(rng), lat(rng), 0.0};
        const GeoCoord out = lcc_inverse(lcc_forward(in, kMa), kMa);
        worst = std::max({worst, std::abs(out.lon - in.lon), std::abs(out.lat - in.lat)});
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("lcc domain")
{
    CHECK_THROWS_AS(lcc_forward({-71.0, 90.0, 0.0}, kMa), DomainError);
    CHECK_THROWS_AS(lcc_forward({-71.0, NAN, 0.0}, kMa), InputError);
    LccSpec bad = kMa;
    bad.standard_parallel_1 = 95.0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("scale factor is one on the standard parallels")
{
    const LambertConformalConic lcc(kMa);
    for (double phi : {kMa.standard_parallel_1, kMa.standard_parallel_2}) {
        CHECK(std::abs(lcc.scale_factor(phi) - 1.0) < 1e-9);

        // Numerical check along the meridian: projected distance over ellipsoidal arc length.
        const double h = 1e-4;
        const auto n1 = lcc.forward({-71.5, phi - h, 0.0}).to(LengthUnit::meter);
        const auto n2 = lcc.forward({-71.5, phi + h, 0.0}).to(LengthUnit::meter);
        const double a = kMa.semi_major_axis_m;
        const double f = 1.0 / kMa.inverse_flattening;
        const double e2 = f * (2.0 - f);
        const double s = std::sin(phi * M_PI / 180.0);
        const double meridian_radius = a * (1.0 - e2) / std::pow(1.0 - e2 * s * s, 1.5);
        const double arc = meridian_radius * (2.0 * h * M_PI / 180.0);
        const double projected = std::hypot(n2.easting() - n1.easting(), n2.northing() - n1.northing());
        CHECK(std::abs(projected / arc - 1.0) < 1e-9);
    }
}

TEST_CASE("local frame")
{
    const GeoCoord origin{-71.1025189571, 42.3570902827, 0.0};
    const LocalFrame frame(origin, kMa);
    const Vec3 o = frame.to_local(origin);
    CHECK(norm(o) < 1e-9);
    CHECK(frame.to_geo({0, 0, 0}) == origin);

    // 1 km due north on GRS80 (geodesic computed with an independent tool).
    const Vec3 north = frame.to_local({-71.1025189571, 42.3660927783, 0.0});
    // Grid north differs from true north by the meridian convergence; the reference
    // offsets are PROJ's EPSG:2249 coordinates of both points, differenced.
    CHECK(std::abs(north.x - -4.659855155336249) < 1e-6);
    CHECK(std::abs(north.y - 999.9576293128848) < 1e-6);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2000.0, 2000.0);
    for (int i = 0; i < 200; ++i) {
        const Vec3 p{u(rng), u(rng), 12.5};
        const GeoCoord g = local_to_geo(p, frame);
        const Vec3 back = geo_to_local(g, frame);
        CHECK(norm(back - p) < 1e-6);
        const GeoCoord g2 = local_to_geo(geo_to_local(g, frame), frame);
        CHECK(std::abs(g2.lon - g.lon) < 1e-9);
        CHECK(std::abs(g2.lat - g.lat) < 1e-9);
    }
}

TEST_CASE("tile grid reproduces the published tile centers")
{
    const SourceCrs crs;
    for (const auto& c : kCenters) {
        CAPTURE(c.name);
        const TileInfo t = make_tileinfo(c.name, crs);
        // The published centers carry a datum offset of about one meter.
        CHECK(std::abs(t.center.lon - c.lon) < 2e-5);
        CHECK(std::abs(t.center.lat - c.lat) < 2e-5);
        CHECK(t.side_m == doctest::Approx(1524.003048).epsilon(1e-9));
    }

    // One tile east of BOS_F_4 is BOS_G_4, one tile side away.
    const LocalFrame frame({kCenters[0].lon, kCenters[0].lat, 0.0}, kMa);
    const Vec3 g4 = frame.to_local({kCenters[4].lon, kCenters[4].lat, 0.0});
    CHECK(std::abs(g4.x - 1524.003) < 0.05);
    CHECK(std::abs(g4.y) < 0.05);
    const GeoCoord east = frame.to_geo({1524.003 / 2.0, 0.0, 0.0});
    const TileInfo g4_info = make_tileinfo("BOS_G_4", crs);
    CHECK(std::abs(east.lon - g4_info.boundary[0].lon) < 2e-4);
}
