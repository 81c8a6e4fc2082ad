// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "../support.hpp"

#include "citytwin/error.hpp"
#include "citytwin/radio.hpp"
#include "citytwin/raytrace.hpp"

#include <cmath>
#include <numbers>

using namespace citytwin;
using citytwin::test::add_quad;
using citytwin::test::make_geometry;

namespace {

constexpr double kF = 12.7e9;
constexpr double kPi = std::numbers::pi;

const Material kLosslessConcrete{"lossless", 5.24, 0.0, 0.0, 0.0, 0.0, 1000.0};
const Material kMetal{"metal", 1.0, 0.0, 1e7, 0.0, 0.0, 1000.0};

// Square ground of half-size `half` at z = 0.
std::vector<WorldTriangle> ground(double half)
{
    std::vector<WorldTriangle> t;
    add_quad(t, {-half, -half, 0}, {half, -half, 0}, {half, half, 0}, {-half, half, 0}, 0);
    return t;
}

RtConfig reflections_only(int order)
{
    RtConfig rt;
    rt.max_reflections = order;
    rt.enable_diffraction = false;
    rt.n_launch_rays = 20000;
    return rt;
}

double free_space_amplitude(double d) { return kSpeedOfLight / kF / (4.0 * kPi * d); }

} // namespace

TEST_CASE("fibonacci directions")
{
    const auto one = fibonacci_directions(1);
    REQUIRE(one.size() == 1);
    CHECK(norm(one[0]) == doctest::Approx(1.0));

    const auto many = fibonacci_directions(1000000);
    Vec3 mean;
    for (const auto& d : many)
        mean += d;
    CHECK(norm(mean / static_cast<double>(many.size())) < 2e-3);

    const auto k = fibonacci_directions(1000);
    double min_angle = kPi;
    for (std::size_t i = 0; i < k.size(); ++i) {
        CHECK(std::abs(norm(k[i]) - 1.0) < 1e-12);
        for (std::size_t j = i + 1; j < k.size(); ++j)
            min_angle = std::min(min_angle, std::acos(std::clamp(dot(k[i], k[j]), -1.0, 1.0)));
    }
    const double ideal = std::sqrt(4.0 * kPi / 1000.0);
    CHECK(min_angle > 0.7 * ideal);
    CHECK_THROWS(fibonacci_directions(0));
}

TEST_CASE("fresnel coefficients")
{
    const cplx eta = complex_permittivity(5.24, 0.0, kF);
    const FresnelCoefficients normal = fresnel_coefficients(1.0, eta);
    const double expected = (1.0 - std::sqrt(5.24)) / (1.0 + std::sqrt(5.24));
    CHECK(expected == doctest::Approx(-0.392).epsilon(1e-3));
    CHECK(std::abs(normal.te - expected) < 1e-12);
    // TM uses the field-vector convention (Γ_TM → −1 at grazing), so only its magnitude matches TE here.
    CHECK(std::abs(std::abs(normal.tm) - std::abs(expected)) < 1e-12);

    const FresnelCoefficients grazing = fresnel_coefficients(1e-9, eta);
    CHECK(std::abs(grazing.te - cplx(-1.0, 0.0)) < 1e-8);

    // |Γ_TM| is smallest at the Brewster angle.
    const double brewster = std::atan(std::sqrt(5.24));
    double best_angle = 0.0;
    double best = 1.0;
    for (int i = 0; i <= 90000; ++i) {
        const double th = i * (kPi / 2.0) / 90000.0;
        const double m = std::abs(fresnel_coefficients(std::cos(th), eta).tm);
        if (m < best) {
            best = m;
            best_angle = th;
        }
    }
    CHECK(std::abs(best_angle - brewster) < 1e-4);
    CHECK(best < 1e-4);

    // Conductivity adds a negative imaginary part.
    const cplx lossy = complex_permittivity(kMetal, kF);
    CHECK(lossy.imag() < 0.0);
    CHECK(lossy.real() == 1.0);
}

TEST_CASE("line of sight in an empty scene")
{
    const SceneGeometry g = make_geometry({}, 0, {kLosslessConcrete}, kF);
    const Vec3 tx{0, 0, 10};
    const Vec3 rx{30, 40, 10};
    const auto paths = trace_paths(g, tx, rx, RtConfig{});
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].signature() == "LOS");
    CHECK(paths[0].length == doctest::Approx(50.0));
    CHECK(paths[0].delay == doctest::Approx(50.0 / kSpeedOfLight));
    CHECK(std::abs(paths[0].amplitude[0]) == doctest::Approx(free_space_amplitude(50.0)).epsilon(1e-12));
    CHECK(std::abs(paths[0].amplitude[1]) < 1e-15);
    CHECK(std::abs(paths[0].amplitude[2]) < 1e-15);

    // 12.7 GHz at 100 m.
    const double fspl = -20.0 * std::log10(free_space_amplitude(100.0));
    CHECK(fspl == doctest::Approx(94.52).epsilon(1e-3));
}

TEST_CASE("ground reflection at the image point")
{
    const SceneGeometry g = make_geometry(ground(500.0), 2, {kLosslessConcrete}, kF);
    const Vec3 tx{-20, 5, 10};
    const Vec3 rx{60, -15, 1.5};
    const auto paths = trace_paths(g, tx, rx, reflections_only(1));
    REQUIRE(paths.size() == 2);
    const PropagationPath& r = paths[0].interactions[0].type == InteractionType::reflect ? paths[0] : paths[1];
    REQUIRE(r.vertices.size() == 3);
    // The reflection point splits the horizontal distance in the ratio of the heights.
    const double s = tx.z / (tx.z + rx.z);
    const Vec3 expected = tx + (rx - tx) * s;
    CHECK(std::abs(r.vertices[1].x - expected.x) < 1e-6);
    CHECK(std::abs(r.vertices[1].y - expected.y) < 1e-6);
    CHECK(std::abs(r.vertices[1].z) < 1e-6);
    CHECK(r.length == doctest::Approx(norm(rx - Vec3{tx.x, tx.y, -tx.z})).epsilon(1e-12));
}

TEST_CASE("two-ray interference pattern")
{
    const SceneGeometry g = make_geometry(ground(3000.0), 2, {kLosslessConcrete}, kF);
    RadioConfig radio;
    radio.tx_power_dbm = 0.0;
    const GainFn iso = [](const Vec3&) { return 0.0; };
    const double er = 5.24;
    const double k = 2.0 * kPi * kF / kSpeedOfLight;
    const double lambda = kSpeedOfLight / kF;
    const double ht = 10.0;
    const double hr = 1.5;
    double worst = 0.0;
    for (double d = 20.0; d <= 1000.0; d += 7.3) {
        const Vec3 tx{0, 0, ht};
        const Vec3 rx{d, 0, hr};
        const double d1 = std::hypot(d, ht - hr);
        const double d2 = std::hypot(d, ht + hr);
        const double psi = std::atan2(ht + hr, d);
        const double root = std::sqrt(er - std::cos(psi) * std::cos(psi));
        const double rv = (er * std::sin(psi) - root) / (er * std::sin(psi) + root);
        const cplx field = lambda / (4.0 * kPi) * (std::exp(cplx(0, -k * d1)) / d1 + rv * std::exp(cplx(0, -k * d2)) / d2);
        const double analytic = 20.0 * std::log10(std::abs(field));
        const double traced = received_power(trace_paths(g, tx, rx, reflections_only(1)), iso, iso, radio);
        worst = std::max(worst, std::abs(traced - analytic));
    }
    CHECK(worst < 0.5);
}

TEST_CASE("perfect conductor keeps the free-space amplitude")
{
    // Vertical metal wall at x = 10; both ends at the same height so θ̂ is perpendicular to the plane of incidence.
    std::vector<WorldTriangle> wall;
    add_quad(wall, {10, -100, 0}, {10, 100, 0}, {10, 100, 50}, {10, -100, 50}, 0);
    const SceneGeometry g = make_geometry(wall, 0, {kMetal}, kF);
    const Vec3 tx{0, 0, 10};
    const Vec3 rx{0, 20, 10};
    const auto paths = trace_paths(g, tx, rx, reflections_only(1));
    REQUIRE(paths.size() == 2);
    for (const auto& p : paths) {
        if (p.interactions[0].type != InteractionType::reflect)
            continue;
        CHECK(p.length == doctest::Approx(std::sqrt(800.0)));
        CHECK(std::abs(p.amplitude[0]) == doctest::Approx(free_space_amplitude(p.length)).epsilon(1e-3));
    }
}

TEST_CASE("street canyon paths obey the specular law and passivity")
{
    std::vector<WorldTriangle> tris = ground(400.0);
    add_quad(tris, {-300, -10, 0}, {300, -10, 0}, {300, -10, 30}, {-300, -10, 30}, 1);
    add_quad(tris, {-300, 10, 0}, {-300, 10, 30}, {300, 10, 30}, {300, 10, 0}, 1);
    const SceneGeometry g = make_geometry(tris, 2, {kLosslessConcrete, kLosslessConcrete}, kF);
    const Vec3 tx{-50, -3, 8};
    const Vec3 rx{70, 4, 1.5};
    const auto paths = trace_paths(g, tx, rx, reflections_only(3));
    CHECK(paths.size() > 10);
    const auto swapped = trace_paths(g, rx, tx, reflections_only(3));
    CHECK(swapped.size() == paths.size());
    for (const auto& p : paths) {
        CAPTURE(p.signature());
        CHECK(std::abs(p.amplitude[0]) <= free_space_amplitude(p.length) * (1.0 + 1e-12));
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < p.vertices.size(); ++i)
            total += norm(p.vertices[i + 1] - p.vertices[i]);
        CHECK(total == doctest::Approx(p.length).epsilon(1e-12));
        for (std::size_t i = 0; i < p.interactions.size(); ++i) {
            if (p.interactions[i].type != InteractionType::reflect)
                continue;
            const Vec3 in = normalized(p.vertices[i + 1] - p.vertices[i]);
            const Vec3 out = normalized(p.vertices[i + 2] - p.vertices[i + 1]);
            const Vec3 n = g.facets()[g.facet_of(p.interactions[i].id)].normal;
            CHECK(norm(reflect(in, n) - out) < 1e-9);
        }
    }
    const std::string csv = paths_to_csv(paths);
    CHECK(csv.rfind("type,length_m,delay_ns,gain_db", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == paths.size() + 1);
}

TEST_CASE("diffraction rules")
{
    // Thin screen in the plane x = 0 spanning y ∈ [-20, 20] with its top edge at z = 30.
    std::vector<WorldTriangle> screen;
    add_quad(screen, {0, -20, 10}, {0, 20, 10}, {0, 20, 30}, {0, -20, 30}, 0);
    const SceneGeometry g = make_geometry(screen, 0, {kLosslessConcrete}, kF);
    RtConfig rt;
    rt.max_reflections = 0;

    // Blocked link: diffraction over the top edge only.
    const auto blocked = trace_paths(g, {-50, 0, 20}, {50, 0, 20}, rt);
    REQUIRE_FALSE(blocked.empty());
    bool over_top = false;
    for (const auto& p : blocked) {
        CHECK(p.interactions[0].type == InteractionType::diffract);
        if (std::abs(p.vertices[1].z - 30.0) < 1e-9) {
            over_top = true;
            CHECK(std::abs(p.vertices[1].y) < 1e-9);
            CHECK(std::abs(p.amplitude[0]) < free_space_amplitude(p.length));
        }
    }
    CHECK(over_top);

    // Clear link over the screen keeps the line of sight.
    const auto clear = trace_paths(g, {-50, 0, 40}, {50, 0, 40}, rt);
    REQUIRE_FALSE(clear.empty());
    CHECK(std::count_if(clear.begin(), clear.end(), [](const PropagationPath& p) { return p.signature() == "LOS"; }) ==
          1);

    // The specular diffraction point on the top edge would lie at y = 60: no path through that edge.
    for (const auto& p : diffraction_paths(g, {-50, 60, 20}, {50, 60, 20}, true)) {
        const Edge& e = g.edges()[p.interactions[0].id];
        const double s = dot(p.vertices[1] - e.a, e.b - e.a) / dot(e.b - e.a, e.b - e.a);
        CHECK(s > 0.0);
        CHECK(s < 1.0);
        CHECK_FALSE(std::abs(p.vertices[1].z - 30.0) < 1e-9);
    }
}

TEST_CASE("ray tracing configuration")
{
    RtConfig rt;
    CHECK_NOTHROW(rt.validate());
    rt.enable_scattering = true;
    CHECK_THROWS_AS(rt.validate(), ConfigError);
    rt = RtConfig{};
    rt.max_reflections = -1;
    CHECK_THROWS_AS(rt.validate(), ConfigError);
    rt = RtConfig{};
    rt.n_launch_rays = 0;
    CHECK_THROWS_AS(rt.validate(), ConfigError);
}

TEST_CASE("utd transition function limits")
{
    // F(X) → 1 for large X.
    CHECK(std::abs(utd_transition(1e4) - cplx(1.0, 0.0)) < 1e-3);
    // F(X) ≈ √(πX) e^{j(π/4 + X)} for small X.
    const double x = 1e-6;
    const cplx small = std::sqrt(kPi * x) * std::exp(cplx(0, kPi / 4.0 + x));
    CHECK(std::abs(utd_transition(x) - small) < 1e-5);
    double c = 0.0, s = 0.0;
    fresnel_integrals(1e6, c, s);
    CHECK(c == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(s == doctest::Approx(0.5).epsilon(1e-5));
}
