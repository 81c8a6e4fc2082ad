// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "citytwin/bvh.hpp"
#include "citytwin/error.hpp"
#include "citytwin/mesh.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace citytwin;

namespace {

std::vector<WorldTriangle> world_of(const TriangleMesh& m)
{
    std::vector<WorldTriangle> out;
    for (const auto& t : m.triangles)
        out.push_back({to_vec3(m.vertices[t[0]]), to_vec3(m.vertices[t[1]]), to_vec3(m.vertices[t[2]])});
    return out;
}

void check_contains(const Bvh& bvh, std::uint32_t node, const Aabb& parent)
{
    const auto& n = bvh.nodes()[node];
    CHECK(parent.contains(n.box));
    if (n.leaf()) {
        CHECK(n.count <= 4);
        for (std::uint32_t i = 0; i < n.count; ++i) {
            const auto& t = bvh.triangles()[bvh.order()[n.first + i]];
            Aabb b;
            b.extend(t.a);
            b.extend(t.b);
            b.extend(t.c);
            CHECK(n.box.contains(b));
        }
        return;
    }
    check_contains(bvh, n.first, n.box);
    check_contains(bvh, n.first + 1, n.box);
}

} // namespace

TEST_CASE("validation flags injected defects")
{
    const TriangleMesh cube = make_box({0, 0, 0}, {1, 1, 1});
    CHECK(validate(cube).clean());

    TriangleMesh rep = cube;
    rep.triangles.push_back({0, 0, 1});
    const auto r = validate(rep);
    CHECK(r.defects.size() == 1);
    CHECK(r.count(DefectKind::degenerate_triangle) == 1);

    // Inject k defects of each kind into a large mesh and expect exactly k flags.
    TriangleMesh m = make_icosphere(3);
    const std::size_t n = m.triangles.size();
    std::mt19937_64 rng(99);
    std::set<std::size_t> used;
    auto pick = [&] {
        std::uniform_int_distribution<std::size_t> d(0, n - 1);
        std::size_t i;
        do
            i = d(rng);
        while (!used.insert(i).second);
        return i;
    };
    const std::size_t k = 5;
    for (std::size_t i = 0; i < k; ++i)
        m.triangles[pick()][1] = static_cast<std::uint32_t>(m.vertices.size() + 10);
    for (std::size_t i = 0; i < k; ++i) {
        auto& t = m.triangles[pick()];
        t[2] = t[0];
    }
    for (std::size_t i = 0; i < k; ++i) {
        const auto& t = m.triangles[pick()];
        m.triangles.push_back({t[2], t[0], t[1]});
    }
    const auto report = validate(m);
    CHECK(report.count(DefectKind::index_out_of_range) == k);
    CHECK(report.count(DefectKind::degenerate_triangle) == k);
    CHECK(report.count(DefectKind::duplicate_triangle) == k);
    CHECK(report.defects.size() == 3 * k);

    const TriangleMesh cleaned = remove_defective_triangles(m);
    CHECK(validate(cleaned).clean());
    CHECK(cleaned.triangle_count() == n - 2 * k);

    TriangleMesh nan = cube;
    nan.vertices[3][1] = NAN;
    CHECK(validate(nan).count(DefectKind::non_finite_vertex) == 1);
}

TEST_CASE("simplification")
{
    const TriangleMesh sphere = make_icosphere(3);
    REQUIRE(sphere.triangle_count() == 1280);
    const TriangleMesh s = simplify(sphere, 320);
    CHECK(s.triangle_count() <= 320);
    CHECK(s.triangle_count() >= 318);
    CHECK(validate(s).clean());
    double deviation = 0.0;
    for (const auto& t : s.triangles)
        for (auto i : t)
            deviation = std::max(deviation, std::abs(norm(to_vec3(s.vertices[i])) - 1.0));
    CHECK(deviation < 0.05);

    CHECK(simplify(sphere, 5000) == sphere);
    CHECK(simplify(sphere, 1280) == sphere);
    const TriangleMesh box = make_box({0, 0, 0}, {3, 2, 1});
    CHECK(simplify(box, 12) == box);
    CHECK_THROWS_AS(simplify(sphere, 3), InputError);

    TriangleMesh broken = box;
    broken.triangles.push_back({0, 1, 99});
    CHECK_THROWS_AS(simplify(broken, 4), InputError);
}

TEST_CASE("simplification keeps material boundaries")
{
    TriangleMesh sphere = make_icosphere(3);
    sphere.triangle_materials.resize(sphere.triangle_count());
    for (std::size_t i = 0; i < sphere.triangle_count(); ++i) {
        const auto& t = sphere.triangles[i];
        const double z = sphere.vertices[t[0]][2] + sphere.vertices[t[1]][2] + sphere.vertices[t[2]][2];
        sphere.triangle_materials[i] = z > 0.0 ? 1 : 0;
    }
    const TriangleMesh s = simplify(sphere, 400);
    REQUIRE(s.triangle_materials.size() == s.triangle_count());
    // Vertices on the original material seam (shared by both materials) survive unchanged.
    std::set<std::uint32_t> seam_before;
    std::vector<int> mask(sphere.vertices.size(), 0);
    for (std::size_t i = 0; i < sphere.triangle_count(); ++i)
        for (auto v : sphere.triangles[i])
            mask[v] |= 1 << sphere.triangle_materials[i];
    for (std::uint32_t v = 0; v < mask.size(); ++v)
        if (mask[v] == 3)
            seam_before.insert(v);
    std::set<std::array<float, 3>> remaining;
    for (std::size_t i = 0; i < s.triangle_count(); ++i)
        for (auto v : s.triangles[i])
            remaining.insert(s.vertices[v]);
    for (auto v : seam_before)
        CHECK(remaining.count(sphere.vertices[v]) == 1);
}

TEST_CASE("bvh structure")
{
    const Bvh one(std::vector<WorldTriangle>{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, 0}});
    CHECK(one.nodes().size() == 1);
    CHECK(one.nodes()[0].leaf());

    const Bvh empty;
    CHECK_FALSE(empty.intersect({0, 0, 0}, {0, 0, 1}).has_value());
    CHECK_FALSE(Bvh(std::vector<WorldTriangle>{}).intersect({0, 0, 0}, {1, 0, 0}).has_value());

    const Bvh sphere(world_of(make_icosphere(4)));
    Aabb everything;
    everything.extend(Vec3{-2, -2, -2});
    everything.extend(Vec3{2, 2, 2});
    check_contains(sphere, 0, everything);
}

TEST_CASE("ray queries")
{
    std::vector<WorldTriangle> square{{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, 7}, {{0, 0, 0}, {1, 1, 0}, {0, 1, 0}, 7}};
    const Bvh bvh(square);
    const auto hit = bvh.intersect({0.25, 0.5, 10.0}, {0, 0, -1});
    REQUIRE(hit);
    CHECK(hit->t == doctest::Approx(10.0));
    CHECK(hit->normal.z == doctest::Approx(1.0));
    CHECK(hit->material == 7);
    // Two-sided.
    CHECK(bvh.intersect({0.25, 0.5, -3.0}, {0, 0, 1}).has_value());
    CHECK_FALSE(bvh.intersect({0.25, 0.5, 10.0}, {0, 0, -1}, 9.0).has_value());
    CHECK_FALSE(bvh.intersect({0.0, 0.0, 1.0}, {1, 0, 0}).has_value());
    CHECK_THROWS_AS(bvh.intersect({0, 0, 10}, {0, 0, -2}), InputError);
    CHECK(bvh.segment_blocked({0.5, 0.4, 1.0}, {0.5, 0.4, -1.0}));
    CHECK_FALSE(bvh.segment_blocked({0.5, 0.4, 1.0}, {0.5, 0.4, 0.0}));
}

TEST_CASE("every triangle of a soup is hit through its centroid")
{
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> pos(-50.0, 50.0), off(-1.0, 1.0);
    std::vector<WorldTriangle> soup;
    for (int i = 0; i < 10000; ++i) {
        const Vec3 c{pos(rng), pos(rng), pos(rng)};
        soup.push_back({c + Vec3{off(rng), off(rng), off(rng)}, c + Vec3{off(rng), off(rng), off(rng)},
                        c + Vec3{off(rng), off(rng), off(rng)}, 0});
    }
    const Bvh bvh(soup);
    std::size_t reachable = 0;
    std::size_t checked = 0;
    for (std::uint32_t i = 0; i < soup.size(); ++i) {
        const auto& t = soup[i];
        const Vec3 n = cross(t.b - t.a, t.c - t.a);
        if (norm(n) < 1e-6)
            continue;
        ++checked;
        const Vec3 centroid = (t.a + t.b + t.c) / 3.0;
        const Vec3 d = normalized(n);
        // Shoot from just above the centroid back along the normal: the first hit must be this triangle
        // unless another triangle sits inside that tiny gap.
        const auto hit = bvh.intersect(centroid + d * 1e-3, -d, 2e-3);
        if (hit && hit->triangle == i)
            ++reachable;
    }
    CHECK(reachable == checked);
}

TEST_CASE("aabb helpers")
{
    Aabb a;
    CHECK(a.empty());
    a.extend(Vec3{0, 0, 0});
    a.extend(Vec3{1, 2, 3});
    CHECK(a.surface_area() == doctest::Approx(22.0));
    Aabb inner;
    inner.extend(Vec3{0.5, 0.5, 0.5});
    CHECK(a.contains(inner));
    CHECK_FALSE(inner.contains(a));
}
