// SPDX-License-Identifier: Apache-2.0
#include "citytwin/error.hpp"
#include "citytwin/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

namespace citytwin {

namespace {

constexpr double kNormalQuantum = 1e5;
constexpr double kOffsetQuantum = 1e3;
constexpr double kWeldQuantum = 1e4;
constexpr double kGroundLevel = 1e-3;
constexpr double kFlatTolerance = 1e-6;

Vec3 unit_normal(const WorldTriangle& t)
{
    const Vec3 c = cross(t.b - t.a, t.c - t.a);
    const double len = norm(c);
    return len > 0.0 ? c / len : Vec3{};
}

/// Sign-canonical normal: first significant component positive.
Vec3 canonical(Vec3 n)
{
    for (int k = 0; k < 3; ++k) {
        if (std::fabs(n[k]) > 1e-9) {
            if (n[k] < 0.0)
                n = -n;
            break;
        }
    }
    return n;
}

Vec3 perpendicular_part(const Vec3& v, const Vec3& axis)
{
    const Vec3 p = v - axis * dot(v, axis);
    const double len = norm(p);
    return len > 0.0 ? p / len : Vec3{};
}

using WeldKey = std::tuple<long long, long long, long long>;

WeldKey weld_key(const Vec3& p)
{
    return {std::llround(p.x * kWeldQuantum), std::llround(p.y * kWeldQuantum), std::llround(p.z * kWeldQuantum)};
}

} // namespace

SceneGeometry::SceneGeometry(Input input, double f_hz) : frequency_(f_hz)
{
    if (!(f_hz > 0.0))
        throw InputError("carrier frequency must be positive");
    ground_ = std::move(input.ground);
    ground_.resize(input.triangles.size(), false);
    materials_ = std::move(input.materials);
    for (const auto& t : input.triangles)
        if (t.material >= materials_.size())
            throw InputError("triangle references an unknown material slot");
    for (const auto& m : materials_)
        eta_.push_back(complex_permittivity(m, f_hz));
    bvh_ = Bvh(std::move(input.triangles));
    if (!bvh_.nodes().empty()) {
        const Aabb& box = bvh_.nodes()[0].box;
        extent_ = std::max(1.0, norm(box.hi - box.lo));
    }
    build_facets();
    build_edges();
}

void SceneGeometry::build_facets()
{
    const auto& tris = bvh_.triangles();
    triangle_facet_.assign(tris.size(), 0);
    std::map<std::tuple<std::uint32_t, long long, long long, long long, long long>, std::uint32_t> index;
    for (std::uint32_t i = 0; i < tris.size(); ++i) {
        const Vec3 n = canonical(unit_normal(tris[i]));
        const double offset = dot(n, tris[i].a);
        const auto key = std::make_tuple(tris[i].material, std::llround(n.x * kNormalQuantum),
                                         std::llround(n.y * kNormalQuantum), std::llround(n.z * kNormalQuantum),
                                         std::llround(offset * kOffsetQuantum));
        auto [it, inserted] = index.try_emplace(key, static_cast<std::uint32_t>(facets_.size()));
        if (inserted)
            facets_.push_back({n, offset, tris[i].material, {}});
        facets_[it->second].triangles.push_back(i);
        triangle_facet_[i] = it->second;
    }
}

void SceneGeometry::build_edges()
{
    const auto& tris = bvh_.triangles();
    std::map<WeldKey, std::uint32_t> weld;
    std::vector<Vec3> points;
    auto vertex_id = [&](const Vec3& p) {
        auto [it, inserted] = weld.try_emplace(weld_key(p), static_cast<std::uint32_t>(points.size()));
        if (inserted)
            points.push_back(p);
        return it->second;
    };

    struct Side {
        std::uint32_t triangle;
        Vec3 opposite;
    };
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<Side>> sides;
    for (std::uint32_t i = 0; i < tris.size(); ++i) {
        if (ground_[i] || norm(cross(tris[i].b - tris[i].a, tris[i].c - tris[i].a)) == 0.0)
            continue;
        const Vec3 v[3] = {tris[i].a, tris[i].b, tris[i].c};
        const std::uint32_t id[3] = {vertex_id(v[0]), vertex_id(v[1]), vertex_id(v[2])};
        for (int k = 0; k < 3; ++k) {
            const std::uint32_t p = id[k];
            const std::uint32_t q = id[(k + 1) % 3];
            if (p == q)
                continue;
            sides[{std::min(p, q), std::max(p, q)}].push_back({i, v[(k + 2) % 3]});
        }
    }

    for (const auto& [key, list] : sides) {
        const Vec3 a = points[key.first];
        const Vec3 b = points[key.second];
        if (a.z <= kGroundLevel && b.z <= kGroundLevel)
            continue;
        if (list.size() > 2)
            continue;
        const Vec3 dir = normalized(b - a);
        Edge edge;
        edge.a = a;
        edge.b = b;
        edge.t0 = perpendicular_part(list[0].opposite - a, dir);
        edge.material0 = tris[list[0].triangle].material;
        if (norm(edge.t0) == 0.0)
            continue;
        if (list.size() == 1) {
            edge.n0 = unit_normal(tris[list[0].triangle]);
            edge.n0 = perpendicular_part(edge.n0, edge.t0);
            edge.nn = -edge.n0;
            edge.n = 2.0;
            edge.half_plane = true;
            edge.materialn = edge.material0;
        } else {
            const Vec3 t1 = perpendicular_part(list[1].opposite - a, dir);
            if (norm(t1) == 0.0)
                continue;
            const double cos_interior = dot(edge.t0, t1);
            if (cos_interior < -1.0 + kFlatTolerance || cos_interior > 1.0 - kFlatTolerance)
                continue;
            // The solid occupies the smaller angle between the faces.
            edge.n0 = perpendicular_part(-t1, edge.t0);
            edge.nn = perpendicular_part(-edge.t0, t1);
            const double interior = std::acos(std::clamp(cos_interior, -1.0, 1.0));
            edge.n = (2.0 * std::numbers::pi - interior) / std::numbers::pi;
            edge.half_plane = false;
            edge.materialn = tris[list[1].triangle].material;
        }
        edge.e = normalized(cross(edge.t0, edge.n0));
        edges_.push_back(edge);
    }
}

SceneGeometry build_scene_geometry(const Scene& scene, const MaterialTable& materials, double f_hz)
{
    SceneGeometry::Input input;
    std::map<std::string, std::uint32_t> slots;
    for (const auto& pm : scene.meshes) {
        if (!pm.mesh)
            continue;
        auto [it, inserted] = slots.try_emplace(pm.material, static_cast<std::uint32_t>(input.materials.size()));
        if (inserted) {
            input.materials.push_back(materials.at(pm.material));
            materials.check_band(pm.material, f_hz);
        }
        const bool ground = pm.model_id == kGroundId;
        const TriangleMesh& m = *pm.mesh;
        for (const Triangle& t : m.triangles) {
            input.triangles.push_back({to_vec3(m.vertices[t[0]]) + pm.translation,
                                       to_vec3(m.vertices[t[1]]) + pm.translation,
                                       to_vec3(m.vertices[t[2]]) + pm.translation, it->second});
            input.ground.push_back(ground);
        }
    }
    return SceneGeometry(std::move(input), f_hz);
}

} // namespace citytwin
