// SPDX-License-Identifier: Apache-2.0
#include "citytwin/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace citytwin {

std::size_t ValidationReport::count(DefectKind kind) const
{
    return static_cast<std::size_t>(
        std::count_if(defects.begin(), defects.end(), [kind](const MeshDefect& d) { return d.kind == kind; }));
}

double triangle_area(const TriangleMesh& mesh, std::size_t tri)
{
    const Triangle& t = mesh.triangles[tri];
    const Vec3 a = to_vec3(mesh.vertices[t[0]]);
    const Vec3 b = to_vec3(mesh.vertices[t[1]]);
    const Vec3 c = to_vec3(mesh.vertices[t[2]]);
    return 0.5 * norm(cross(b - a, c - a));
}

ValidationReport validate(const TriangleMesh& mesh)
{
    ValidationReport report;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        const auto& p = mesh.vertices[v];
        if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
            report.defects.push_back({DefectKind::non_finite_vertex, v});
    }

    std::set<Triangle> seen;
    const auto n_vertices = mesh.vertices.size();
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const Triangle& t = mesh.triangles[i];
        if (t[0] >= n_vertices || t[1] >= n_vertices || t[2] >= n_vertices) {
            report.defects.push_back({DefectKind::index_out_of_range, i});
            continue;
        }
        if (triangle_area(mesh, i) < kDegenerateArea) {
            report.defects.push_back({DefectKind::degenerate_triangle, i});
            continue;
        }
        Triangle key = t;
        std::sort(key.begin(), key.end());
        if (!seen.insert(key).second)
            report.defects.push_back({DefectKind::duplicate_triangle, i});
    }
    return report;
}

TriangleMesh remove_defective_triangles(const TriangleMesh& mesh)
{
    const ValidationReport report = validate(mesh);
    std::vector<bool> drop(mesh.triangles.size(), false);
    std::vector<bool> bad_vertex(mesh.vertices.size(), false);
    for (const auto& d : report.defects) {
        if (d.kind == DefectKind::non_finite_vertex)
            bad_vertex[d.index] = true;
        else
            drop[d.index] = true;
    }

    TriangleMesh out;
    out.vertices = mesh.vertices;
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const Triangle& t = mesh.triangles[i];
        if (drop[i] || bad_vertex[t[0]] || bad_vertex[t[1]] || bad_vertex[t[2]])
            continue;
        out.triangles.push_back(t);
        if (!mesh.triangle_materials.empty())
            out.triangle_materials.push_back(mesh.triangle_materials[i]);
    }
    return out;
}

TriangleMesh make_box(const Vec3& lo, const Vec3& hi)
{
    TriangleMesh m;
    for (int i = 0; i < 8; ++i) {
        m.vertices.push_back({static_cast<float>(i & 1 ? hi.x : lo.x), static_cast<float>(i & 2 ? hi.y : lo.y),
                              static_cast<float>(i & 4 ? hi.z : lo.z)});
    }
    // Quads listed counter-clockwise seen from outside.
    const std::array<std::array<std::uint32_t, 4>, 6> quads = {{
        {0, 2, 3, 1}, // z-
        {4, 5, 7, 6}, // z+
        {0, 1, 5, 4}, // y-
        {2, 6, 7, 3}, // y+
        {0, 4, 6, 2}, // x-
        {1, 3, 7, 5}, // x+
    }};
    for (const auto& q : quads) {
        m.triangles.push_back({q[0], q[1], q[2]});
        m.triangles.push_back({q[0], q[2], q[3]});
    }
    return m;
}

TriangleMesh make_icosphere(int level)
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                               {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : verts)
        v = normalized(v);
    std::vector<Triangle> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                   {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                   {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                   {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
        auto mid = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end())
                return it->second;
            verts.push_back(normalized((verts[a] + verts[b]) * 0.5));
            const auto idx = static_cast<std::uint32_t>(verts.size() - 1);
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<Triangle> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const auto ab = mid(f[0], f[1]);
            const auto bc = mid(f[1], f[2]);
            const auto ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    TriangleMesh m;
    for (const auto& v : verts)
        m.vertices.push_back({static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)});
    m.triangles = std::move(faces);
    return m;
}

} // namespace citytwin
