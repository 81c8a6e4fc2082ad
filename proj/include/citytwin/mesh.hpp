// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "citytwin/vec3.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace citytwin {

using Vec3f = std::array<float, 3>;
using Triangle = std::array<std::uint32_t, 3>;

inline Vec3 to_vec3(const Vec3f& v) { return {v[0], v[1], v[2]}; }

/// Indexed triangle mesh with positions in meters.
///
/// `triangle_materials` is either empty (the whole mesh uses material slot 0)
/// or holds one material slot per triangle.
struct TriangleMesh {
    std::vector<Vec3f> vertices;
    std::vector<Triangle> triangles;
    std::vector<std::uint16_t> triangle_materials;

    std::size_t triangle_count() const { return triangles.size(); }
    std::uint16_t material_of(std::size_t tri) const
    {
        return triangle_materials.empty() ? 0 : triangle_materials[tri];
    }

    friend bool operator==(const TriangleMesh&, const TriangleMesh&) = default;
};

inline constexpr double kDegenerateArea = 1e-10;

enum class DefectKind { index_out_of_range, non_finite_vertex, degenerate_triangle, duplicate_triangle };

struct MeshDefect {
    DefectKind kind;
    /// Triangle index, or vertex index for non_finite_vertex.
    std::size_t index;
};

struct ValidationReport {
    std::vector<MeshDefect> defects;

    bool clean() const { return defects.empty(); }
    std::size_t count(DefectKind kind) const;
};

/// Flags out-of-range indices, non-finite vertices, triangles with area below
/// kDegenerateArea and duplicated triangles (same vertex set, any order).
ValidationReport validate(const TriangleMesh& mesh);

/// Drops every triangle flagged by validate(); unused vertices are kept.
TriangleMesh remove_defective_triangles(const TriangleMesh& mesh);

double triangle_area(const TriangleMesh& mesh, std::size_t tri);

/// Quadric-error-metric edge-collapse decimation down to at most
/// `target_triangles`. Collapses never merge vertices that sit on a material
/// boundary. Throws InputError for target < 4.
TriangleMesh simplify(const TriangleMesh& mesh, std::size_t target_triangles);

/// Axis-aligned box [lo, hi] as a closed 12-triangle mesh with outward winding.
TriangleMesh make_box(const Vec3& lo, const Vec3& hi);

/// Subdivided icosahedron on the unit sphere (20 * 4^level triangles).
TriangleMesh make_icosphere(int level);

} // namespace citytwin
