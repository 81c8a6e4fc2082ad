// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "citytwin/mesh.hpp"
#include "citytwin/vec3.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace citytwin {

/// Hits closer than this along a ray are ignored (self-intersection guard), meters.
inline constexpr double kRayEpsilon = 1e-4;

struct Aabb {
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};

    void extend(const Vec3& p)
    {
        lo = min(lo, p);
        hi = max(hi, p);
    }
    void extend(const Aabb& b)
    {
        lo = min(lo, b.lo);
        hi = max(hi, b.hi);
    }
    bool empty() const { return lo.x > hi.x; }
    double surface_area() const;
    bool contains(const Aabb& b) const;
};

/// Triangle in world coordinates with its material slot.
struct WorldTriangle {
    Vec3 a;
    Vec3 b;
    Vec3 c;
    std::uint32_t material = 0;
};

/// A mesh placed in the world by translation.
struct MeshInstance {
    const TriangleMesh* mesh = nullptr;
    Vec3 translation;
    /// Material slot of every triangle (per-triangle slots of the mesh are added to it).
    std::uint32_t material = 0;
};

struct RayHit {
    double t = 0.0;
    std::uint32_t triangle = 0;
    /// Geometric unit normal (winding order a, b, c).
    Vec3 normal;
    std::uint32_t material = 0;
    /// Barycentric weights of vertices b and c.
    double u = 0.0;
    double v = 0.0;
};

/// Binary bounding volume hierarchy over world triangles built with a binned
/// surface-area heuristic. Leaves hold at most four triangles.
class Bvh {
public:
    struct Node {
        Aabb box;
        /// First child index for inner nodes (second child is first + 1),
        /// offset into the triangle permutation for leaves.
        std::uint32_t first = 0;
        /// Number of triangles; 0 marks an inner node.
        std::uint32_t count = 0;
        bool leaf() const { return count > 0; }
    };

    Bvh() = default;
    explicit Bvh(std::vector<WorldTriangle> triangles);

    const std::vector<WorldTriangle>& triangles() const { return triangles_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<std::uint32_t>& order() const { return order_; }
    bool empty() const { return triangles_.empty(); }

    /// Nearest hit with t in (kRayEpsilon, t_max). `direction` must be unit length.
    std::optional<RayHit> intersect(const Vec3& origin, const Vec3& direction,
                                    double t_max = std::numeric_limits<double>::infinity()) const;

    /// True when any triangle is hit with t in (kRayEpsilon, t_max).
    bool occluded(const Vec3& origin, const Vec3& direction, double t_max) const;

    /// True when the open segment between `from` and `to` is blocked.
    /// Both ends are trimmed by kRayEpsilon.
    bool segment_blocked(const Vec3& from, const Vec3& to) const;

private:
    void build();

    std::vector<WorldTriangle> triangles_;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> order_;
};

Bvh build_bvh(std::span<const MeshInstance> meshes);

inline std::optional<RayHit> intersect(const Bvh& bvh, const Vec3& origin, const Vec3& direction,
                                       double t_max = std::numeric_limits<double>::infinity())
{
    return bvh.intersect(origin, direction, t_max);
}

/// Two-sided Moller-Trumbore test. Returns t (any sign) and barycentrics on hit.
bool ray_triangle(const WorldTriangle& tri, const Vec3& origin, const Vec3& direction, double& t, double& u,
                  double& v);

} // namespace citytwin
