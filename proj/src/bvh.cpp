// SPDX-License-Identifier: Apache-2.0
#include "citytwin/bvh.hpp"

#include "citytwin/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace citytwin {

namespace {

constexpr int kBinCount = 16;
constexpr std::uint32_t kMaxLeafSize = 4;
constexpr int kMaxSahDepth = 48;

Vec3 centroid(const WorldTriangle& t) { return (t.a + t.b + t.c) / 3.0; }

Aabb bounds(const WorldTriangle& t)
{
    Aabb b;
    b.extend(t.a);
    b.extend(t.b);
    b.extend(t.c);
    return b;
}

/// Slab test; returns entry distance or +inf on miss.
double hit_box(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, double t_max)
{
    double t0 = 0.0;
    double t1 = t_max;
    for (int k = 0; k < 3; ++k) {
        double near = (box.lo[k] - origin[k]) * inv_dir[k];
        double far = (box.hi[k] - origin[k]) * inv_dir[k];
        if (std::isnan(near) || std::isnan(far)) {
            // Ray parallel to the slab and starting on its boundary plane.
            if (origin[k] < box.lo[k] || origin[k] > box.hi[k])
                return std::numeric_limits<double>::infinity();
            continue;
        }
        if (near > far)
            std::swap(near, far);
        // Conservative widening against rounding in the slab distances.
        far *= 1.0 + 4.0 * std::numeric_limits<double>::epsilon();
        t0 = near > t0 ? near : t0;
        t1 = far < t1 ? far : t1;
        if (t0 > t1)
            return std::numeric_limits<double>::infinity();
    }
    return t0;
}

} // namespace

double Aabb::surface_area() const
{
    if (empty())
        return 0.0;
    const Vec3 d = hi - lo;
    return 2.0 * (d.x * d.y + d.y * d.z + d.z * d.x);
}

bool Aabb::contains(const Aabb& b) const
{
    return lo.x <= b.lo.x && lo.y <= b.lo.y && lo.z <= b.lo.z && hi.x >= b.hi.x && hi.y >= b.hi.y &&
           hi.z >= b.hi.z;
}

bool ray_triangle(const WorldTriangle& tri, const Vec3& origin, const Vec3& direction, double& t, double& u,
                  double& v)
{
    const Vec3 e1 = tri.b - tri.a;
    const Vec3 e2 = tri.c - tri.a;
    const Vec3 p = cross(direction, e2);
    const double det = dot(e1, p);
    if (det == 0.0)
        return false;
    const double inv = 1.0 / det;
    const Vec3 s = origin - tri.a;
    u = dot(s, p) * inv;
    if (u < 0.0 || u > 1.0)
        return false;
    const Vec3 q = cross(s, e1);
    v = dot(direction, q) * inv;
    if (v < 0.0 || u + v > 1.0)
        return false;
    t = dot(e2, q) * inv;
    return std::isfinite(t);
}

Bvh::Bvh(std::vector<WorldTriangle> triangles) : triangles_(std::move(triangles)) { build(); }

void Bvh::build()
{
    const auto n = static_cast<std::uint32_t>(triangles_.size());
    order_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i)
        order_[i] = i;
    nodes_.clear();
    if (n == 0)
        return;

    std::vector<Aabb> tri_box(n);
    std::vector<Vec3> tri_centroid(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        tri_box[i] = bounds(triangles_[i]);
        tri_centroid[i] = centroid(triangles_[i]);
    }

    nodes_.reserve(2 * n);
    nodes_.push_back({});
    nodes_[0].first = 0;
    nodes_[0].count = n;

    // Explicit work stack of node indices still to be split.
    std::vector<std::pair<std::uint32_t, int>> pending{{0, 0}};
    while (!pending.empty()) {
        const auto [index, depth] = pending.back();
        pending.pop_back();
        const std::uint32_t first = nodes_[index].first;
        const std::uint32_t count = nodes_[index].count;

        Aabb box;
        Aabb cbox;
        for (std::uint32_t i = first; i < first + count; ++i) {
            box.extend(tri_box[order_[i]]);
            cbox.extend(tri_centroid[order_[i]]);
        }
        nodes_[index].box = box;
        if (count <= kMaxLeafSize)
            continue;

        // Binned SAH over all three axes of the centroid bounds.
        double best_cost = std::numeric_limits<double>::infinity();
        int best_axis = -1;
        int best_split = 0;
        for (int axis = 0; axis < 3; ++axis) {
            const double extent = cbox.hi[axis] - cbox.lo[axis];
            if (!(extent > 0.0))
                continue;
            std::array<Aabb, kBinCount> bin_box;
            std::array<std::uint32_t, kBinCount> bin_count{};
            const double scale = kBinCount / extent;
            for (std::uint32_t i = first; i < first + count; ++i) {
                const auto id = order_[i];
                int b = static_cast<int>((tri_centroid[id][axis] - cbox.lo[axis]) * scale);
                b = std::clamp(b, 0, kBinCount - 1);
                ++bin_count[b];
                bin_box[b].extend(tri_box[id]);
            }
            std::array<double, kBinCount> right_area{};
            std::array<std::uint32_t, kBinCount> right_count{};
            Aabb acc;
            std::uint32_t acc_count = 0;
            for (int b = kBinCount - 1; b > 0; --b) {
                acc.extend(bin_box[b]);
                acc_count += bin_count[b];
                right_area[b] = acc.surface_area();
                right_count[b] = acc_count;
            }
            Aabb left;
            std::uint32_t left_count = 0;
            for (int b = 1; b < kBinCount; ++b) {
                left.extend(bin_box[b - 1]);
                left_count += bin_count[b - 1];
                if (left_count == 0 || right_count[b] == 0)
                    continue;
                const double cost = left.surface_area() * left_count + right_area[b] * right_count[b];
                if (cost < best_cost) {
                    best_cost = cost;
                    best_axis = axis;
                    best_split = b;
                }
            }
        }

        std::uint32_t mid;
        if (depth >= kMaxSahDepth) {
            // Bound the tree depth: object median along the widest centroid axis.
            const Vec3 ext = cbox.hi - cbox.lo;
            const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
            auto begin = order_.begin() + first;
            std::stable_sort(begin, begin + count, [&](std::uint32_t a, std::uint32_t b) {
                return tri_centroid[a][axis] < tri_centroid[b][axis];
            });
            mid = first + count / 2;
        } else if (best_axis >= 0) {
            const double extent = cbox.hi[best_axis] - cbox.lo[best_axis];
            const double scale = kBinCount / extent;
            auto begin = order_.begin() + first;
            auto it = std::stable_partition(begin, begin + count, [&](std::uint32_t id) {
                int b = static_cast<int>((tri_centroid[id][best_axis] - cbox.lo[best_axis]) * scale);
                return std::clamp(b, 0, kBinCount - 1) < best_split;
            });
            mid = static_cast<std::uint32_t>(it - order_.begin());
        } else {
            // All centroids coincide: split the range in half.
            mid = first + count / 2;
        }

        const auto left_index = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back({});
        nodes_.push_back({});
        nodes_[left_index].first = first;
        nodes_[left_index].count = mid - first;
        nodes_[left_index + 1].first = mid;
        nodes_[left_index + 1].count = first + count - mid;
        nodes_[index].first = left_index;
        nodes_[index].count = 0;
        pending.push_back({left_index + 1, depth + 1});
        pending.push_back({left_index, depth + 1});
    }
}

std::optional<RayHit> Bvh::intersect(const Vec3& origin, const Vec3& direction, double t_max) const
{
    if (std::fabs(norm(direction) - 1.0) > 1e-9)
        throw InputError("ray direction must be unit length");
    if (nodes_.empty())
        return std::nullopt;

    const Vec3 inv{1.0 / direction.x, 1.0 / direction.y, 1.0 / direction.z};
    double best_t = t_max;
    std::uint32_t best_id = std::numeric_limits<std::uint32_t>::max();
    double best_u = 0.0;
    double best_v = 0.0;

    std::array<std::uint32_t, 192> stack;
    int top = 0;
    if (hit_box(nodes_[0].box, origin, inv, best_t) <= best_t)
        stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (node.leaf()) {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
                const std::uint32_t id = order_[i];
                double t, u, v;
                if (!ray_triangle(triangles_[id], origin, direction, t, u, v))
                    continue;
                if (t <= kRayEpsilon || t >= t_max)
                    continue;
                if (t < best_t || (t == best_t && id < best_id)) {
                    best_t = t;
                    best_id = id;
                    best_u = u;
                    best_v = v;
                }
            }
            continue;
        }
        const std::uint32_t l = node.first;
        const std::uint32_t r = node.first + 1;
        const double tl = hit_box(nodes_[l].box, origin, inv, best_t);
        const double tr = hit_box(nodes_[r].box, origin, inv, best_t);
        // Push the farther child first so the nearer one is visited next.
        if (tl <= tr) {
            if (tr <= best_t)
                stack[top++] = r;
            if (tl <= best_t)
                stack[top++] = l;
        } else {
            if (tl <= best_t)
                stack[top++] = l;
            if (tr <= best_t)
                stack[top++] = r;
        }
    }
    if (best_id == std::numeric_limits<std::uint32_t>::max())
        return std::nullopt;

    const WorldTriangle& tri = triangles_[best_id];
    RayHit hit;
    hit.t = best_t;
    hit.triangle = best_id;
    hit.normal = normalized(cross(tri.b - tri.a, tri.c - tri.a));
    hit.material = tri.material;
    hit.u = best_u;
    hit.v = best_v;
    return hit;
}

bool Bvh::occluded(const Vec3& origin, const Vec3& direction, double t_max) const
{
    if (nodes_.empty() || !(t_max > kRayEpsilon))
        return false;
    const Vec3 inv{1.0 / direction.x, 1.0 / direction.y, 1.0 / direction.z};
    std::array<std::uint32_t, 192> stack;
    int top = 0;
    if (hit_box(nodes_[0].box, origin, inv, t_max) <= t_max)
        stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (node.leaf()) {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
                double t, u, v;
                if (ray_triangle(triangles_[order_[i]], origin, direction, t, u, v) && t > kRayEpsilon &&
                    t < t_max)
                    return true;
            }
            continue;
        }
        for (std::uint32_t c : {node.first, node.first + 1})
            if (hit_box(nodes_[c].box, origin, inv, t_max) <= t_max)
                stack[top++] = c;
    }
    return false;
}

bool Bvh::segment_blocked(const Vec3& from, const Vec3& to) const
{
    const Vec3 d = to - from;
    const double len = norm(d);
    if (!(len > 2.0 * kRayEpsilon))
        return false;
    return occluded(from, d / len, len - kRayEpsilon);
}

Bvh build_bvh(std::span<const MeshInstance> meshes)
{
    std::vector<WorldTriangle> tris;
    for (const auto& inst : meshes) {
        if (!inst.mesh)
            continue;
        const TriangleMesh& m = *inst.mesh;
        for (std::size_t i = 0; i < m.triangles.size(); ++i) {
            const Triangle& t = m.triangles[i];
            tris.push_back({to_vec3(m.vertices[t[0]]) + inst.translation, to_vec3(m.vertices[t[1]]) + inst.translation,
                            to_vec3(m.vertices[t[2]]) + inst.translation, inst.material + m.material_of(i)});
        }
    }
    return Bvh(std::move(tris));
}

} // namespace citytwin
