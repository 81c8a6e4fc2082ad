// SPDX-License-Identifier: Apache-2.0
//
// Edge-collapse decimation driven by quadric error metrics (Garland & Heckbert).
// Vertex quadrics accumulate area-weighted face planes plus stiff constraint
// planes along open boundaries. Collapses are processed from a lazy min-heap
// keyed by (cost, vertex pair) so the result is deterministic.
#include "citytwin/error.hpp"
#include "citytwin/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <tuple>

namespace citytwin {

namespace {

/// Symmetric 4x4 quadric stored as its 10 unique coefficients.
struct Quadric {
    double a2 = 0, ab = 0, ac = 0, ad = 0, b2 = 0, bc = 0, bd = 0, c2 = 0, cd = 0, d2 = 0;

    static Quadric plane(const Vec3& n, double d, double w)
    {
        Quadric q;
        q.a2 = w * n.x * n.x;
        q.ab = w * n.x * n.y;
        q.ac = w * n.x * n.z;
        q.ad = w * n.x * d;
        q.b2 = w * n.y * n.y;
        q.bc = w * n.y * n.z;
        q.bd = w * n.y * d;
        q.c2 = w * n.z * n.z;
        q.cd = w * n.z * d;
        q.d2 = w * d * d;
        return q;
    }

    Quadric& operator+=(const Quadric& o)
    {
        a2 += o.a2;
        ab += o.ab;
        ac += o.ac;
        ad += o.ad;
        b2 += o.b2;
        bc += o.bc;
        bd += o.bd;
        c2 += o.c2;
        cd += o.cd;
        d2 += o.d2;
        return *this;
    }

    double error(const Vec3& v) const
    {
        return a2 * v.x * v.x + 2 * ab * v.x * v.y + 2 * ac * v.x * v.z + 2 * ad * v.x + b2 * v.y * v.y +
               2 * bc * v.y * v.z + 2 * bd * v.y + c2 * v.z * v.z + 2 * cd * v.z + d2;
    }

    /// Minimizer of the quadric, if the 3x3 system is well conditioned.
    bool optimum(Vec3& out) const
    {
        const double det = a2 * (b2 * c2 - bc * bc) - ab * (ab * c2 - bc * ac) + ac * (ab * bc - b2 * ac);
        const double scale = std::max({std::fabs(a2), std::fabs(b2), std::fabs(c2), 1e-300});
        if (std::fabs(det) < 1e-12 * scale * scale * scale)
            return false;
        const double inv = 1.0 / det;
        const Vec3 rhs{-ad, -bd, -cd};
        out.x = inv * (rhs.x * (b2 * c2 - bc * bc) - ab * (rhs.y * c2 - bc * rhs.z) +
                       ac * (rhs.y * bc - b2 * rhs.z));
        out.y = inv * (a2 * (rhs.y * c2 - bc * rhs.z) - rhs.x * (ab * c2 - bc * ac) +
                       ac * (ab * rhs.z - rhs.y * ac));
        out.z = inv * (a2 * (b2 * rhs.z - rhs.y * bc) - ab * (ab * rhs.z - rhs.y * ac) +
                       rhs.x * (ab * bc - b2 * ac));
        return is_finite(out);
    }
};

struct Candidate {
    double cost;
    std::uint32_t a;
    std::uint32_t b;
    std::uint32_t version_a;
    std::uint32_t version_b;
    Vec3 target;

    bool operator>(const Candidate& o) const
    {
        return std::tie(cost, a, b) > std::tie(o.cost, o.a, o.b);
    }
};

class Decimator {
public:
    explicit Decimator(const TriangleMesh& mesh) : mesh_(mesh)
    {
        positions_.reserve(mesh.vertices.size());
        for (const auto& v : mesh.vertices)
            positions_.push_back(to_vec3(v));
        tris_ = mesh.triangles;
        alive_.assign(tris_.size(), true);
        alive_count_ = tris_.size();
        incident_.resize(positions_.size());
        for (std::uint32_t t = 0; t < tris_.size(); ++t)
            for (auto v : tris_[t])
                incident_[v].push_back(t);
        version_.assign(positions_.size(), 0);
        removed_.assign(positions_.size(), false);
        locked_.assign(positions_.size(), false);
        for (std::uint32_t v = 0; v < positions_.size(); ++v) {
            std::set<std::uint16_t> mats;
            for (auto t : incident_[v])
                mats.insert(mesh.material_of(t));
            locked_[v] = mats.size() > 1;
        }
        build_quadrics();
    }

    TriangleMesh run(std::size_t target)
    {
        std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
        for (const auto& t : tris_)
            for (int k = 0; k < 3; ++k)
                edges.insert(std::minmax(t[k], t[(k + 1) % 3]));
        for (const auto& [a, b] : edges)
            push(a, b);

        while (alive_count_ > target && !heap_.empty()) {
            const Candidate c = heap_.top();
            heap_.pop();
            if (removed_[c.a] || removed_[c.b] || version_[c.a] != c.version_a || version_[c.b] != c.version_b)
                continue;
            if (!can_collapse(c.a, c.b, c.target))
                continue;
            collapse(c.a, c.b, c.target);
        }
        if (alive_count_ > target)
            throw Error("simplification stalled at " + std::to_string(alive_count_) + " triangles (target " +
                        std::to_string(target) + ")");
        return compact();
    }

private:
    Vec3 face_normal(const Triangle& t) const
    {
        return cross(positions_[t[1]] - positions_[t[0]], positions_[t[2]] - positions_[t[0]]);
    }

    void build_quadrics()
    {
        quadrics_.assign(positions_.size(), Quadric{});
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::uint32_t>> edge_faces;
        for (std::uint32_t t = 0; t < tris_.size(); ++t) {
            const Vec3 n2 = face_normal(tris_[t]);
            const double len = norm(n2);
            if (len == 0.0)
                continue;
            const Vec3 n = n2 / len;
            const Quadric q = Quadric::plane(n, -dot(n, positions_[tris_[t][0]]), 0.5 * len);
            for (auto v : tris_[t])
                quadrics_[v] += q;
            for (int k = 0; k < 3; ++k)
                edge_faces[std::minmax(tris_[t][k], tris_[t][(k + 1) % 3])].push_back(t);
        }
        // Boundary edges get a stiff plane orthogonal to their face.
        for (const auto& [edge, faces] : edge_faces) {
            if (faces.size() != 1)
                continue;
            const Vec3 fn2 = face_normal(tris_[faces[0]]);
            const Vec3 e = positions_[edge.second] - positions_[edge.first];
            const Vec3 c = cross(e, fn2);
            const double len = norm(c);
            if (len == 0.0)
                continue;
            const Vec3 n = c / len;
            const Quadric q = Quadric::plane(n, -dot(n, positions_[edge.first]), 1000.0 * dot(e, e));
            quadrics_[edge.first] += q;
            quadrics_[edge.second] += q;
        }
    }

    void push(std::uint32_t a, std::uint32_t b)
    {
        if (a > b)
            std::swap(a, b);
        if (locked_[a] || locked_[b])
            return;
        Quadric q = quadrics_[a];
        q += quadrics_[b];
        Vec3 best;
        double best_cost = std::numeric_limits<double>::infinity();
        Vec3 opt;
        if (q.optimum(opt)) {
            best = opt;
            best_cost = q.error(opt);
        }
        for (const Vec3& p : {positions_[a], positions_[b], (positions_[a] + positions_[b]) * 0.5}) {
            const double e = q.error(p);
            if (e < best_cost) {
                best_cost = e;
                best = p;
            }
        }
        heap_.push({std::max(best_cost, 0.0), a, b, version_[a], version_[b], best});
    }

    std::set<std::uint32_t> neighbours(std::uint32_t v) const
    {
        std::set<std::uint32_t> out;
        for (auto t : incident_[v])
            if (alive_[t])
                for (auto w : tris_[t])
                    if (w != v)
                        out.insert(w);
        return out;
    }

    bool can_collapse(std::uint32_t a, std::uint32_t b, const Vec3& target) const
    {
        std::set<std::uint32_t> opposite;
        std::size_t shared = 0;
        for (auto t : incident_[a]) {
            if (!alive_[t])
                continue;
            const Triangle& tri = tris_[t];
            if (std::find(tri.begin(), tri.end(), b) == tri.end())
                continue;
            ++shared;
            for (auto w : tri)
                if (w != a && w != b)
                    opposite.insert(w);
        }
        if (shared == 0)
            return false;

        // Link condition keeps the surface manifold.
        const auto na = neighbours(a);
        const auto nb = neighbours(b);
        std::vector<std::uint32_t> common;
        std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(common));
        if (common.size() != opposite.size())
            return false;

        // Reject fold-overs and slivers in the one-ring of both endpoints.
        for (auto v : {a, b}) {
            for (auto t : incident_[v]) {
                if (!alive_[t])
                    continue;
                const Triangle& tri = tris_[t];
                if (std::find(tri.begin(), tri.end(), a) != tri.end() &&
                    std::find(tri.begin(), tri.end(), b) != tri.end())
                    continue;
                const Vec3 before = face_normal(tri);
                Triangle moved = tri;
                for (auto& w : moved)
                    if (w == a || w == b)
                        w = std::numeric_limits<std::uint32_t>::max();
                Vec3 p[3];
                for (int k = 0; k < 3; ++k)
                    p[k] = moved[k] == std::numeric_limits<std::uint32_t>::max() ? target : positions_[moved[k]];
                const Vec3 after = cross(p[1] - p[0], p[2] - p[0]);
                const double la = norm(after);
                const double lb = norm(before);
                if (0.5 * la < 10.0 * kDegenerateArea)
                    return false;
                if (dot(before, after) < 0.2 * la * lb)
                    return false;
            }
        }
        return true;
    }

    void collapse(std::uint32_t a, std::uint32_t b, const Vec3& target)
    {
        positions_[a] = target;
        quadrics_[a] += quadrics_[b];
        removed_[b] = true;
        for (auto t : incident_[b]) {
            if (!alive_[t])
                continue;
            Triangle& tri = tris_[t];
            if (std::find(tri.begin(), tri.end(), a) != tri.end()) {
                alive_[t] = false;
                --alive_count_;
                continue;
            }
            for (auto& w : tri)
                if (w == b)
                    w = a;
            incident_[a].push_back(t);
        }
        incident_[b].clear();
        auto& inc = incident_[a];
        inc.erase(std::remove_if(inc.begin(), inc.end(), [this](std::uint32_t t) { return !alive_[t]; }),
                  inc.end());
        std::sort(inc.begin(), inc.end());
        inc.erase(std::unique(inc.begin(), inc.end()), inc.end());

        // Every edge touching the new one-ring is stale now.
        auto ring = neighbours(a);
        ring.insert(a);
        for (auto w : ring)
            ++version_[w];
        std::set<std::pair<std::uint32_t, std::uint32_t>> fresh;
        for (auto w : ring)
            for (auto x : neighbours(w))
                fresh.insert(std::minmax(w, x));
        for (const auto& [u, v] : fresh)
            push(u, v);
    }

    TriangleMesh compact() const
    {
        TriangleMesh out;
        std::vector<std::uint32_t> remap(positions_.size(), std::numeric_limits<std::uint32_t>::max());
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            if (!alive_[t])
                continue;
            Triangle tri;
            for (int k = 0; k < 3; ++k) {
                const auto v = tris_[t][k];
                if (remap[v] == std::numeric_limits<std::uint32_t>::max()) {
                    remap[v] = static_cast<std::uint32_t>(out.vertices.size());
                    out.vertices.push_back({static_cast<float>(positions_[v].x), static_cast<float>(positions_[v].y),
                                            static_cast<float>(positions_[v].z)});
                }
                tri[k] = remap[v];
            }
            out.triangles.push_back(tri);
            if (!mesh_.triangle_materials.empty())
                out.triangle_materials.push_back(mesh_.triangle_materials[t]);
        }
        return out;
    }

    const TriangleMesh& mesh_;
    std::vector<Vec3> positions_;
    std::vector<Triangle> tris_;
    std::vector<bool> alive_;
    std::size_t alive_count_ = 0;
    std::vector<std::vector<std::uint32_t>> incident_;
    std::vector<std::uint32_t> version_;
    std::vector<bool> removed_;
    std::vector<bool> locked_;
    std::vector<Quadric> quadrics_;
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap_;
};

} // namespace

TriangleMesh simplify(const TriangleMesh& mesh, std::size_t target_triangles)
{
    if (target_triangles < 4)
        throw InputError("simplification target below the smallest closed surface (4 triangles)");
    if (target_triangles >= mesh.triangles.size())
        return mesh;
    if (!validate(mesh).clean())
        throw InputError("mesh must pass validation before simplification");
    return Decimator(mesh).run(target_triangles);
}

} // namespace citytwin
