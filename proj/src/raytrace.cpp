// SPDX-License-Identifier: Apache-2.0
#include "citytwin/raytrace.hpp"

#include "citytwin/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>

namespace citytwin {

namespace {

/// Image-method intersection parameters must stay this far inside (0, 1).
constexpr double kParamMargin = 1e-9;
/// Barycentric slack for reflection points on shared triangle edges.
constexpr double kBarycentricSlack = 1e-9;
/// Paths whose vertices agree within this distance are the same path.
constexpr double kSamePathTolerance = 1e-6;

using CVec = std::array<cplx, 3>;

CVec to_cvec(const Vec3& v) { return {v.x, v.y, v.z}; }

cplx cdot(const CVec& a, const Vec3& b) { return a[0] * b.x + a[1] * b.y + a[2] * b.z; }

CVec combine(cplx s, const Vec3& u, cplx t, const Vec3& v)
{
    return {s * u.x + t * v.x, s * u.y + t * v.y, s * u.z + t * v.z};
}

Vec3 any_perpendicular(const Vec3& k)
{
    const Vec3 helper = std::fabs(k.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    return normalized(cross(k, helper));
}

/// Specular reflection of the field vector E carried along k_in.
CVec reflect_field(const CVec& field, const Vec3& k_in, const Vec3& normal, const FresnelCoefficients& g)
{
    Vec3 e_perp = cross(k_in, normal);
    const double len = norm(e_perp);
    e_perp = len > 1e-12 ? e_perp / len : any_perpendicular(k_in);
    const Vec3 k_out = reflect(k_in, normal);
    const Vec3 e_par_in = cross(e_perp, k_in);
    const Vec3 e_par_out = cross(e_perp, k_out);
    return combine(g.te * cdot(field, e_perp), e_perp, g.tm * cdot(field, e_par_in), e_par_out);
}

void angles_of(const Vec3& k, double& theta, double& phi)
{
    theta = std::acos(std::clamp(k.z, -1.0, 1.0));
    phi = std::atan2(k.y, k.x);
}

bool point_in_triangle(const WorldTriangle& t, const Vec3& p)
{
    const Vec3 v0 = t.b - t.a;
    const Vec3 v1 = t.c - t.a;
    const Vec3 v2 = p - t.a;
    const double d00 = dot(v0, v0);
    const double d01 = dot(v0, v1);
    const double d11 = dot(v1, v1);
    const double d20 = dot(v2, v0);
    const double d21 = dot(v2, v1);
    const double denom = d00 * d11 - d01 * d01;
    if (!(denom > 0.0))
        return false;
    const double v = (d11 * d20 - d01 * d21) / denom;
    const double w = (d00 * d21 - d01 * d20) / denom;
    return v >= -kBarycentricSlack && w >= -kBarycentricSlack && v + w <= 1.0 + kBarycentricSlack;
}

bool same_geometry(const PropagationPath& a, const PropagationPath& b)
{
    if (a.vertices.size() != b.vertices.size())
        return false;
    for (std::size_t i = 0; i < a.vertices.size(); ++i)
        if (norm(a.vertices[i] - b.vertices[i]) > kSamePathTolerance)
            return false;
    return true;
}

} // namespace

void RtConfig::validate() const
{
    if (max_reflections < 0)
        throw ConfigError("max_reflections must be >= 0");
    if (n_launch_rays < 1)
        throw ConfigError("n_launch_rays must be >= 1");
    if (enable_scattering)
        throw ConfigError("diffuse scattering is not implemented; set enable_scattering = false");
    if (capture_mode == CaptureMode::fixed && !(capture_radius_m > 0.0))
        throw ConfigError("fixed capture radius must be positive");
}

void spherical_basis(const Vec3& k, Vec3& theta_hat, Vec3& phi_hat)
{
    double theta, phi;
    angles_of(k, theta, phi);
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cp = std::cos(phi), sp = std::sin(phi);
    theta_hat = {ct * cp, ct * sp, -st};
    phi_hat = {-sp, cp, 0.0};
}

std::string PropagationPath::signature() const
{
    std::string out;
    for (const auto& it : interactions) {
        if (!out.empty())
            out += '-';
        switch (it.type) {
        case InteractionType::los:
            out += "LOS";
            break;
        case InteractionType::reflect:
            out += "R" + std::to_string(it.id);
            break;
        case InteractionType::diffract:
            out += "D" + std::to_string(it.id);
            break;
        }
    }
    return out;
}

std::vector<Vec3> fibonacci_directions(std::size_t n)
{
    if (n < 1)
        throw InputError("fibonacci_directions needs n >= 1");
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> out(n);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) * inv;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * static_cast<double>(i);
        out[i] = {r * std::cos(phi), r * std::sin(phi), z};
    }
    return out;
}

RayLaunch::RayLaunch(const SceneGeometry& geometry, const Vec3& source, const RtConfig& cfg)
    : source_(source), mode_(cfg.capture_mode),
      capture_scale_(std::sqrt(4.0 * std::numbers::pi / static_cast<double>(cfg.n_launch_rays))),
      fixed_radius_(cfg.capture_radius_m)
{
    cfg.validate();
    if (cfg.max_reflections == 0 || geometry.bvh().empty())
        return;
    const double far = 10.0 * geometry.extent() + norm(source);
    std::map<std::vector<std::uint32_t>, std::uint32_t> seq_index;

    for (const Vec3& dir0 : fibonacci_directions(cfg.n_launch_rays)) {
        Vec3 origin = source;
        Vec3 dir = dir0;
        double travelled = 0.0;
        std::vector<std::uint32_t> seq;
        for (int bounce = 0; bounce <= cfg.max_reflections; ++bounce) {
            const auto hit = geometry.bvh().intersect(origin, dir, far);
            const double len = hit ? hit->t : far;
            if (bounce > 0) {
                auto [it, inserted] = seq_index.try_emplace(seq, static_cast<std::uint32_t>(sequences_.size()));
                if (inserted)
                    sequences_.push_back(seq);
                const double radius = radius_at(travelled + len);
                Aabb box;
                box.extend(origin);
                box.extend(origin + dir * len);
                box.lo -= Vec3{radius, radius, radius};
                box.hi += Vec3{radius, radius, radius};
                seg_origin_.push_back(origin);
                seg_dir_.push_back(dir);
                seg_len_.push_back(len);
                seg_start_.push_back(travelled);
                seg_seq_.push_back(it->second);
                seg_box_.push_back(box);
            }
            if (!hit || bounce == cfg.max_reflections)
                break;
            const std::uint32_t facet = geometry.facet_of(hit->triangle);
            if (!seq.empty() && seq.back() == facet)
                break;
            seq.push_back(facet);
            origin = origin + dir * hit->t;
            dir = normalized(reflect(dir, hit->normal));
            travelled += hit->t;
        }
    }

    Aabb region = geometry.bvh().nodes().front().box;
    region.extend(source);
    build_index(region);
}

double RayLaunch::radius_at(double distance) const
{
    return mode_ == CaptureMode::fixed ? fixed_radius_ : distance * capture_scale_;
}

void RayLaunch::build_index(const Aabb& region)
{
    constexpr double kCellsPerSide = 48.0;
    const double wx = region.hi.x - region.lo.x;
    const double wy = region.hi.y - region.lo.y;
    grid_cell_ = std::max(std::max(wx, wy) / kCellsPerSide, 1.0);
    grid_x0_ = region.lo.x;
    grid_y0_ = region.lo.y;
    grid_nx_ = static_cast<std::size_t>(std::floor(wx / grid_cell_)) + 1;
    grid_ny_ = static_cast<std::size_t>(std::floor(wy / grid_cell_)) + 1;
    grid_.assign(grid_nx_ * grid_ny_, {});
    const double x1 = grid_x0_ + grid_cell_ * static_cast<double>(grid_nx_);
    const double y1 = grid_y0_ + grid_cell_ * static_cast<double>(grid_ny_);

    auto cell_range = [&](double lo, double hi, double origin, std::size_t n) {
        const double a = std::floor((lo - origin) / grid_cell_);
        const double b = std::floor((hi - origin) / grid_cell_);
        const double last = static_cast<double>(n - 1);
        return std::pair<std::size_t, std::size_t>{static_cast<std::size_t>(std::clamp(a, 0.0, last)),
                                                   static_cast<std::size_t>(std::clamp(b, 0.0, last))};
    };

    for (std::uint32_t i = 0; i < seg_origin_.size(); ++i) {
        const Vec3& o = seg_origin_[i];
        const Vec3& d = seg_dir_[i];
        const double r_max = radius_at(seg_start_[i] + seg_len_[i]) * (1.0 + 1e-9) + 1e-9;
        // Part of the segment whose x/y stays within r_max of the grid.
        double s0 = 0.0;
        double s1 = seg_len_[i];
        const double lo[2] = {grid_x0_ - r_max, grid_y0_ - r_max};
        const double hi[2] = {x1 + r_max, y1 + r_max};
        const double org[2] = {o.x, o.y};
        const double dir[2] = {d.x, d.y};
        for (int k = 0; k < 2 && s0 <= s1; ++k) {
            if (std::fabs(dir[k]) < 1e-300) {
                if (org[k] < lo[k] || org[k] > hi[k])
                    s1 = -1.0;
                continue;
            }
            double ta = (lo[k] - org[k]) / dir[k];
            double tb = (hi[k] - org[k]) / dir[k];
            if (ta > tb)
                std::swap(ta, tb);
            s0 = std::max(s0, ta);
            s1 = std::min(s1, tb);
        }
        if (s0 > s1)
            continue;
        for (double a = s0; a <= s1;) {
            const double b = std::min(a + grid_cell_, s1);
            const Vec3 p0 = o + d * a;
            const Vec3 p1 = o + d * b;
            const double r = radius_at(seg_start_[i] + b) * (1.0 + 1e-9) + 1e-9;
            const auto [ix0, ix1] = cell_range(std::min(p0.x, p1.x) - r, std::max(p0.x, p1.x) + r, grid_x0_, grid_nx_);
            const auto [iy0, iy1] = cell_range(std::min(p0.y, p1.y) - r, std::max(p0.y, p1.y) + r, grid_y0_, grid_ny_);
            for (std::size_t iy = iy0; iy <= iy1; ++iy)
                for (std::size_t ix = ix0; ix <= ix1; ++ix) {
                    auto& cell = grid_[iy * grid_nx_ + ix];
                    if (cell.empty() || cell.back() != i)
                        cell.push_back(i);
                }
            if (b >= s1)
                break;
            a = b;
        }
    }
}

std::vector<std::vector<std::uint32_t>> RayLaunch::captured_sequences(const Vec3& point) const
{
    std::vector<std::uint32_t> ids;
    const std::vector<std::uint32_t>* candidates = nullptr;
    if (grid_nx_ > 0) {
        const double fx = std::floor((point.x - grid_x0_) / grid_cell_);
        const double fy = std::floor((point.y - grid_y0_) / grid_cell_);
        if (fx >= 0.0 && fy >= 0.0 && fx < static_cast<double>(grid_nx_) && fy < static_cast<double>(grid_ny_))
            candidates = &grid_[static_cast<std::size_t>(fy) * grid_nx_ + static_cast<std::size_t>(fx)];
    }
    const std::size_t n = candidates ? candidates->size() : seg_origin_.size();
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t i = candidates ? (*candidates)[c] : c;
        const Aabb& box = seg_box_[i];
        if (point.x < box.lo.x || point.x > box.hi.x || point.y < box.lo.y || point.y > box.hi.y ||
            point.z < box.lo.z || point.z > box.hi.z)
            continue;
        const Vec3 rel = point - seg_origin_[i];
        const double s = std::clamp(dot(rel, seg_dir_[i]), 0.0, seg_len_[i]);
        const double dist = norm(rel - seg_dir_[i] * s);
        if (dist <= radius_at(seg_start_[i] + s))
            ids.push_back(seg_seq_[i]);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<std::vector<std::uint32_t>> out;
    out.reserve(ids.size());
    for (auto id : ids)
        out.push_back(sequences_[id]);
    std::sort(out.begin(), out.end());
    return out;
}

bool solve_reflection_path(const SceneGeometry& geometry, const Vec3& tx, const Vec3& rx,
                           const std::vector<std::uint32_t>& facets, PropagationPath& path)
{
    const std::size_t k = facets.size();
    if (k == 0)
        return false;
    const auto& all = geometry.facets();
    for (std::size_t j = 1; j < k; ++j)
        if (facets[j] == facets[j - 1])
            return false;

    std::vector<Vec3> images(k + 1);
    images[0] = tx;
    for (std::size_t j = 0; j < k; ++j) {
        const Facet& f = all[facets[j]];
        images[j + 1] = mirror(images[j], f.normal, f.offset);
    }

    std::vector<Vec3> points(k);
    std::vector<std::uint32_t> hit_triangles(k);
    Vec3 target = rx;
    for (std::size_t jj = k; jj-- > 0;) {
        const Facet& f = all[facets[jj]];
        const Vec3 from = images[jj + 1];
        const Vec3 d = target - from;
        const double denom = dot(f.normal, d);
        if (std::fabs(denom) < 1e-12)
            return false;
        const double t = (f.offset - dot(f.normal, from)) / denom;
        if (!(t > kParamMargin && t < 1.0 - kParamMargin))
            return false;
        const Vec3 q = from + d * t;
        bool inside = false;
        for (std::uint32_t tri : f.triangles)
            if (point_in_triangle(geometry.bvh().triangles()[tri], q)) {
                hit_triangles[jj] = tri;
                inside = true;
                break;
            }
        if (!inside)
            return false;
        points[jj] = q;
        target = q;
    }

    std::vector<Vec3> vertices;
    vertices.reserve(k + 2);
    vertices.push_back(tx);
    vertices.insert(vertices.end(), points.begin(), points.end());
    vertices.push_back(rx);
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i)
        if (geometry.bvh().segment_blocked(vertices[i], vertices[i + 1]))
            return false;

    double length = 0.0;
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i)
        length += norm(vertices[i + 1] - vertices[i]);

    const Vec3 k0 = normalized(vertices[1] - vertices[0]);
    Vec3 th_tx, ph_tx;
    spherical_basis(k0, th_tx, ph_tx);
    CVec field_theta = to_cvec(th_tx);
    CVec field_phi = to_cvec(ph_tx);
    for (std::size_t j = 0; j < k; ++j) {
        const Vec3 k_in = normalized(vertices[j + 1] - vertices[j]);
        const Facet& f = all[facets[j]];
        const double cos_i = std::fabs(dot(k_in, f.normal));
        const FresnelCoefficients g = fresnel_coefficients(cos_i, geometry.eta(f.material));
        field_theta = reflect_field(field_theta, k_in, f.normal, g);
        field_phi = reflect_field(field_phi, k_in, f.normal, g);
    }
    const Vec3 k_last = normalized(vertices[k + 1] - vertices[k]);
    Vec3 th_rx, ph_rx;
    spherical_basis(-k_last, th_rx, ph_rx);
    const double spread = geometry.wavelength() / (4.0 * std::numbers::pi * length);

    path = PropagationPath{};
    for (std::size_t j = 0; j < k; ++j)
        path.interactions.push_back({InteractionType::reflect, hit_triangles[j]});
    path.vertices = std::move(vertices);
    path.length = length;
    path.delay = length / kSpeedOfLight;
    path.amplitude = {spread * cdot(field_theta, th_rx), spread * cdot(field_phi, th_rx),
                      spread * cdot(field_theta, ph_rx), spread * cdot(field_phi, ph_rx)};
    angles_of(k0, path.aod_theta, path.aod_phi);
    angles_of(-k_last, path.aoa_theta, path.aoa_phi);
    path.facets = facets;
    return true;
}

namespace {

std::vector<PropagationPath> assemble(const SceneGeometry& geometry, const Vec3& tx, const Vec3& rx,
                                      const RtConfig& cfg, const std::vector<std::vector<std::uint32_t>>& sequences)
{
    std::vector<PropagationPath> out;
    const bool los_visible = !geometry.bvh().segment_blocked(tx, rx);
    if (los_visible && norm(rx - tx) > 0.0) {
        PropagationPath p;
        p.interactions = {{InteractionType::los, 0}};
        p.vertices = {tx, rx};
        p.length = norm(rx - tx);
        p.delay = p.length / kSpeedOfLight;
        const Vec3 k = (rx - tx) / p.length;
        Vec3 th_tx, ph_tx, th_rx, ph_rx;
        spherical_basis(k, th_tx, ph_tx);
        spherical_basis(-k, th_rx, ph_rx);
        const double spread = geometry.wavelength() / (4.0 * std::numbers::pi * p.length);
        p.amplitude = {spread * dot(th_tx, th_rx), spread * dot(ph_tx, th_rx), spread * dot(th_tx, ph_rx),
                       spread * dot(ph_tx, ph_rx)};
        angles_of(k, p.aod_theta, p.aod_phi);
        angles_of(-k, p.aoa_theta, p.aoa_phi);
        out.push_back(std::move(p));
    }

    std::vector<PropagationPath> reflected;
    for (const auto& seq : sequences) {
        if (static_cast<int>(seq.size()) > cfg.max_reflections)
            continue;
        PropagationPath p;
        if (!solve_reflection_path(geometry, tx, rx, seq, p))
            continue;
        bool duplicate = false;
        for (const auto& q : reflected)
            if (same_geometry(p, q)) {
                duplicate = true;
                break;
            }
        if (!duplicate)
            reflected.push_back(std::move(p));
    }
    for (auto& p : reflected)
        out.push_back(std::move(p));

    if (cfg.enable_diffraction)
        for (auto& p : diffraction_paths(geometry, tx, rx, los_visible))
            out.push_back(std::move(p));

    std::stable_sort(out.begin(), out.end(), [](const PropagationPath& a, const PropagationPath& b) {
        const std::string sa = a.signature();
        const std::string sb = b.signature();
        if (sa != sb)
            return sa < sb;
        return a.length < b.length;
    });
    return out;
}

} // namespace

std::vector<PropagationPath> trace_paths(const SceneGeometry& geometry, const RayLaunch& launch, const Vec3& rx,
                                         const RtConfig& cfg)
{
    cfg.validate();
    return assemble(geometry, launch.source(), rx, cfg, launch.captured_sequences(rx));
}

std::vector<PropagationPath> trace_paths(const SceneGeometry& geometry, const Vec3& tx, const Vec3& rx,
                                         const RtConfig& cfg)
{
    cfg.validate();
    std::set<std::vector<std::uint32_t>> sequences;
    if (cfg.max_reflections > 0) {
        const RayLaunch from_tx(geometry, tx, cfg);
        for (auto& s : from_tx.captured_sequences(rx))
            sequences.insert(std::move(s));
        const RayLaunch from_rx(geometry, rx, cfg);
        for (auto s : from_rx.captured_sequences(tx)) {
            std::reverse(s.begin(), s.end());
            sequences.insert(std::move(s));
        }
    }
    return assemble(geometry, tx, rx, cfg, {sequences.begin(), sequences.end()});
}

std::string paths_to_csv(const std::vector<PropagationPath>& paths)
{
    std::string out = "type,length_m,delay_ns,gain_db,aod_theta_deg,aod_phi_deg,aoa_theta_deg,aoa_phi_deg\n";
    constexpr double deg = 180.0 / std::numbers::pi;
    char buf[512];
    for (const auto& p : paths) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.signature().c_str(),
                      p.length, p.delay * 1e9, 20.0 * std::log10(std::abs(p.amplitude[0])), p.aod_theta * deg,
                      p.aod_phi * deg, p.aoa_theta * deg, p.aoa_phi * deg);
        out += buf;
    }
    return out;
}

} // namespace citytwin
