// SPDX-License-Identifier: Apache-2.0
//
// Deterministic radio ray tracer. Reflection paths are discovered by shooting
// a Fibonacci fan of rays and bouncing them specularly; every discovered
// sequence of reflecting planes is then solved exactly with the image method
// and checked for occlusion. Single-edge diffraction uses the heuristic UTD.
#pragma once

#include "citytwin/bvh.hpp"
#include "citytwin/scene.hpp"
#include "citytwin/vec3.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace citytwin {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;

enum class CaptureMode { automatic, fixed };

struct RtConfig {
    int max_reflections = 3;
    bool enable_diffraction = true;
    /// Diffuse scattering is not implemented; validate() rejects true.
    bool enable_scattering = false;
    std::size_t n_launch_rays = 10000;
    CaptureMode capture_mode = CaptureMode::automatic;
    /// Capture radius in meters when capture_mode is fixed.
    double capture_radius_m = 1.0;

    /// Throws ConfigError.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Materials and Fresnel coefficients

/// η = εr − jσ/(2π f ε0).
cplx complex_permittivity(double relative_permittivity, double conductivity, double f_hz);
cplx complex_permittivity(const Material& m, double f_hz);

struct FresnelCoefficients {
    /// Perpendicular (TE) polarization.
    cplx te;
    /// Parallel (TM) polarization.
    cplx tm;
};

/// Reflection coefficients for incidence cosine `cos_theta_i` in [0, 1].
FresnelCoefficients fresnel_coefficients(double cos_theta_i, cplx eta);

// ---------------------------------------------------------------------------
// Geometry prepared for tracing

/// Set of coplanar triangles with one material; the unit of specular reflection.
struct Facet {
    Vec3 normal;
    double offset = 0.0;
    std::uint32_t material = 0;
    std::vector<std::uint32_t> triangles;
};

/// Mesh edge usable for diffraction. Face 0 lies at wedge angle 0 and face 1
/// at nπ; a boundary edge of an open surface is a half-plane (n = 2).
struct Edge {
    Vec3 a;
    Vec3 b;
    /// Unit tangent of face 0, perpendicular to the edge and pointing into the face.
    Vec3 t0;
    /// Unit normal of face 0 pointing into the exterior wedge.
    Vec3 n0;
    /// Unit vector along the edge with e = t0 × n0.
    Vec3 e;
    double n = 2.0;
    std::uint32_t material0 = 0;
    std::uint32_t materialn = 0;
    /// Outward normal of face n (equals -n0 for a half-plane).
    Vec3 nn;
    bool half_plane = true;
};

/// Immutable traceable form of a scene at one carrier frequency.
class SceneGeometry {
public:
    struct Input {
        std::vector<WorldTriangle> triangles;
        /// Triangles that belong to the ground; they never yield diffraction edges.
        std::vector<bool> ground;
        std::vector<Material> materials;
    };

    SceneGeometry(Input input, double f_hz);

    const Bvh& bvh() const { return bvh_; }
    const std::vector<Facet>& facets() const { return facets_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::uint32_t facet_of(std::uint32_t triangle) const { return triangle_facet_[triangle]; }
    const std::vector<Material>& materials() const { return materials_; }
    cplx eta(std::uint32_t material) const { return eta_[material]; }
    double frequency() const { return frequency_; }
    double wavelength() const { return kSpeedOfLight / frequency_; }
    bool is_ground(std::uint32_t triangle) const { return ground_[triangle]; }
    /// Diagonal of the geometry bounding box (at least 1 m).
    double extent() const { return extent_; }

private:
    void build_facets();
    void build_edges();

    Bvh bvh_;
    std::vector<bool> ground_;
    std::vector<Material> materials_;
    std::vector<cplx> eta_;
    std::vector<Facet> facets_;
    std::vector<std::uint32_t> triangle_facet_;
    std::vector<Edge> edges_;
    double frequency_;
    double extent_ = 1.0;
};

/// World geometry of every placed mesh (ground included) with material slots
/// resolved through `materials`. Warns for materials used outside their band.
SceneGeometry build_scene_geometry(const Scene& scene, const MaterialTable& materials, double f_hz);

// ---------------------------------------------------------------------------
// Paths

enum class InteractionType { los, reflect, diffract };

struct Interaction {
    InteractionType type = InteractionType::los;
    /// Triangle id for reflections, edge id for diffractions, 0 for LOS.
    std::uint32_t id = 0;
    friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Row-major 2×2 complex matrix.
using Mat2 = std::array<cplx, 4>;

struct PropagationPath {
    std::vector<Interaction> interactions;
    /// Transmitter, interaction points, receiver.
    std::vector<Vec3> vertices;
    double length = 0.0;
    double delay = 0.0;
    /// Field transfer from the transmitter (θ̂, φ̂) basis at departure to the
    /// receiver (θ̂, φ̂) basis at arrival; entry 0 is θθ. Free-space spreading
    /// is included, the propagation phase e^{-jkd} is not.
    Mat2 amplitude{};
    /// Departure and arrival directions as zenith/azimuth angles (radians) in
    /// the local frame; arrival points from the receiver toward the last vertex.
    double aod_theta = 0.0;
    double aod_phi = 0.0;
    double aoa_theta = 0.0;
    double aoa_phi = 0.0;

    /// "LOS", "R12-R40", "D7" ...
    std::string signature() const;
    /// Facet sequence used for deduplication (reflections only).
    std::vector<std::uint32_t> facets;
};

/// Golden-angle spiral of `n` unit vectors (n ≥ 1).
std::vector<Vec3> fibonacci_directions(std::size_t n);

/// Shoot-and-bounce record of one transmitter, reusable for many receivers.
class RayLaunch {
public:
    RayLaunch(const SceneGeometry& geometry, const Vec3& source, const RtConfig& cfg);

    /// Facet sequences whose ray tubes capture `point`, sorted and unique.
    std::vector<std::vector<std::uint32_t>> captured_sequences(const Vec3& point) const;
    const Vec3& source() const { return source_; }
    std::size_t segment_count() const { return seg_origin_.size(); }

private:
    double radius_at(double distance) const;
    void build_index(const Aabb& region);

    Vec3 source_;
    CaptureMode mode_;
    double capture_scale_;
    double fixed_radius_;
    std::vector<std::vector<std::uint32_t>> sequences_;
    std::vector<Vec3> seg_origin_;
    std::vector<Vec3> seg_dir_;
    std::vector<double> seg_len_;
    std::vector<double> seg_start_;
    std::vector<std::uint32_t> seg_seq_;
    std::vector<Aabb> seg_box_;
    // Conservative x/y grid over the capture tubes; points outside it scan every segment.
    double grid_x0_ = 0.0;
    double grid_y0_ = 0.0;
    double grid_cell_ = 1.0;
    std::size_t grid_nx_ = 0;
    std::size_t grid_ny_ = 0;
    std::vector<std::vector<std::uint32_t>> grid_;
};

/// Exact image-method solution of one facet sequence between two points.
/// Returns false when the specular path does not exist or is occluded.
bool solve_reflection_path(const SceneGeometry& geometry, const Vec3& tx, const Vec3& rx,
                           const std::vector<std::uint32_t>& facets, PropagationPath& path);

/// Single-edge diffraction paths between two points.
std::vector<PropagationPath> diffraction_paths(const SceneGeometry& geometry, const Vec3& tx, const Vec3& rx,
                                               bool los_visible);

/// Every path between tx and rx. Reflection sequences are discovered by
/// launches from both ends so that swapping tx and rx yields the same set.
std::vector<PropagationPath> trace_paths(const SceneGeometry& geometry, const Vec3& tx, const Vec3& rx,
                                         const RtConfig& cfg);

/// Same as trace_paths with a precomputed launch from tx (one-sided discovery).
std::vector<PropagationPath> trace_paths(const SceneGeometry& geometry, const RayLaunch& launch, const Vec3& rx,
                                         const RtConfig& cfg);

/// θ̂ and φ̂ unit vectors of direction `k` (zenith angle from +z, azimuth from +x).
void spherical_basis(const Vec3& k, Vec3& theta_hat, Vec3& phi_hat);

/// One CSV row per path: type sequence, length, delay, gain, AoD, AoA.
std::string paths_to_csv(const std::vector<PropagationPath>& paths);

// ---------------------------------------------------------------------------
// Diffraction building blocks

/// Fresnel integrals C(x) = ∫0^x cos(πt²/2) dt and S(x) = ∫0^x sin(πt²/2) dt.
void fresnel_integrals(double x, double& c, double& s);

/// UTD transition function F(X) = 2j√X e^{jX} ∫_{√X}^∞ e^{-jτ²} dτ, X ≥ 0.
cplx utd_transition(double x);

} // namespace citytwin
