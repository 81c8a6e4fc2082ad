// SPDX-License-Identifier: Apache-2.0
#include "citytwin/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace citytwin {

namespace {

constexpr double kPi = std::numbers::pi;
/// Distance from edge endpoints a diffraction point must keep, meters.
constexpr double kEndpointMargin = 1e-6;
/// Angular slack keeping observation points off the wedge faces.
constexpr double kFaceMargin = 1e-9;
/// Below this distance from a shadow boundary the limiting form is used.
constexpr double kBoundaryDelta = 1e-6;

/// Wedge angle of point p seen from edge point q, in [0, 2π).
double wedge_angle(const Edge& edge, const Vec3& q, const Vec3& p)
{
    const Vec3 w = p - q;
    double phi = std::atan2(dot(w, edge.n0), dot(w, edge.t0));
    if (phi < 0.0)
        phi += 2.0 * kPi;
    return phi;
}

/// cot((π + sign·β)/(2n)) · F(kL·a^{sign}(β)). Near a shadow boundary the
/// product is replaced by its limiting form; `boundary_sign` then fixes the side.
cplx utd_term(double n, double k_l, int sign, double beta, double boundary_sign)
{
    const double x = (kPi + sign * beta) / (2.0 * n);
    const double delta = x - kPi * std::round(x / kPi);
    const cplx e_pi4 = std::polar(1.0, 0.25 * kPi);
    if (std::fabs(delta) < kBoundaryDelta) {
        const double sgn = boundary_sign != 0.0 ? boundary_sign : (delta >= 0.0 ? 1.0 : -1.0);
        return n * (std::sqrt(2.0 * kPi * k_l) * sgn - 2.0 * n * k_l * delta * e_pi4) * e_pi4;
    }
    const double big_n = std::round((beta + sign * kPi) / (2.0 * kPi * n));
    const double c = std::cos((2.0 * kPi * n * big_n - beta) / 2.0);
    const double a = 2.0 * c * c;
    return utd_transition(k_l * a) / std::tan(x);
}

} // namespace

std::vector<PropagationPath> diffraction_paths(const SceneGeometry& geometry, const Vec3& tx, const Vec3& rx,
                                               bool los_visible)
{
    std::vector<PropagationPath> out;
    const double lambda = geometry.wavelength();
    const double k = 2.0 * kPi / lambda;

    for (std::uint32_t id = 0; id < geometry.edges().size(); ++id) {
        const Edge& edge = geometry.edges()[id];
        const Vec3 axis = edge.b - edge.a;
        const double edge_len = norm(axis);
        const Vec3 e_dir = axis / edge_len;

        // Stationary point of |tx - q| + |q - rx| along the edge line.
        const double ta = dot(tx - edge.a, e_dir);
        const double tb = dot(rx - edge.a, e_dir);
        const double r1 = norm(tx - edge.a - e_dir * ta);
        const double r2 = norm(rx - edge.a - e_dir * tb);
        if (!(r1 > 0.0 && r2 > 0.0))
            continue;
        const double t = ta + (tb - ta) * r1 / (r1 + r2);
        if (!(t > kEndpointMargin && t < edge_len - kEndpointMargin))
            continue;
        const Vec3 q = edge.a + e_dir * t;

        const double phi_i = wedge_angle(edge, q, tx);
        const double phi_d = wedge_angle(edge, q, rx);
        const double wedge = edge.n * kPi;
        if (!(phi_i > kFaceMargin && phi_i < wedge - kFaceMargin && phi_d > kFaceMargin && phi_d < wedge - kFaceMargin))
            continue;
        // Silhouette from either end: the point does not see both faces.
        auto silhouette = [&](double phi) { return phi >= kPi || phi <= (edge.n - 1.0) * kPi; };
        if (!silhouette(phi_i) && !silhouette(phi_d))
            continue;
        if (geometry.bvh().segment_blocked(tx, q) || geometry.bvh().segment_blocked(q, rx))
            continue;

        const double s_in = norm(q - tx);
        const double s_out = norm(rx - q);
        const Vec3 k_in = (q - tx) / s_in;
        const Vec3 k_out = (rx - q) / s_out;
        const double sin_beta0 = norm(cross(k_in, edge.e));
        if (!(sin_beta0 > 1e-9))
            continue;
        const double big_l = s_in * s_out / (s_in + s_out) * sin_beta0 * sin_beta0;
        const double k_l = k * big_l;
        const double n = edge.n;

        const double beta_minus = phi_d - phi_i;
        const double beta_plus = phi_d + phi_i;
        const double isb_sign = los_visible ? 1.0 : -1.0;
        const cplx t1 = utd_term(n, k_l, +1, beta_minus, isb_sign);
        const cplx t2 = utd_term(n, k_l, -1, beta_minus, isb_sign);
        const cplx t3 = utd_term(n, k_l, -1, beta_plus, 0.0);
        const cplx t4 = utd_term(n, k_l, +1, beta_plus, 0.0);

        // Reciprocal choice of the face incidence angles for the heuristic coefficients.
        const double cos0 = std::clamp(sin_beta0 * 0.5 * (std::sin(phi_i) + std::sin(phi_d)), 0.0, 1.0);
        const double cosn =
            std::clamp(sin_beta0 * 0.5 * (std::sin(wedge - phi_i) + std::sin(wedge - phi_d)), 0.0, 1.0);
        const FresnelCoefficients r0 = fresnel_coefficients(cos0, geometry.eta(edge.material0));
        const FresnelCoefficients rn = fresnel_coefficients(cosn, geometry.eta(edge.materialn));

        const cplx prefactor =
            -std::polar(1.0, -0.25 * kPi) / (2.0 * n * std::sqrt(2.0 * kPi * k) * sin_beta0);
        const cplx d_soft = prefactor * (t1 + t2 + r0.te * t3 + rn.te * t4);
        const cplx d_hard = prefactor * (t1 + t2 + r0.tm * t3 + rn.tm * t4);

        // Edge-fixed ray bases.
        const Vec3 phi_in = normalized(-cross(edge.e, k_in));
        const Vec3 beta_in = cross(k_in, phi_in);
        const Vec3 phi_out = normalized(cross(edge.e, k_out));
        const Vec3 beta_out = cross(k_out, phi_out);

        const double spread = lambda / (4.0 * kPi) / s_in * std::sqrt(s_in / (s_out * (s_in + s_out)));
        Vec3 th_tx, ph_tx, th_rx, ph_rx;
        spherical_basis(k_in, th_tx, ph_tx);
        spherical_basis(-k_out, th_rx, ph_rx);
        auto transfer = [&](const Vec3& in, const Vec3& out_basis) {
            return -spread * (d_soft * dot(in, beta_in) * dot(beta_out, out_basis) +
                              d_hard * dot(in, phi_in) * dot(phi_out, out_basis));
        };

        PropagationPath p;
        p.interactions = {{InteractionType::diffract, id}};
        p.vertices = {tx, q, rx};
        p.length = s_in + s_out;
        p.delay = p.length / kSpeedOfLight;
        p.amplitude = {transfer(th_tx, th_rx), transfer(ph_tx, th_rx), transfer(th_tx, ph_rx),
                       transfer(ph_tx, ph_rx)};
        p.aod_theta = std::acos(std::clamp(k_in.z, -1.0, 1.0));
        p.aod_phi = std::atan2(k_in.y, k_in.x);
        p.aoa_theta = std::acos(std::clamp(-k_out.z, -1.0, 1.0));
        p.aoa_phi = std::atan2(-k_out.y, -k_out.x);
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace citytwin
