// SPDX-License-Identifier: Apache-2.0
#include "citytwin/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace citytwin {

namespace {

constexpr double kSeriesLimit = 1.5;
constexpr double kTolerance = 1e-16;
constexpr int kMaxIterations = 300;

/// Power series of C and S, valid for small |x|.
void fresnel_series(double x, double& c, double& s)
{
    const double fact = 0.5 * std::numbers::pi * x * x;
    double sum_c = x;
    double sum_s = 0.0;
    double term = x;
    double sign = 1.0;
    bool odd = true;
    double sum = 0.0;
    int n = 3;
    for (int k = 1; k <= kMaxIterations; ++k) {
        term *= fact / k;
        sum += sign * term / n;
        const double test = std::fabs(sum) * kTolerance;
        if (odd) {
            sign = -sign;
            sum_s = sum;
            sum = sum_c;
        } else {
            sum_c = sum;
            sum = sum_s;
        }
        if (term < test)
            break;
        odd = !odd;
        n += 2;
    }
    c = sum_c;
    s = sum_s;
}

/// (1/2 − C(x)) + j(1/2 − S(x)) for x ≥ kSeriesLimit via a continued fraction.
cplx fresnel_tail(double x)
{
    const double pix2 = std::numbers::pi * x * x;
    cplx b(1.0, -pix2);
    cplx cc = 1.0 / std::numeric_limits<double>::min();
    cplx d = 1.0 / b;
    cplx h = d;
    double n = -1.0;
    for (int k = 2; k <= kMaxIterations; ++k) {
        n += 2.0;
        const double a = -n * (n + 1.0);
        b += 4.0;
        d = 1.0 / (a * d + b);
        cc = b + a / cc;
        const cplx del = cc * d;
        h *= del;
        if (std::fabs(del.real() - 1.0) + std::fabs(del.imag()) < kTolerance)
            break;
    }
    h *= cplx(x, -x);
    return cplx(0.5, 0.5) * std::polar(1.0, 0.5 * pix2) * h;
}

} // namespace

cplx complex_permittivity(double relative_permittivity, double conductivity, double f_hz)
{
    return {relative_permittivity, -conductivity / (2.0 * std::numbers::pi * f_hz * kVacuumPermittivity)};
}

cplx complex_permittivity(const Material& m, double f_hz)
{
    return complex_permittivity(m.relative_permittivity(f_hz), m.conductivity(f_hz), f_hz);
}

FresnelCoefficients fresnel_coefficients(double cos_theta_i, cplx eta)
{
    const double c = std::clamp(cos_theta_i, 0.0, 1.0);
    const double sin2 = 1.0 - c * c;
    const cplx root = std::sqrt(eta - sin2);
    return {(c - root) / (c + root), (eta * c - root) / (eta * c + root)};
}

void fresnel_integrals(double x, double& c, double& s)
{
    const double ax = std::fabs(x);
    if (ax <= kSeriesLimit) {
        fresnel_series(ax, c, s);
    } else {
        const cplx tail = fresnel_tail(ax);
        c = 0.5 - tail.real();
        s = 0.5 - tail.imag();
    }
    if (x < 0.0) {
        c = -c;
        s = -s;
    }
}

cplx utd_transition(double x)
{
    if (!(x > 0.0))
        return 0.0;
    const double u = std::sqrt(x);
    const double arg = std::sqrt(2.0 * x / std::numbers::pi);
    cplx tail;
    if (arg <= kSeriesLimit) {
        double c, s;
        fresnel_series(arg, c, s);
        tail = {0.5 - c, 0.5 - s};
    } else {
        tail = fresnel_tail(arg);
    }
    // ∫_u^∞ e^{-jτ²} dτ = √(π/2) · conj(tail)
    const cplx integral = std::sqrt(0.5 * std::numbers::pi) * std::conj(tail);
    return cplx(0.0, 2.0 * u) * std::polar(1.0, x) * integral;
}

} // namespace citytwin
