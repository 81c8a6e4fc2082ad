// SPDX-License-Identifier: Apache-2.0
#include "citytwin/radio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace citytwin {

double element_gain(double theta_deg, double phi_deg, const ElementPattern& p)
{
    const double v = (theta_deg - 90.0) / p.theta_3db_deg;
    const double h = phi_deg / p.phi_3db_deg;
    const double a_v = -std::min(12.0 * v * v, p.sla_v_db);
    const double a_h = -std::min(12.0 * h * h, p.a_max_db);
    return p.g_max_dbi - std::min(-(a_v + a_h), p.a_max_db);
}

double tx_gain(const Vec3& direction, const Sector& sector, const RadioConfig& config)
{
    constexpr double deg = 180.0 / std::numbers::pi;
    const Vec3 d = normalized(direction);
    // Azimuth clockwise from north, relative to the sector boresight, in [-180, 180].
    double phi = std::atan2(d.x, d.y) * deg - sector.azimuth_deg;
    phi = std::remainder(phi, 360.0);
    const double theta = std::clamp(std::acos(std::clamp(d.z, -1.0, 1.0)) * deg - sector.downtilt_deg, 0.0, 180.0);
    return element_gain(theta, phi, config.pattern) +
           10.0 * std::log10(static_cast<double>(config.array_rows) * config.array_cols);
}

} // namespace citytwin
