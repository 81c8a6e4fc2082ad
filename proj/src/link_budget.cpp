// SPDX-License-Identifier: Apache-2.0
#include "citytwin/error.hpp"
#include "citytwin/radio.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace citytwin {

void RadioConfig::validate() const
{
    if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz))
        throw ConfigError("radio.frequency_hz must be positive");
    if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
        throw ConfigError("radio.bandwidth_hz must be positive");
    if (array_rows < 1 || array_cols < 1)
        throw ConfigError("antenna array dimensions must be >= 1");
    if (!std::isfinite(tx_power_dbm) || !std::isfinite(noise_figure_db))
        throw ConfigError("radio powers must be finite");
    if (!(pattern.theta_3db_deg > 0.0 && pattern.phi_3db_deg > 0.0 && pattern.a_max_db >= 0.0 &&
          pattern.sla_v_db >= 0.0))
        throw ConfigError("invalid element pattern parameters");
}

Vec3 departure_direction(const PropagationPath& path) { return normalized(path.vertices[1] - path.vertices[0]); }

Vec3 arrival_direction(const PropagationPath& path)
{
    const std::size_t n = path.vertices.size();
    return normalized(path.vertices[n - 2] - path.vertices[n - 1]);
}

double received_power(const std::vector<PropagationPath>& paths, const GainFn& tx_gain_dbi, const GainFn& rx_gain_dbi,
                      const RadioConfig& config)
{
    if (paths.empty())
        return -std::numeric_limits<double>::infinity();
    cplx sum = 0.0;
    double power = 0.0;
    for (const auto& p : paths) {
        const double g_db = tx_gain_dbi(departure_direction(p)) + rx_gain_dbi(arrival_direction(p));
        const double weight = std::pow(10.0, g_db / 20.0);
        const cplx a = p.amplitude[0];
        if (config.power_sum) {
            power += weight * weight * std::norm(a);
        } else {
            sum += weight * a * std::polar(1.0, -2.0 * std::numbers::pi * config.frequency_hz * p.delay);
        }
    }
    if (!config.power_sum)
        power = std::norm(sum);
    if (!(power > 0.0))
        return -std::numeric_limits<double>::infinity();
    return config.tx_power_dbm + 10.0 * std::log10(power);
}

double noise_floor_dbm(const RadioConfig& config)
{
    return -174.0 + 10.0 * std::log10(config.bandwidth_hz) + config.noise_figure_db;
}

double snr(double p_rx_dbm, const RadioConfig& config) { return p_rx_dbm - noise_floor_dbm(config); }

double shannon_capacity(double snr_db, double bandwidth_hz)
{
    if (std::isinf(snr_db) && snr_db < 0.0)
        return 0.0;
    return bandwidth_hz * std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

double min_snr_for_rate(double rate_bps, double bandwidth_hz)
{
    return 10.0 * std::log10(std::exp2(rate_bps / bandwidth_hz) - 1.0);
}

std::string describe_config(const RadioConfig& r, const RtConfig& rt)
{
    std::string out;
    char buf[160];
    auto line = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, v);
        out += buf;
    };
    line("radio.frequency_hz", r.frequency_hz);
    line("radio.bandwidth_hz", r.bandwidth_hz);
    line("radio.tx_power_dbm", r.tx_power_dbm);
    line("radio.noise_figure_db", r.noise_figure_db);
    line("radio.array_rows", r.array_rows);
    line("radio.array_cols", r.array_cols);
    line("radio.element_spacing", r.element_spacing);
    line("radio.theta_3db_deg", r.pattern.theta_3db_deg);
    line("radio.phi_3db_deg", r.pattern.phi_3db_deg);
    line("radio.sla_v_db", r.pattern.sla_v_db);
    line("radio.a_max_db", r.pattern.a_max_db);
    line("radio.g_max_dbi", r.pattern.g_max_dbi);
    line("radio.rx_gain_dbi", r.rx_gain_dbi);
    out += std::string("radio.power_sum = ") + (r.power_sum ? "true" : "false") + "\n";
    line("raytrace.max_reflections", rt.max_reflections);
    out += std::string("raytrace.enable_diffraction = ") + (rt.enable_diffraction ? "true" : "false") + "\n";
    out += std::string("raytrace.enable_scattering = ") + (rt.enable_scattering ? "true" : "false") + "\n";
    line("raytrace.n_launch_rays", static_cast<double>(rt.n_launch_rays));
    out += std::string("raytrace.capture_mode = ") + (rt.capture_mode == CaptureMode::automatic ? "auto" : "fixed") + "\n";
    line("raytrace.capture_radius_m", rt.capture_radius_m);
    return out;
}

} // namespace citytwin
