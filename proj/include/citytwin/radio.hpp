// SPDX-License-Identifier: Apache-2.0
//
// Antenna patterns, link budget, Shannon capacity and coverage maps.
#pragma once

#include "citytwin/raytrace.hpp"
#include "citytwin/scene.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace citytwin {

/// 3GPP TR 38.901 single-element pattern parameters.
struct ElementPattern {
    double theta_3db_deg = 65.0;
    double phi_3db_deg = 65.0;
    double sla_v_db = 30.0;
    double a_max_db = 30.0;
    double g_max_dbi = 8.0;
};

struct RadioConfig {
    double frequency_hz = 12.7e9;
    double bandwidth_hz = 400e6;
    double tx_power_dbm = 30.0;
    double noise_figure_db = 7.0;
    int array_rows = 4;
    int array_cols = 4;
    /// Element spacing in wavelengths (informational: beamforming is ideal).
    double element_spacing = 0.5;
    ElementPattern pattern;
    double rx_gain_dbi = 0.0;
    /// Sum path powers instead of complex amplitudes.
    bool power_sum = false;

    /// Throws ConfigError.
    void validate() const;
};

/// Element gain in dBi for zenith angle θ ∈ [0°, 180°] and azimuth φ ∈ [−180°, 180°]
/// measured from boresight (θ = 90°, φ = 0°).
double element_gain(double theta_deg, double phi_deg, const ElementPattern& pattern);

/// Element gain in sector-local angles plus the ideal array gain 10·log10(rows·cols).
/// `direction` is a unit vector in the local frame (x east, y north, z up).
double tx_gain(const Vec3& direction, const Sector& sector, const RadioConfig& config);

/// Gain in dBi toward a unit direction.
using GainFn = std::function<double(const Vec3&)>;

/// P_tx + 10·log10|Σ √(g_tx g_rx) a_θθ e^{-j2πfτ}|². Returns −∞ without paths.
double received_power(const std::vector<PropagationPath>& paths, const GainFn& tx_gain_dbi, const GainFn& rx_gain_dbi,
                      const RadioConfig& config);

double noise_floor_dbm(const RadioConfig& config);
double snr(double p_rx_dbm, const RadioConfig& config);
double shannon_capacity(double snr_db, double bandwidth_hz);
double min_snr_for_rate(double rate_bps, double bandwidth_hz);

/// Departure direction of a path (unit, local frame).
Vec3 departure_direction(const PropagationPath& path);
/// Direction from the receiver toward the last interaction.
Vec3 arrival_direction(const PropagationPath& path);

// ---------------------------------------------------------------------------
// Coverage

enum CellFlag : std::uint8_t { cell_ok = 0, cell_outage = 1, cell_indoor = 2 };

struct CoverageCell {
    /// Index into CoverageMap::tx_ids, −1 without a server.
    int best_tx = -1;
    int best_sector = -1;
    double snr_db = -std::numeric_limits<double>::infinity();
    double capacity_bps = 0.0;
    std::uint8_t flags = cell_outage;
};

struct GridSpec {
    double cell_m = 5.0;
    double rx_height_m = kDefaultRxHeight;
};

struct CoverageMap {
    /// Center of cell (0, 0), local meters; rows increase northwards.
    double x0 = 0.0;
    double y0 = 0.0;
    double cell_m = 0.0;
    double rx_height_m = 0.0;
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<std::string> tx_ids;
    std::vector<CoverageCell> cells;
    RadioConfig radio;
    RtConfig rt;

    CoverageCell& at(std::size_t ix, std::size_t iy) { return cells[iy * nx + ix]; }
    const CoverageCell& at(std::size_t ix, std::size_t iy) const { return cells[iy * nx + ix]; }
    Vec3 center(std::size_t ix, std::size_t iy) const;
};

struct CoverageOptions {
    /// Device ids to use as transmitters; empty means every TX of the scene.
    std::vector<std::string> tx_ids;
    unsigned threads = 0;
};

/// Best-server map over the bounding box of the scene boundary. Throws
/// ConfigError when the scene has no transmitter.
CoverageMap coverage_map(const Scene& scene, const SceneGeometry& geometry, const RadioConfig& radio,
                         const RtConfig& rt, const GridSpec& grid, const CoverageOptions& options = {});

struct RateRequirement {
    std::string name;
    double rate_bps = 0.0;
};

/// One byte per cell: 1 when capacity ≥ rate.
std::vector<std::uint8_t> threshold_map(const CoverageMap& map, const RateRequirement& req);

/// CSV: `#` header lines with every configuration value, then
/// x,y,best_tx,snr_db,capacity_bps,flags rows in row-major order (south row first).
std::string export_csv(const CoverageMap& map);
/// Inverse of export_csv for the grid values (configuration lines are skipped;
/// best_sector is not exported and reads back as −1).
CoverageMap import_csv(std::string_view csv);
/// 16-bit binary PGM; SNR linearly quantized to 1..65535 over [snr_min, snr_max],
/// 0 for outage and indoor cells. The top image row is the northernmost row.
std::string export_pgm(const CoverageMap& map, double snr_min_db = -20.0, double snr_max_db = 40.0);
/// x,y,pass CSV for a threshold map.
std::string export_threshold_csv(const CoverageMap& map, const std::vector<std::uint8_t>& pass,
                                 const RateRequirement& req);

/// Key/value description of both configurations, one "key = value" per line.
std::string describe_config(const RadioConfig& radio, const RtConfig& rt);

} // namespace citytwin
