// SPDX-License-Identifier: Apache-2.0
#include "citytwin/error.hpp"
#include "citytwin/parallel.hpp"
#include "citytwin/radio.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace citytwin {

Vec3 CoverageMap::center(std::size_t ix, std::size_t iy) const
{
    return {x0 + cell_m * static_cast<double>(ix), y0 + cell_m * static_cast<double>(iy), rx_height_m};
}

namespace {

/// Cells needed to cover `extent`; a sliver below 1e-9 m does not add a cell.
std::size_t cell_count(double extent, double cell)
{
    const double n = std::ceil(extent / cell - 1e-9);
    return n < 1.0 ? 1 : static_cast<std::size_t>(n);
}

std::vector<const RadioDevice*> select_transmitters(const Scene& scene, const CoverageOptions& options)
{
    std::vector<const RadioDevice*> out;
    if (options.tx_ids.empty()) {
        for (const auto& d : scene.devices)
            if (d.role == DeviceRole::tx)
                out.push_back(&d);
    } else {
        for (const auto& id : options.tx_ids) {
            auto it = std::find_if(scene.devices.begin(), scene.devices.end(),
                                   [&](const RadioDevice& d) { return d.device_id == id; });
            if (it == scene.devices.end() || it->role != DeviceRole::tx)
                throw ConfigError("unknown transmitter '" + id + "'");
            out.push_back(&*it);
        }
    }
    if (out.empty())
        throw ConfigError("scene '" + scene.name + "' has no transmitter");
    return out;
}

} // namespace

CoverageMap coverage_map(const Scene& scene, const SceneGeometry& geometry, const RadioConfig& radio,
                         const RtConfig& rt, const GridSpec& grid, const CoverageOptions& options)
{
    radio.validate();
    rt.validate();
    if (!(grid.cell_m > 0.0) || !std::isfinite(grid.cell_m))
        throw ConfigError("grid cell size must be positive");
    if (!(grid.rx_height_m >= 0.0) || !std::isfinite(grid.rx_height_m))
        throw ConfigError("receiver height must be non-negative");
    const auto txs = select_transmitters(scene, options);

    const auto ring = scene.local_boundary();
    if (ring.empty())
        throw ConfigError("scene '" + scene.name + "' has no boundary");
    Vec3 lo = ring.front();
    Vec3 hi = ring.front();
    for (const auto& p : ring) {
        lo = min(lo, p);
        hi = max(hi, p);
    }

    CoverageMap map;
    map.cell_m = grid.cell_m;
    map.rx_height_m = grid.rx_height_m;
    map.nx = cell_count(hi.x - lo.x, grid.cell_m);
    map.ny = cell_count(hi.y - lo.y, grid.cell_m);
    map.x0 = lo.x + 0.5 * grid.cell_m;
    map.y0 = lo.y + 0.5 * grid.cell_m;
    map.radio = radio;
    map.rt = rt;
    for (const auto* d : txs)
        map.tx_ids.push_back(d->device_id);
    map.cells.assign(map.nx * map.ny, CoverageCell{});

    const unsigned threads = resolve_threads(options.threads);
    std::vector<std::unique_ptr<RayLaunch>> launches(txs.size());
    parallel_for(txs.size(), threads, [&](std::size_t i) {
        launches[i] = std::make_unique<RayLaunch>(geometry, txs[i]->position, rt);
    });

    const double noise = noise_floor_dbm(radio);
    const GainFn rx_gain = [&](const Vec3&) { return radio.rx_gain_dbi; };
    parallel_for(map.cells.size(), threads, [&](std::size_t idx) {
        const std::size_t ix = idx % map.nx;
        const std::size_t iy = idx / map.nx;
        const Vec3 p = map.center(ix, iy);
        CoverageCell& cell = map.cells[idx];
        if (auto hit = geometry.bvh().intersect(p, {0.0, 0.0, 1.0}); hit && !geometry.is_ground(hit->triangle)) {
            cell.flags = cell_indoor;
            return;
        }
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < txs.size(); ++t) {
            const auto paths = trace_paths(geometry, *launches[t], p, rt);
            if (paths.empty())
                continue;
            const auto& sectors = txs[t]->sectors;
            for (std::size_t s = 0; s < sectors.size(); ++s) {
                const GainFn g = [&](const Vec3& dir) { return tx_gain(dir, sectors[s], radio); };
                const double power = received_power(paths, g, rx_gain, radio);
                // Ties go to the lexicographically lowest device id, then the lowest sector.
                const bool tie_won = power == best && cell.best_tx >= 0 &&
                                     txs[t]->device_id < txs[static_cast<std::size_t>(cell.best_tx)]->device_id;
                if (power > best || tie_won) {
                    best = power;
                    cell.best_tx = static_cast<int>(t);
                    cell.best_sector = static_cast<int>(s);
                }
            }
        }
        if (cell.best_tx < 0)
            return;
        cell.snr_db = best - noise;
        cell.capacity_bps = shannon_capacity(cell.snr_db, radio.bandwidth_hz);
        cell.flags = cell_ok;
    });
    return map;
}

std::vector<std::uint8_t> threshold_map(const CoverageMap& map, const RateRequirement& req)
{
    std::vector<std::uint8_t> out(map.cells.size(), 0);
    for (std::size_t i = 0; i < map.cells.size(); ++i) {
        const auto& c = map.cells[i];
        out[i] = c.flags == cell_ok && c.capacity_bps >= req.rate_bps ? 1 : 0;
    }
    return out;
}

} // namespace citytwin
