// SPDX-License-Identifier: Apache-2.0
#include "citytwin/error.hpp"
#include "citytwin/log.hpp"
#include "citytwin/scene.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>
#include <set>

namespace citytwin {

double Material::relative_permittivity(double f_hz) const { return a * std::pow(f_hz / 1e9, b); }

double Material::conductivity(double f_hz) const { return c * std::pow(f_hz / 1e9, d); }

bool Material::in_band(double f_hz) const
{
    const double ghz = f_hz / 1e9;
    return ghz >= band_min_ghz && ghz <= band_max_ghz;
}

MaterialTable MaterialTable::itu()
{
    // ITU-R P.2040 Table 3 (a, b, c, d, band in GHz).
    MaterialTable t;
    t.add({"itu_vacuum", 1.0, 0.0, 0.0, 0.0, 0.001, 100.0});
    t.add({"itu_concrete", 5.24, 0.0, 0.0462, 0.7822, 1.0, 100.0});
    t.add({"itu_brick", 3.91, 0.0, 0.0238, 0.16, 1.0, 40.0});
    t.add({"itu_plasterboard", 2.73, 0.0, 0.0085, 0.9395, 1.0, 100.0});
    t.add({"itu_wood", 1.99, 0.0, 0.0047, 1.0718, 0.001, 100.0});
    t.add({"itu_glass", 6.31, 0.0, 0.0036, 1.3394, 0.1, 100.0});
    t.add({"itu_ceiling_board", 1.48, 0.0, 0.0011, 1.075, 1.0, 100.0});
    t.add({"itu_chipboard", 2.58, 0.0, 0.0217, 0.78, 1.0, 100.0});
    t.add({"itu_metal", 1.0, 0.0, 1e7, 0.0, 1.0, 100.0});
    t.add({"itu_very_dry_ground", 3.0, 0.0, 0.00015, 2.52, 1.0, 10.0});
    t.add({"itu_medium_dry_ground", 15.0, -0.1, 0.035, 1.63, 1.0, 10.0});
    t.add({"itu_wet_ground", 30.0, -0.4, 0.15, 1.30, 1.0, 10.0});
    return t;
}

void MaterialTable::add(Material m)
{
    if (m.name.empty())
        throw ConfigError("material without a name");
    if (!(m.a > 0.0) || !(m.c >= 0.0) || !(m.band_max_ghz >= m.band_min_ghz))
        throw ConfigError("material '" + m.name + "' has invalid parameters");
    for (auto& existing : materials_)
        if (existing.name == m.name) {
            existing = std::move(m);
            return;
        }
    materials_.push_back(std::move(m));
}

const Material* MaterialTable::find(std::string_view name) const
{
    for (const auto& m : materials_)
        if (m.name == name)
            return &m;
    return nullptr;
}

const Material& MaterialTable::at(std::string_view name) const
{
    if (const Material* m = find(name))
        return *m;
    throw NotFoundError("unknown material '" + std::string(name) + "'");
}

void MaterialTable::check_band(std::string_view name, double f_hz) const
{
    const Material& m = at(name);
    if (m.in_band(f_hz))
        return;
    static std::mutex mutex;
    static std::set<std::pair<std::string, double>> reported;
    std::lock_guard lock(mutex);
    if (!reported.insert({m.name, f_hz}).second)
        return;
    char buf[160];
    std::snprintf(buf, sizeof buf, "material %s used at %.6g GHz, outside its %.6g-%.6g GHz model range", m.name.c_str(),
                  f_hz / 1e9, m.band_min_ghz, m.band_max_ghz);
    warn(buf);
}

std::string assign_material(std::string_view model_type)
{
    if (model_type == "Wall")
        return std::string(kBrick);
    if (model_type == "Building")
        return std::string(kConcrete);
    if (model_type == "Ground")
        return std::string(kMediumDryGround);
    warn("model type '" + std::string(model_type) + "' has no material rule, using " + std::string(kConcrete));
    return std::string(kConcrete);
}

} // namespace citytwin
