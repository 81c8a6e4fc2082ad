// SPDX-License-Identifier: Apache-2.0
#include "citytwin/config.hpp"

#include "citytwin/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

namespace citytwin {

namespace pt = boost::property_tree;

namespace {

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& where, const std::string& s)
{
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v))
        throw ConfigError(where + ": invalid number '" + s + "'");
    return v;
}

int to_int(const std::string& where, const std::string& s)
{
    const double v = to_double(where, s);
    if (v != std::floor(v) || std::fabs(v) > 1e9)
        throw ConfigError(where + ": expected an integer, got '" + s + "'");
    return static_cast<int>(v);
}

bool to_bool(const std::string& where, const std::string& s)
{
    if (s == "true" || s == "1" || s == "yes" || s == "on")
        return true;
    if (s == "false" || s == "0" || s == "no" || s == "off")
        return false;
    throw ConfigError(where + ": expected a boolean, got '" + s + "'");
}

using Setter = std::function<void(const std::string& where, const std::string& value)>;

void apply_section(const std::string& section, const pt::ptree& tree, const std::map<std::string, Setter>& setters)
{
    for (const auto& [key, node] : tree) {
        const std::string where = section + "." + key;
        auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError("unknown configuration key '" + where + "'");
        it->second(where, node.get_value<std::string>());
    }
}

Setter dbl(double& target)
{
    return [&target](const std::string& w, const std::string& v) { target = to_double(w, v); };
}

} // namespace

void AppConfig::validate() const
{
    crs.validate();
    radio.validate();
    rt.validate();
    if (!(poles.default_height >= 0.0))
        throw ConfigError("pole_heights.default must be non-negative");
    for (const auto& [type, h] : poles.heights)
        if (!(h >= 0.0) || !std::isfinite(h))
            throw ConfigError("pole_heights." + type + " must be non-negative");
}

AppConfig parse_config(std::string_view ini)
{
    pt::ptree tree;
    std::istringstream in{std::string(ini)};
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("configuration: " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }

    AppConfig cfg;
    double origin_e = cfg.crs.custom_origin.easting();
    double origin_n = cfg.crs.custom_origin.northing();
    LengthUnit origin_unit = cfg.crs.custom_origin.unit();
    auto unit_setter = [](LengthUnit& u) {
        return Setter([&u](const std::string& w, const std::string& v) {
            try {
                u = parse_length_unit(v);
            } catch (const Error&) {
                throw ConfigError(w + ": unknown unit '" + v + "'");
            }
        });
    };

    for (const auto& [section, node] : tree) {
        if (section == "projection") {
            auto& l = cfg.crs.lcc;
            apply_section(section, node,
                          {{"semi_major_axis_m", dbl(l.semi_major_axis_m)},
                           {"inverse_flattening", dbl(l.inverse_flattening)},
                           {"standard_parallel_1", dbl(l.standard_parallel_1)},
                           {"standard_parallel_2", dbl(l.standard_parallel_2)},
                           {"origin_latitude", dbl(l.origin_latitude)},
                           {"central_meridian", dbl(l.central_meridian)},
                           {"false_easting", dbl(l.false_easting)},
                           {"false_northing", dbl(l.false_northing)},
                           {"unit", unit_setter(l.unit)}});
        } else if (section == "crs") {
            apply_section(section, node,
                          {{"origin_easting", dbl(origin_e)},
                           {"origin_northing", dbl(origin_n)},
                           {"origin_unit", unit_setter(origin_unit)}});
        } else if (section == "radio") {
            auto& r = cfg.radio;
            apply_section(section, node,
                          {{"frequency_hz", dbl(r.frequency_hz)},
                           {"bandwidth_hz", dbl(r.bandwidth_hz)},
                           {"tx_power_dbm", dbl(r.tx_power_dbm)},
                           {"noise_figure_db", dbl(r.noise_figure_db)},
                           {"array_rows", [&r](auto& w, auto& v) { r.array_rows = to_int(w, v); }},
                           {"array_cols", [&r](auto& w, auto& v) { r.array_cols = to_int(w, v); }},
                           {"element_spacing", dbl(r.element_spacing)},
                           {"theta_3db_deg", dbl(r.pattern.theta_3db_deg)},
                           {"phi_3db_deg", dbl(r.pattern.phi_3db_deg)},
                           {"sla_v_db", dbl(r.pattern.sla_v_db)},
                           {"a_max_db", dbl(r.pattern.a_max_db)},
                           {"g_max_dbi", dbl(r.pattern.g_max_dbi)},
                           {"rx_gain_dbi", dbl(r.rx_gain_dbi)},
                           {"power_sum", [&r](auto& w, auto& v) { r.power_sum = to_bool(w, v); }}});
        } else if (section == "raytrace") {
            auto& t = cfg.rt;
            apply_section(
                section, node,
                {{"max_reflections", [&t](auto& w, auto& v) { t.max_reflections = to_int(w, v); }},
                 {"enable_diffraction", [&t](auto& w, auto& v) { t.enable_diffraction = to_bool(w, v); }},
                 {"enable_scattering", [&t](auto& w, auto& v) { t.enable_scattering = to_bool(w, v); }},
                 {"n_launch_rays",
                  [&t](auto& w, auto& v) {
                      const int n = to_int(w, v);
                      if (n < 1)
                          throw ConfigError(w + " must be >= 1");
                      t.n_launch_rays = static_cast<std::size_t>(n);
                  }},
                 {"capture_mode",
                  [&t](auto& w, auto& v) {
                      if (v == "auto")
                          t.capture_mode = CaptureMode::automatic;
                      else if (v == "fixed")
                          t.capture_mode = CaptureMode::fixed;
                      else
                          throw ConfigError(w + ": expected auto or fixed, got '" + v + "'");
                  }},
                 {"capture_radius_m", dbl(t.capture_radius_m)}});
        } else if (section == "run") {
            apply_section(section, node, {{"threads", [&cfg](auto& w, auto& v) {
                                               const int n = to_int(w, v);
                                               if (n < 0)
                                                   throw ConfigError(w + " must be >= 0");
                                               cfg.threads = static_cast<unsigned>(n);
                                           }}});
        } else if (section == "pole_heights") {
            for (const auto& [key, value] : node) {
                const double h = to_double("pole_heights." + key, value.get_value<std::string>());
                if (key == "default")
                    cfg.poles.default_height = h;
                else
                    cfg.poles.heights[key] = h;
            }
        } else if (section == "antenna_columns") {
            for (const auto& [key, value] : node)
                cfg.antenna_columns.columns[key] = value.get_value<std::string>();
        } else if (section.rfind("material.", 0) == 0) {
            Material m;
            m.name = section.substr(9);
            if (const Material* existing = cfg.materials.find(m.name))
                m = *existing;
            apply_section(section, node,
                          {{"a", dbl(m.a)},
                           {"b", dbl(m.b)},
                           {"c", dbl(m.c)},
                           {"d", dbl(m.d)},
                           {"band_min_ghz", dbl(m.band_min_ghz)},
                           {"band_max_ghz", dbl(m.band_max_ghz)}});
            cfg.materials.add(std::move(m));
        } else {
            throw ConfigError("unknown configuration section '" + section + "'");
        }
    }
    cfg.crs.custom_origin = ProjectedCoord(origin_e, origin_n, origin_unit);
    cfg.validate();
    return cfg;
}

AppConfig load_config(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ConfigError("cannot read configuration " + path.string() + ": " + e.what());
    }
    return parse_config(text);
}

std::string config_to_ini(const AppConfig& c)
{
    std::string out;
    auto kv = [&out](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
    const auto& l = c.crs.lcc;
    out += "[projection]\n";
    kv("semi_major_axis_m", num(l.semi_major_axis_m));
    kv("inverse_flattening", num(l.inverse_flattening));
    kv("standard_parallel_1", num(l.standard_parallel_1));
    kv("standard_parallel_2", num(l.standard_parallel_2));
    kv("origin_latitude", num(l.origin_latitude));
    kv("central_meridian", num(l.central_meridian));
    kv("false_easting", num(l.false_easting));
    kv("false_northing", num(l.false_northing));
    kv("unit", std::string(to_string(l.unit)));
    out += "\n[crs]\n";
    kv("origin_easting", num(c.crs.custom_origin.easting()));
    kv("origin_northing", num(c.crs.custom_origin.northing()));
    kv("origin_unit", std::string(to_string(c.crs.custom_origin.unit())));
    out += "\n[radio]\n";
    const auto& r = c.radio;
    kv("frequency_hz", num(r.frequency_hz));
    kv("bandwidth_hz", num(r.bandwidth_hz));
    kv("tx_power_dbm", num(r.tx_power_dbm));
    kv("noise_figure_db", num(r.noise_figure_db));
    kv("array_rows", std::to_string(r.array_rows));
    kv("array_cols", std::to_string(r.array_cols));
    kv("element_spacing", num(r.element_spacing));
    kv("theta_3db_deg", num(r.pattern.theta_3db_deg));
    kv("phi_3db_deg", num(r.pattern.phi_3db_deg));
    kv("sla_v_db", num(r.pattern.sla_v_db));
    kv("a_max_db", num(r.pattern.a_max_db));
    kv("g_max_dbi", num(r.pattern.g_max_dbi));
    kv("rx_gain_dbi", num(r.rx_gain_dbi));
    kv("power_sum", r.power_sum ? "true" : "false");
    out += "\n[raytrace]\n";
    kv("max_reflections", std::to_string(c.rt.max_reflections));
    kv("enable_diffraction", c.rt.enable_diffraction ? "true" : "false");
    kv("enable_scattering", c.rt.enable_scattering ? "true" : "false");
    kv("n_launch_rays", std::to_string(c.rt.n_launch_rays));
    kv("capture_mode", c.rt.capture_mode == CaptureMode::automatic ? "auto" : "fixed");
    kv("capture_radius_m", num(c.rt.capture_radius_m));
    out += "\n[run]\n";
    kv("threads", std::to_string(c.threads));
    out += "\n[pole_heights]\n";
    kv("default", num(c.poles.default_height));
    for (const auto& [type, h] : c.poles.heights)
        kv(type, num(h));
    out += "\n[antenna_columns]\n";
    for (const auto& [from, to] : c.antenna_columns.columns)
        kv(from, to);
    for (const auto& m : c.materials.all()) {
        out += "\n[material." + m.name + "]\n";
        kv("a", num(m.a));
        kv("b", num(m.b));
        kv("c", num(m.c));
        kv("d", num(m.d));
        kv("band_min_ghz", num(m.band_min_ghz));
        kv("band_max_ghz", num(m.band_max_ghz));
    }
    return out;
}

} // namespace citytwin
