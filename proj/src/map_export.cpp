// SPDX-License-Identifier: Apache-2.0
#include "citytwin/error.hpp"
#include "citytwin/radio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace citytwin {

namespace {

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, std::size_t line)
{
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ParseError("invalid number '" + s + "'", line);
    return v;
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

std::string export_csv(const CoverageMap& map)
{
    std::string out = "# citytwin coverage map\n";
    std::istringstream cfg(describe_config(map.radio, map.rt));
    for (std::string line; std::getline(cfg, line);)
        out += "# " + line + "\n";
    out += "# grid.x0 = " + num(map.x0) + "\n";
    out += "# grid.y0 = " + num(map.y0) + "\n";
    out += "# grid.cell_m = " + num(map.cell_m) + "\n";
    out += "# grid.rx_height_m = " + num(map.rx_height_m) + "\n";
    out += "# grid.nx = " + std::to_string(map.nx) + "\n";
    out += "# grid.ny = " + std::to_string(map.ny) + "\n";
    for (std::size_t i = 0; i < map.tx_ids.size(); ++i)
        out += "# tx." + std::to_string(i) + " = " + map.tx_ids[i] + "\n";
    out += "x,y,best_tx,snr_db,capacity_bps,flags\n";
    for (std::size_t iy = 0; iy < map.ny; ++iy) {
        for (std::size_t ix = 0; ix < map.nx; ++ix) {
            const Vec3 c = map.center(ix, iy);
            const CoverageCell& cell = map.at(ix, iy);
            out += num(c.x) + "," + num(c.y) + ",";
            out += cell.best_tx >= 0 ? map.tx_ids[static_cast<std::size_t>(cell.best_tx)] : std::string();
            out += "," + num(cell.snr_db) + "," + num(cell.capacity_bps) + "," +
                   std::to_string(cell.flags) + "\n";
        }
    }
    return out;
}

CoverageMap import_csv(std::string_view csv)
{
    CoverageMap map;
    std::istringstream in{std::string(csv)};
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t row = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty())
            continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                continue;
            const std::string key = trim(std::string_view(line).substr(1, eq - 1));
            const std::string value = trim(std::string_view(line).substr(eq + 1));
            if (key == "grid.x0")
                map.x0 = parse_double(value, line_no);
            else if (key == "grid.y0")
                map.y0 = parse_double(value, line_no);
            else if (key == "grid.cell_m")
                map.cell_m = parse_double(value, line_no);
            else if (key == "grid.rx_height_m")
                map.rx_height_m = parse_double(value, line_no);
            else if (key == "grid.nx")
                map.nx = static_cast<std::size_t>(parse_double(value, line_no));
            else if (key == "grid.ny")
                map.ny = static_cast<std::size_t>(parse_double(value, line_no));
            else if (key.rfind("tx.", 0) == 0)
                map.tx_ids.push_back(value);
            continue;
        }
        if (!header_seen) {
            if (line.rfind("x,y,", 0) != 0)
                throw ParseError("missing coverage CSV header", line_no);
            header_seen = true;
            map.cells.assign(map.nx * map.ny, CoverageCell{});
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 6)
            throw ParseError("expected 6 fields", line_no);
        if (row >= map.cells.size())
            throw ParseError("more rows than grid cells", line_no);
        CoverageCell& cell = map.cells[row++];
        if (!f[2].empty()) {
            auto it = std::find(map.tx_ids.begin(), map.tx_ids.end(), f[2]);
            if (it == map.tx_ids.end())
                throw ParseError("unknown transmitter '" + f[2] + "'", line_no);
            cell.best_tx = static_cast<int>(it - map.tx_ids.begin());
        }
        cell.snr_db = parse_double(f[3], line_no);
        cell.capacity_bps = parse_double(f[4], line_no);
        cell.flags = static_cast<std::uint8_t>(parse_double(f[5], line_no));
    }
    if (!header_seen)
        throw ParseError("missing coverage CSV header", line_no);
    if (row != map.cells.size())
        throw ParseError("expected " + std::to_string(map.cells.size()) + " rows, got " + std::to_string(row),
                         line_no);
    return map;
}

std::string export_pgm(const CoverageMap& map, double snr_min_db, double snr_max_db)
{
    if (!(snr_max_db > snr_min_db))
        throw ConfigError("PGM SNR range must be increasing");
    std::string out = "P5\n# snr_db " + num(snr_min_db) + " " + num(snr_max_db) + "\n" + std::to_string(map.nx) +
                      " " + std::to_string(map.ny) + "\n65535\n";
    for (std::size_t r = 0; r < map.ny; ++r) {
        const std::size_t iy = map.ny - 1 - r;
        for (std::size_t ix = 0; ix < map.nx; ++ix) {
            const CoverageCell& c = map.at(ix, iy);
            unsigned v = 0;
            if (c.flags == cell_ok) {
                const double s = std::clamp(c.snr_db, snr_min_db, snr_max_db);
                v = 1 + static_cast<unsigned>(std::lround((s - snr_min_db) / (snr_max_db - snr_min_db) * 65534.0));
            }
            out += static_cast<char>((v >> 8) & 0xff);
            out += static_cast<char>(v & 0xff);
        }
    }
    return out;
}

std::string export_threshold_csv(const CoverageMap& map, const std::vector<std::uint8_t>& pass,
                                 const RateRequirement& req)
{
    if (pass.size() != map.cells.size())
        throw InputError("threshold map size does not match the grid");
    std::string out = "# requirement " + req.name + " = " + num(req.rate_bps) + " bps\n";
    out += "# min_snr_db = " + num(min_snr_for_rate(req.rate_bps, map.radio.bandwidth_hz)) + "\n";
    out += "x,y,pass\n";
    for (std::size_t iy = 0; iy < map.ny; ++iy)
        for (std::size_t ix = 0; ix < map.nx; ++ix) {
            const Vec3 c = map.center(ix, iy);
            out += num(c.x) + "," + num(c.y) + "," + (pass[iy * map.nx + ix] ? "1" : "0") + "\n";
        }
    return out;
}

} // namespace citytwin
