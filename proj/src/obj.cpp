// SPDX-License-Identifier: Apache-2.0
#include "citytwin/error.hpp"
#include "citytwin/ingest.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace citytwin {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
            ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t')
            ++i;
        if (i > start)
            out.push_back(s.substr(start, i - start));
    }
    return out;
}

double parse_double(std::string_view tok, std::size_t line)
{
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw ParseError("malformed number '" + std::string(tok) + "'", line);
    return v;
}

} // namespace

RawObjMesh parse_obj(std::string_view text)
{
    RawObjMesh mesh;
    std::vector<std::size_t> face_lines;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        const std::string_view line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#')
            continue;
        const auto tok = split_ws(line);
        if (tok[0] == "v") {
            if (tok.size() < 4)
                throw ParseError("vertex record needs three coordinates", line_no);
            mesh.vertices.push_back(
                {parse_double(tok[1], line_no), parse_double(tok[2], line_no), parse_double(tok[3], line_no)});
        } else if (tok[0] == "f") {
            if (tok.size() < 4)
                throw ParseError("face record needs at least three vertices", line_no);
            std::vector<std::uint32_t> face;
            for (std::size_t i = 1; i < tok.size(); ++i) {
                const std::string_view ref = tok[i].substr(0, tok[i].find('/'));
                long long idx = 0;
                const auto res = std::from_chars(ref.data(), ref.data() + ref.size(), idx);
                if (res.ec != std::errc() || res.ptr != ref.data() + ref.size() || idx == 0)
                    throw ParseError("malformed face index '" + std::string(tok[i]) + "'", line_no);
                const auto count = static_cast<long long>(mesh.vertices.size());
                const long long zero_based = idx > 0 ? idx - 1 : count + idx;
                if (zero_based < 0)
                    throw ParseError("face index out of range '" + std::string(tok[i]) + "'", line_no);
                face.push_back(static_cast<std::uint32_t>(zero_based));
            }
            mesh.faces.push_back(std::move(face));
            face_lines.push_back(line_no);
        } else if ((tok[0] == "o" || tok[0] == "g") && tok.size() > 1 && mesh.name.empty()) {
            mesh.name = std::string(tok[1]);
        }
    }
    if (mesh.vertices.empty() && mesh.faces.empty())
        throw ParseError("empty OBJ file");
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        for (auto idx : mesh.faces[f])
            if (idx >= mesh.vertices.size())
                throw ParseError("face index " + std::to_string(idx + 1) + " out of range", face_lines[f]);
    return mesh;
}

std::string write_obj(const RawObjMesh& mesh)
{
    std::string out;
    char buf[128];
    if (!mesh.name.empty())
        out += "o " + mesh.name + "\n";
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        out += buf;
    }
    for (const auto& f : mesh.faces) {
        out += 'f';
        for (auto idx : f)
            out += ' ' + std::to_string(idx + 1);
        out += '\n';
    }
    return out;
}

std::vector<Triangle> triangulate_polygon(const std::vector<Vec3>& vertices,
                                          const std::vector<std::uint32_t>& polygon)
{
    std::vector<Triangle> out;
    const std::size_t n = polygon.size();
    if (n < 3)
        return out;
    if (n == 3) {
        out.push_back({polygon[0], polygon[1], polygon[2]});
        return out;
    }

    // Newell normal of the whole polygon.
    Vec3 normal;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& a = vertices[polygon[i]];
        const Vec3& b = vertices[polygon[(i + 1) % n]];
        normal.x += (a.y - b.y) * (a.z + b.z);
        normal.y += (a.z - b.z) * (a.x + b.x);
        normal.z += (a.x - b.x) * (a.y + b.y);
    }

    bool fan_ok = true;
    const Vec3& p0 = vertices[polygon[0]];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const Vec3 c = cross(vertices[polygon[i]] - p0, vertices[polygon[i + 1]] - p0);
        if (dot(c, normal) < 0.0) {
            fan_ok = false;
            break;
        }
    }
    if (fan_ok) {
        for (std::size_t i = 1; i + 1 < n; ++i)
            out.push_back({polygon[0], polygon[i], polygon[i + 1]});
        return out;
    }

    // Ear clipping in the plane that drops the dominant normal axis.
    const int drop = std::fabs(normal.x) > std::fabs(normal.y)
                         ? (std::fabs(normal.x) > std::fabs(normal.z) ? 0 : 2)
                         : (std::fabs(normal.y) > std::fabs(normal.z) ? 1 : 2);
    const int ax = drop == 0 ? 1 : 0;
    const int ay = drop == 2 ? 1 : 2;
    const double orient = normal[drop] > 0 ? 1.0 : -1.0;
    // Swapping the axes for x/y drops keeps the projected winding counter-clockwise.
    const double sign = (drop == 1 ? -1.0 : 1.0) * orient;
    auto px = [&](std::uint32_t v) { return vertices[v][ax]; };
    auto py = [&](std::uint32_t v) { return vertices[v][ay]; };
    auto cross2 = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
        return sign * ((px(b) - px(a)) * (py(c) - py(a)) - (py(b) - py(a)) * (px(c) - px(a)));
    };

    std::vector<std::uint32_t> ring = polygon;
    while (ring.size() > 3) {
        bool clipped = false;
        for (std::size_t i = 0; i < ring.size(); ++i) {
            const auto a = ring[(i + ring.size() - 1) % ring.size()];
            const auto b = ring[i];
            const auto c = ring[(i + 1) % ring.size()];
            if (cross2(a, b, c) <= 0.0)
                continue;
            bool contains = false;
            for (auto v : ring) {
                if (v == a || v == b || v == c)
                    continue;
                if (cross2(a, b, v) >= 0.0 && cross2(b, c, v) >= 0.0 && cross2(c, a, v) >= 0.0) {
                    contains = true;
                    break;
                }
            }
            if (contains)
                continue;
            out.push_back({a, b, c});
            ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
            clipped = true;
            break;
        }
        if (!clipped) {
            // Self-intersecting outline: fan whatever is left.
            for (std::size_t i = 1; i + 1 < ring.size(); ++i)
                out.push_back({ring[0], ring[i], ring[i + 1]});
            return out;
        }
    }
    out.push_back({ring[0], ring[1], ring[2]});
    return out;
}

} // namespace citytwin
