// SPDX-License-Identifier: Apache-2.0
#include "citytwin/error.hpp"
#include "citytwin/ingest.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace citytwin {

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

namespace {

std::size_t scalar_size(const std::string& type)
{
    if (type == "char" || type == "uchar" || type == "int8" || type == "uint8")
        return 1;
    if (type == "short" || type == "ushort" || type == "int16" || type == "uint16")
        return 2;
    if (type == "int" || type == "uint" || type == "float" || type == "int32" || type == "uint32" ||
        type == "float32")
        return 4;
    if (type == "double" || type == "float64")
        return 8;
    throw ParseError("unknown PLY property type '" + type + "'");
}

struct Property {
    std::string name;
    std::string type;
    bool is_list = false;
    std::string count_type;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
};

template <typename T>
void put(std::string& out, T value)
{
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    template <typename T>
    T get()
    {
        if (pos_ + sizeof(T) > data_.size())
            throw ParseError("PLY body shorter than its header declares");
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    double get_scalar(const std::string& type)
    {
        if (type == "char" || type == "int8")
            return get<std::int8_t>();
        if (type == "uchar" || type == "uint8")
            return get<std::uint8_t>();
        if (type == "short" || type == "int16")
            return get<std::int16_t>();
        if (type == "ushort" || type == "uint16")
            return get<std::uint16_t>();
        if (type == "int" || type == "int32")
            return get<std::int32_t>();
        if (type == "uint" || type == "uint32")
            return get<std::uint32_t>();
        if (type == "float" || type == "float32")
            return get<float>();
        if (type == "double" || type == "float64")
            return get<double>();
        throw ParseError("unknown PLY property type '" + type + "'");
    }

    void skip(std::size_t n)
    {
        if (pos_ + n > data_.size())
            throw ParseError("PLY body shorter than its header declares");
        pos_ += n;
    }

    bool at_end() const { return pos_ == data_.size(); }

private:
    std::string_view data_;
    std::size_t pos_ = 0;
};

} // namespace

std::string write_ply(const TriangleMesh& mesh)
{
    const bool materials = !mesh.triangle_materials.empty();
    std::ostringstream header;
    header << "ply\n"
           << "format binary_little_endian 1.0\n"
           << "element vertex " << mesh.vertices.size() << "\n"
           << "property float x\nproperty float y\nproperty float z\n"
           << "element face " << mesh.triangles.size() << "\n"
           << "property list uchar int vertex_indices\n";
    if (materials)
        header << "property ushort material\n";
    header << "end_header\n";

    std::string out = header.str();
    out.reserve(out.size() + mesh.vertices.size() * 12 + mesh.triangles.size() * (13 + (materials ? 2 : 0)));
    for (const auto& v : mesh.vertices)
        for (float c : v)
            put(out, c);
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        put(out, std::uint8_t{3});
        for (auto idx : mesh.triangles[i])
            put(out, static_cast<std::int32_t>(idx));
        if (materials)
            put(out, mesh.triangle_materials[i]);
    }
    return out;
}

TriangleMesh read_ply(std::string_view bytes)
{
    constexpr std::string_view kEnd = "end_header\n";
    const auto header_end = bytes.find(kEnd);
    if (bytes.substr(0, 4) != "ply\n" && bytes.substr(0, 5) != "ply\r\n")
        throw ParseError("missing PLY magic");
    if (header_end == std::string_view::npos)
        throw ParseError("PLY header is not terminated");

    std::istringstream header{std::string(bytes.substr(0, header_end))};
    std::vector<Element> elements;
    std::string line;
    std::size_t line_no = 0;
    bool format_seen = false;
    while (std::getline(header, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "ply" || kw == "comment" || kw == "obj_info" || kw.empty())
            continue;
        if (kw == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt == "ascii" || fmt == "binary_big_endian")
                throw ParseError("unsupported PLY format '" + fmt + "': only binary_little_endian is accepted",
                                 line_no);
            if (fmt != "binary_little_endian" || version != "1.0")
                throw ParseError("unknown PLY format '" + fmt + " " + version + "'", line_no);
            format_seen = true;
        } else if (kw == "element") {
            Element e;
            long long count = -1;
            ls >> e.name >> count;
            if (!ls || count < 0)
                throw ParseError("malformed element declaration", line_no);
            e.count = static_cast<std::size_t>(count);
            elements.push_back(std::move(e));
        } else if (kw == "property") {
            if (elements.empty())
                throw ParseError("property declared before any element", line_no);
            Property p;
            std::string type;
            ls >> type;
            if (type == "list") {
                p.is_list = true;
                ls >> p.count_type >> p.type >> p.name;
                scalar_size(p.count_type);
            } else {
                p.type = type;
                ls >> p.name;
            }
            if (!ls)
                throw ParseError("malformed property declaration", line_no);
            scalar_size(p.type);
            elements.back().properties.push_back(std::move(p));
        } else {
            throw ParseError("unexpected PLY header keyword '" + kw + "'", line_no);
        }
    }
    if (!format_seen)
        throw ParseError("PLY header has no format line");

    TriangleMesh mesh;
    Reader body(bytes.substr(header_end + kEnd.size()));
    bool saw_vertex = false;
    bool saw_face = false;
    for (const Element& e : elements) {
        if (e.name == "vertex") {
            saw_vertex = true;
            int slot[3] = {-1, -1, -1};
            for (std::size_t i = 0; i < e.properties.size(); ++i) {
                const auto& p = e.properties[i];
                if (p.is_list)
                    throw ParseError("list property on vertex element");
                if (p.name == "x")
                    slot[0] = static_cast<int>(i);
                if (p.name == "y")
                    slot[1] = static_cast<int>(i);
                if (p.name == "z")
                    slot[2] = static_cast<int>(i);
            }
            if (slot[0] < 0 || slot[1] < 0 || slot[2] < 0)
                throw ParseError("vertex element lacks x/y/z");
            mesh.vertices.resize(e.count);
            for (std::size_t v = 0; v < e.count; ++v) {
                for (std::size_t i = 0; i < e.properties.size(); ++i) {
                    const auto& p = e.properties[i];
                    int axis = -1;
                    for (int k = 0; k < 3; ++k)
                        if (slot[k] == static_cast<int>(i))
                            axis = k;
                    if (axis < 0) {
                        body.skip(scalar_size(p.type));
                    } else if (p.type == "float" || p.type == "float32") {
                        mesh.vertices[v][axis] = body.get<float>();
                    } else {
                        mesh.vertices[v][axis] = static_cast<float>(body.get_scalar(p.type));
                    }
                }
            }
        } else if (e.name == "face") {
            saw_face = true;
            mesh.triangles.resize(e.count);
            bool has_material = false;
            for (const auto& p : e.properties)
                if (p.name == "material" && !p.is_list)
                    has_material = true;
            if (has_material)
                mesh.triangle_materials.resize(e.count);
            for (std::size_t f = 0; f < e.count; ++f) {
                for (const auto& p : e.properties) {
                    if (p.is_list && (p.name == "vertex_indices" || p.name == "vertex_index")) {
                        const double n = body.get_scalar(p.count_type);
                        if (n != 3)
                            throw ParseError("face " + std::to_string(f) + " is not a triangle");
                        for (int k = 0; k < 3; ++k) {
                            const double idx = body.get_scalar(p.type);
                            if (idx < 0)
                                throw ParseError("negative vertex index in face " + std::to_string(f));
                            mesh.triangles[f][k] = static_cast<std::uint32_t>(idx);
                        }
                    } else if (p.is_list) {
                        const auto n = static_cast<std::size_t>(body.get_scalar(p.count_type));
                        body.skip(n * scalar_size(p.type));
                    } else if (p.name == "material") {
                        mesh.triangle_materials[f] = static_cast<std::uint16_t>(body.get_scalar(p.type));
                    } else {
                        body.skip(scalar_size(p.type));
                    }
                }
            }
        } else {
            for (std::size_t i = 0; i < e.count; ++i)
                for (const auto& p : e.properties) {
                    if (p.is_list)
                        body.skip(static_cast<std::size_t>(body.get_scalar(p.count_type)) * scalar_size(p.type));
                    else
                        body.skip(scalar_size(p.type));
                }
        }
    }
    if (!saw_vertex || !saw_face)
        throw ParseError("PLY file needs both vertex and face elements");
    if (!body.at_end())
        throw ParseError("PLY body longer than its header declares");
    for (const auto& t : mesh.triangles)
        for (auto idx : t)
            if (idx >= mesh.vertices.size())
                throw ParseError("face index out of range");
    return mesh;
}

TriangleMesh load_ply_file(const std::filesystem::path& path) { return read_ply(read_file(path)); }

void save_ply_file(const TriangleMesh& mesh, const std::filesystem::path& path) { write_file(path, write_ply(mesh)); }

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw NotFoundError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error("write failed for " + path.string());
}

} // namespace citytwin
