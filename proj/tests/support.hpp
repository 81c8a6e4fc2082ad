// SPDX-License-Identifier: Apache-2.0
//
// Scene builders and scratch directories shared by the test binaries.
#pragma once

#include "citytwin/raytrace.hpp"
#include "citytwin/scene.hpp"
#include "citytwin/synth.hpp"

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

namespace citytwin::test {

/// Directory removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag)
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("citytwin_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() { std::filesystem::remove_all(path_); }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Quad a-b-c-d as two triangles.
inline void add_quad(std::vector<WorldTriangle>& out, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                     std::uint32_t material)
{
    out.push_back({a, b, c, material});
    out.push_back({a, c, d, material});
}

/// Geometry from raw triangles; `ground_count` leading triangles are ground.
inline SceneGeometry make_geometry(std::vector<WorldTriangle> tris, std::size_t ground_count,
                                   std::vector<Material> materials, double f_hz)
{
    SceneGeometry::Input in;
    in.ground.assign(tris.size(), false);
    for (std::size_t i = 0; i < ground_count && i < tris.size(); ++i)
        in.ground[i] = true;
    in.triangles = std::move(tris);
    in.materials = std::move(materials);
    return SceneGeometry(std::move(in), f_hz);
}

/// Scene with no geometry whose boundary is the local square [-half, half]².
inline Scene empty_scene(double half)
{
    const GeoCoord origin{-71.1025189571, 42.3570902827, 0.0};
    Scene scene("empty", origin);
    for (const Vec3& p : {Vec3{-half, -half, 0}, Vec3{half, -half, 0}, Vec3{half, half, 0}, Vec3{-half, half, 0},
                          Vec3{-half, -half, 0}})
        scene.boundary.push_back(scene.frame.to_geo(p));
    return scene;
}

} // namespace citytwin::test
