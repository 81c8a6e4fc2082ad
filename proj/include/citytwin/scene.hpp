// SPDX-License-Identifier: Apache-2.0
//
// Scene assembly: tiles or discs of converted models placed in a local metric
// frame, radio materials, a ground plane and radio devices.
#pragma once

#include "citytwin/geodesy.hpp"
#include "citytwin/ingest.hpp"
#include "citytwin/mesh.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace citytwin {

// ---------------------------------------------------------------------------
// Materials

/// Frequency-dependent radio material: εr = a·f^b, σ = c·f^d S/m, f in GHz.
struct Material {
    std::string name;
    double a = 1.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    double band_min_ghz = 0.0;
    double band_max_ghz = 0.0;

    double relative_permittivity(double f_hz) const;
    double conductivity(double f_hz) const;
    bool in_band(double f_hz) const;
};

class MaterialTable {
public:
    /// Recommendation ITU-R P.2040 materials ("itu_concrete", "itu_brick", ...).
    static MaterialTable itu();

    void add(Material m);
    const Material* find(std::string_view name) const;
    /// Throws NotFoundError for unknown names.
    const Material& at(std::string_view name) const;
    const std::vector<Material>& all() const { return materials_; }
    /// Warns once per material used outside its validity band at `f_hz`.
    void check_band(std::string_view name, double f_hz) const;

private:
    std::vector<Material> materials_;
};

inline constexpr std::string_view kConcrete = "itu_concrete";
inline constexpr std::string_view kBrick = "itu_brick";
inline constexpr std::string_view kMediumDryGround = "itu_medium_dry_ground";

/// Wall → brick, Building → concrete, Ground → medium dry ground; anything
/// else falls back to concrete with a warning.
std::string assign_material(std::string_view model_type);

// ---------------------------------------------------------------------------
// Devices

struct Sector {
    /// 0° is local +y (north), clockwise positive.
    double azimuth_deg = 0.0;
    double width_deg = 120.0;
    double downtilt_deg = 0.0;
};

enum class DeviceRole { tx, rx };
enum class DeviceSource { catalog_antenna, custom };

std::string_view to_string(DeviceRole role);
std::string_view to_string(DeviceSource source);

struct RadioDevice {
    std::string device_id;
    Vec3 position;
    DeviceRole role = DeviceRole::tx;
    std::vector<Sector> sectors;
    DeviceSource source = DeviceSource::custom;
};

inline constexpr double kDefaultTxHeight = 10.0;
inline constexpr double kDefaultRxHeight = 1.5;

/// Three 120° sectors at 0/120/240°.
std::vector<Sector> default_sectors();

/// Pole type → mounting height. Unknown or empty types use the default.
struct PoleHeightTable {
    std::map<std::string, double> heights;
    double default_height = kDefaultTxHeight;

    static PoleHeightTable defaults();
    double height_of(std::string_view pole_type) const;
};

double antenna_height_from_pole_type(std::string_view pole_type, const PoleHeightTable& table = PoleHeightTable::defaults());

// ---------------------------------------------------------------------------
// Scene

inline constexpr std::string_view kGroundId = "ground";

struct PlacedMesh {
    std::string model_id;
    std::string model_type;
    /// PLY file, empty for generated geometry such as the ground plane.
    std::filesystem::path mesh_file;
    std::shared_ptr<const TriangleMesh> mesh;
    Vec3 translation;
    std::string material;
};

class Scene {
public:
    Scene(std::string name, const GeoCoord& origin, const LccSpec& lcc = LccSpec::massachusetts_mainland());

    std::string name;
    LocalFrame frame;
    /// Closed ring of geodetic positions.
    std::vector<GeoCoord> boundary;
    std::vector<PlacedMesh> meshes;
    std::vector<AntennaRecord> antennas;
    std::vector<RadioDevice> devices;

    /// Boundary ring in local coordinates (z = 0).
    std::vector<Vec3> local_boundary() const;
    /// Closed membership test against the boundary polygon in local x/y.
    bool contains_local(const Vec3& p) const;
    const PlacedMesh* ground() const;
    std::size_t triangle_count() const;
    std::size_t tx_count() const;
};

/// Dataset root from CITYTWIN_DATA when set, else `fallback`.
std::filesystem::path dataset_root(const std::filesystem::path& fallback);

/// Names of every tile under `<root>/boston3d`, sorted.
std::vector<std::string> available_tiles(const std::filesystem::path& root);

/// Throws NotFoundError (listing available tiles) for unknown tiles.
Scene load_tile_scene(const std::filesystem::path& root, const std::string& tile_name,
                      const LccSpec& lcc = LccSpec::massachusetts_mainland());

/// Every model whose catalog centroid lies within `radius_m` of `center`.
/// Throws NotFoundError when the result holds no model.
Scene extract_scene(const std::filesystem::path& root, const GeoCoord& center, double radius_m,
                    const LccSpec& lcc = LccSpec::massachusetts_mainland());

/// One rectangle at z = 0 covering the boundary with 10% margin; idempotent.
void add_ground_plane(Scene& scene);

using DeviceLocation = std::variant<GeoCoord, Vec3>;

/// Converts geographic locations through the scene frame. Height defaults to
/// 10 m for TX and 1.5 m for RX; a local location with nonzero z keeps its z
/// unless `height_m` is given. TX devices get default_sectors() when `sectors`
/// is empty. Throws PlacementError outside the boundary.
RadioDevice& place_device(Scene& scene, const DeviceLocation& location, DeviceRole role, std::string device_id,
                          std::optional<double> height_m = std::nullopt, std::vector<Sector> sectors = {});

/// Places a TX at every antenna of the scene (height from its pole type).
std::size_t deploy_antennas(Scene& scene, const PoleHeightTable& poles = PoleHeightTable::defaults());

// ---------------------------------------------------------------------------
// Descriptor files

/// XML descriptor with one `shape` per mesh; mesh paths are written relative
/// to the descriptor directory.
void write_scene_descriptor(const Scene& scene, const std::filesystem::path& path);
std::string scene_descriptor_xml(const Scene& scene, const std::filesystem::path& base_dir);
/// Throws NotFoundError naming the entry whose mesh file is missing.
Scene load_scene_descriptor(const std::filesystem::path& path);

} // namespace citytwin
