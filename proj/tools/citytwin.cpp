// SPDX-License-Identifier: Apache-2.0
//
// citytwin: dataset conversion, scene assembly, coverage maps, mesh
// simplification and synthetic datasets from the command line.
//
// Exit codes: 0 success, 1 partial result (skipped models), 2 user or
// configuration error.

#include "citytwin/config.hpp"
#include "citytwin/error.hpp"
#include "citytwin/log.hpp"
#include "citytwin/radio.hpp"
#include "citytwin/raytrace.hpp"
#include "citytwin/scene.hpp"
#include "citytwin/synth.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace citytwin;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

struct Globals {
    std::string config_path;
    int threads = -1;
    bool quiet = false;
};

AppConfig effective_config(const Globals& g)
{
    AppConfig cfg = g.config_path.empty() ? AppConfig{} : load_config(g.config_path);
    if (g.threads >= 0)
        cfg.threads = static_cast<unsigned>(g.threads);
    return cfg;
}

void echo_config(const Globals& g, const AppConfig& cfg)
{
    if (g.quiet)
        return;
    std::cerr << "# effective configuration\n" << config_to_ini(cfg) << "# end configuration\n";
}

void write_summary(const fs::path& path, json summary)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    write_file(path, summary.dump(1) + "\n");
}

/// "lon,lat" or "lon,lat,height".
std::vector<double> parse_numbers(const std::string& text, std::size_t min_count, std::size_t max_count,
                                  const std::string& what)
{
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(what + ": invalid number '" + item + "'");
        }
    }
    if (out.size() < min_count || out.size() > max_count)
        throw ConfigError(what + ": expected " + std::to_string(min_count) + " to " + std::to_string(max_count) +
                          " comma-separated numbers");
    return out;
}

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------

struct ConvertArgs {
    std::string in;
    std::string catalog;
    std::string out;
    std::string tile;
    std::string crs;
    std::string antennas_pre;
    std::string antennas_post;
};

int run_convert(const Globals& g, const ConvertArgs& a)
{
    Globals local = g;
    if (!a.crs.empty())
        local.config_path = a.crs;
    const AppConfig cfg = effective_config(local);
    echo_config(local, cfg);

    if (!fs::is_directory(a.in))
        throw InputError("OBJ directory " + a.in + " does not exist");
    const std::string text = read_file(a.catalog);
    const std::string ext = fs::path(a.catalog).extension().string();
    const auto catalog = ext == ".csv" ? parse_source_catalog_csv(text) : parse_source_catalog_geojson(text);
    std::string tile = a.tile;
    if (tile.empty())
        tile = fs::path(a.in).lexically_normal().filename().string();
    if (tile.empty())
        tile = fs::absolute(a.in).lexically_normal().parent_path().filename().string();

    const ConvertResult result = convert_tile(a.in, catalog, cfg.crs, tile, a.out, cfg.threads);

    json summary = {{"command", "convert"},
                    {"tile", tile},
                    {"models_converted", result.models.size()},
                    {"models_skipped", result.skipped.size()},
                    {"total_triangles", result.total_triangles},
                    {"skipped", json::array()},
                    {"config", config_to_ini(cfg)}};
    for (const auto& s : result.skipped)
        summary["skipped"].push_back({{"model_id", s.model_id}, {"reason", s.reason}});

    if (!a.antennas_pre.empty() || !a.antennas_post.empty()) {
        const std::string pre = a.antennas_pre.empty() ? R"({"type":"FeatureCollection","features":[]})"
                                                       : read_file(a.antennas_pre);
        const std::string post = a.antennas_post.empty() ? R"({"type":"FeatureCollection","features":[]})"
                                                         : read_file(a.antennas_post);
        const auto merged = merge_antenna_datasets(pre, post, cfg.antenna_columns);
        const fs::path dir = fs::path(a.out) / kAntennasDir;
        fs::create_directories(dir);
        write_file(dir / kAntennasFile, write_antennas(merged));
        summary["antennas"] = merged.size();
    }
    write_summary(fs::path(a.out) / kModelsDir / (tile + "_convert.json"), summary);

    std::cout << "tile " << tile << ": " << result.models.size() << " models converted, " << result.skipped.size()
              << " skipped, " << result.total_triangles << " triangles\n";
    for (const auto& s : result.skipped)
        std::cout << "skipped " << s.model_id << ": " << s.reason << "\n";
    return result.skipped.empty() ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------

struct SceneArgs {
    std::string root;
    std::string tile;
    std::string center;
    double radius = 0.0;
    std::string out;
    bool deploy = false;
    std::vector<std::string> tx_at;
    std::vector<std::string> rx_at;
};

int run_scene(const Globals& g, const SceneArgs& a)
{
    const AppConfig cfg = effective_config(g);
    echo_config(g, cfg);
    const fs::path root = dataset_root(a.root.empty() ? fs::path(".") : fs::path(a.root));
    if (a.tile.empty() == a.center.empty())
        throw ConfigError("give exactly one of --tile or --center");

    Scene scene = [&] {
        if (!a.tile.empty())
            return load_tile_scene(root, a.tile, cfg.crs.lcc);
        if (!(a.radius > 0.0))
            throw ConfigError("--radius must be positive");
        const auto c = parse_numbers(a.center, 2, 2, "--center");
        return extract_scene(root, GeoCoord{c[0], c[1], 0.0}, a.radius, cfg.crs.lcc);
    }();

    std::size_t deployed = 0;
    if (a.deploy)
        deployed = deploy_antennas(scene, cfg.poles);
    int custom = 0;
    for (const auto& spec : a.tx_at) {
        const auto v = parse_numbers(spec, 2, 3, "--tx-at");
        std::optional<double> h;
        if (v.size() == 3)
            h = v[2];
        place_device(scene, GeoCoord{v[0], v[1], 0.0}, DeviceRole::tx, "tx-" + std::to_string(custom++), h);
    }
    int receivers = 0;
    for (const auto& spec : a.rx_at) {
        const auto v = parse_numbers(spec, 2, 3, "--rx-at");
        std::optional<double> h;
        if (v.size() == 3)
            h = v[2];
        place_device(scene, GeoCoord{v[0], v[1], 0.0}, DeviceRole::rx, "rx-" + std::to_string(receivers++), h);
    }

    write_scene_descriptor(scene, a.out);
    std::size_t models = 0;
    for (const auto& m : scene.meshes)
        if (m.model_id != kGroundId)
            ++models;
    json summary = {{"command", "scene"},
                    {"name", scene.name},
                    {"models", models},
                    {"antennas", scene.antennas.size()},
                    {"triangles", scene.triangle_count()},
                    {"transmitters", scene.tx_count()},
                    {"deployed_antennas", deployed},
                    {"descriptor", a.out},
                    {"config", config_to_ini(cfg)}};
    fs::path summary_path = a.out;
    summary_path.replace_extension(".summary.json");
    write_summary(summary_path, summary);
    std::cout << "scene " << scene.name << ": " << models << " models, " << scene.antennas.size() << " antennas, "
              << scene.triangle_count() << " triangles, " << scene.tx_count() << " transmitters\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct CoverageArgs {
    std::string scene;
    std::string tx = "all";
    double grid = 5.0;
    double rxh = kDefaultRxHeight;
    std::string out;
    std::vector<double> req_mbps;
    long rays = -1;
};

int run_coverage(const Globals& g, const CoverageArgs& a)
{
    AppConfig cfg = effective_config(g);
    if (a.rays >= 0) {
        if (a.rays < 1)
            throw ConfigError("--rays must be >= 1");
        cfg.rt.n_launch_rays = static_cast<std::size_t>(a.rays);
    }
    cfg.validate();
    echo_config(g, cfg);

    const Scene scene = load_scene_descriptor(a.scene);
    CoverageOptions options;
    options.threads = cfg.threads;
    if (a.tx != "all") {
        std::stringstream ss(a.tx);
        for (std::string id; std::getline(ss, id, ',');)
            if (!id.empty())
                options.tx_ids.push_back(id);
    }
    if (scene.tx_count() == 0)
        throw ConfigError("scene '" + scene.name + "' has no transmitter");

    const SceneGeometry geometry = build_scene_geometry(scene, cfg.materials, cfg.radio.frequency_hz);
    const CoverageMap map = coverage_map(scene, geometry, cfg.radio, cfg.rt, {a.grid, a.rxh}, options);

    const std::string prefix = a.out;
    if (fs::path(prefix).has_parent_path())
        fs::create_directories(fs::path(prefix).parent_path());
    write_file(prefix + ".csv", export_csv(map));
    write_file(prefix + ".pgm", export_pgm(map));

    std::size_t ok = 0, outage = 0, indoor = 0;
    for (const auto& c : map.cells) {
        ok += c.flags == cell_ok;
        outage += c.flags == cell_outage;
        indoor += c.flags == cell_indoor;
    }
    json summary = {{"command", "coverage"},
                    {"scene", scene.name},
                    {"transmitters", map.tx_ids},
                    {"grid", {{"nx", map.nx}, {"ny", map.ny}, {"cell_m", map.cell_m}, {"rx_height_m", map.rx_height_m}}},
                    {"cells", {{"served", ok}, {"outage", outage}, {"indoor", indoor}}},
                    {"outputs", {prefix + ".csv", prefix + ".pgm"}},
                    {"requirements", json::array()},
                    {"config", config_to_ini(cfg)}};
    std::cout << "coverage " << scene.name << ": " << map.nx << "x" << map.ny << " cells, " << ok << " served, "
              << outage << " outage, " << indoor << " indoor\n";
    for (double mbps : a.req_mbps) {
        if (!(mbps > 0.0))
            throw ConfigError("--req must be positive");
        const RateRequirement req{format_number(mbps) + "Mbps", mbps * 1e6};
        const auto pass = threshold_map(map, req);
        std::size_t n_pass = 0;
        for (auto p : pass)
            n_pass += p;
        const std::string file = prefix + "_req" + format_number(mbps) + ".csv";
        write_file(file, export_threshold_csv(map, pass, req));
        summary["requirements"].push_back({{"rate_bps", req.rate_bps},
                                           {"min_snr_db", min_snr_for_rate(req.rate_bps, cfg.radio.bandwidth_hz)},
                                           {"cells_passing", n_pass},
                                           {"output", file}});
        summary["outputs"].push_back(file);
        std::cout << "requirement " << req.name << ": " << n_pass << " cells pass\n";
    }
    write_summary(prefix + "_summary.json", summary);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimplifyArgs {
    std::string in;
    std::size_t target = 0;
    std::string out;
};

int run_simplify(const Globals& g, const SimplifyArgs& a)
{
    (void)g;
    const TriangleMesh mesh = load_ply_file(a.in);
    const TriangleMesh result = a.target >= mesh.triangle_count() ? mesh : simplify(mesh, a.target);
    save_ply_file(result, a.out);
    const auto report = validate(result);
    write_summary(a.out + ".summary.json", {{"command", "simplify"},
                                            {"input_triangles", mesh.triangle_count()},
                                            {"output_triangles", result.triangle_count()},
                                            {"clean", report.clean()}});
    std::cout << "simplified " << mesh.triangle_count() << " -> " << result.triangle_count() << " triangles\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string spec;
    std::string out;
};

int run_synth(const Globals& g, const SynthArgs& a)
{
    const AppConfig cfg = effective_config(g);
    echo_config(g, cfg);
    const SynthSpec spec = parse_synth_spec(read_file(a.spec));
    const SynthResult result = generate_synthetic_dataset(spec, a.out, cfg.crs, cfg.threads);
    std::size_t models = 0, skipped = 0;
    for (const auto& t : result.tiles) {
        models += t.models.size();
        skipped += t.skipped.size();
    }
    std::cout << "synthetic dataset: " << spec.tiles.size() << " tiles, " << models << " models, " << skipped
              << " skipped, " << result.ground_truth["antennas"].size() << " antennas\n";
    return skipped == 0 ? kExitOk : kExitPartial;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"citytwin: city-scale radio digital twin tools"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "INI configuration file");
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    app.add_flag("--quiet", g.quiet, "Do not echo the effective configuration");

    auto* config_cmd = app.add_subcommand("config", "Print the effective configuration");

    ConvertArgs ca;
    auto* convert = app.add_subcommand("convert", "Convert OBJ sources of one tile to the dataset layout");
    convert->add_option("--in", ca.in, "Directory of OBJ files")->required();
    convert->add_option("--catalog", ca.catalog, "Source catalog (.csv or .geojson)")->required();
    convert->add_option("--out", ca.out, "Dataset root")->required();
    convert->add_option("--tile", ca.tile, "Tile name (default: name of --in)");
    convert->add_option("--crs", ca.crs, "INI configuration with projection settings");
    convert->add_option("--antennas-pre", ca.antennas_pre, "Pre-2017 antenna GeoJSON");
    convert->add_option("--antennas-post", ca.antennas_post, "Post-2017 antenna GeoJSON");

    SceneArgs sa;
    auto* scene = app.add_subcommand("scene", "Assemble a scene and write its descriptor");
    scene->add_option("--root", sa.root, "Dataset root (CITYTWIN_DATA overrides)");
    scene->add_option("--tile", sa.tile, "Predefined tile");
    scene->add_option("--center", sa.center, "Disc center lon,lat");
    scene->add_option("--radius", sa.radius, "Disc radius in meters");
    scene->add_option("--out", sa.out, "Descriptor path")->required();
    scene->add_flag("--deploy-antennas", sa.deploy, "Place a transmitter at every antenna");
    scene->add_option("--tx-at", sa.tx_at, "Custom transmitter lon,lat[,height]");
    scene->add_option("--rx-at", sa.rx_at, "Receiver lon,lat[,height]");

    CoverageArgs cva;
    auto* coverage = app.add_subcommand("coverage", "Best-server SNR and capacity map");
    coverage->add_option("--scene", cva.scene, "Scene descriptor")->required();
    coverage->add_option("--tx", cva.tx, "all or comma-separated transmitter ids");
    coverage->add_option("--grid", cva.grid, "Cell size in meters")->check(CLI::PositiveNumber);
    coverage->add_option("--rxh", cva.rxh, "Receiver height in meters")->check(CLI::NonNegativeNumber);
    coverage->add_option("--out", cva.out, "Output prefix")->required();
    coverage->add_option("--req", cva.req_mbps, "Rate requirement in Mbps (repeatable)");
    coverage->add_option("--rays", cva.rays, "Launch rays per transmitter");

    SimplifyArgs sia;
    auto* simplify_cmd = app.add_subcommand("simplify", "Reduce the triangle count of a PLY mesh");
    simplify_cmd->add_option("--in", sia.in, "Input PLY")->required();
    simplify_cmd->add_option("--target", sia.target, "Target triangle count")->required();
    simplify_cmd->add_option("--out", sia.out, "Output PLY")->required();

    SynthArgs sya;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--spec", sya.spec, "JSON specification")->required();
    synth->add_option("--out", sya.out, "Dataset root")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (config_cmd->parsed()) {
            std::cout << config_to_ini(effective_config(g));
            return kExitOk;
        }
        if (convert->parsed())
            return run_convert(g, ca);
        if (scene->parsed())
            return run_scene(g, sa);
        if (coverage->parsed())
            return run_coverage(g, cva);
        if (simplify_cmd->parsed())
            return run_simplify(g, sia);
        if (synth->parsed())
            return run_synth(g, sya);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitPartial;
    }
    return kExitUsage;
}
