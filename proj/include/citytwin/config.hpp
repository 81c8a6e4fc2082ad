// SPDX-License-Identifier: Apache-2.0
//
// INI run configuration shared by the command-line tools.
#pragma once

#include "citytwin/geodesy.hpp"
#include "citytwin/ingest.hpp"
#include "citytwin/radio.hpp"
#include "citytwin/raytrace.hpp"
#include "citytwin/scene.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace citytwin {

struct AppConfig {
    SourceCrs crs;
    RadioConfig radio;
    RtConfig rt;
    MaterialTable materials = MaterialTable::itu();
    PoleHeightTable poles = PoleHeightTable::defaults();
    AntennaColumnMap antenna_columns = AntennaColumnMap::defaults();
    /// 0 means one worker per hardware thread.
    unsigned threads = 0;

    /// Throws ConfigError.
    void validate() const;
};

/// Sections: projection, crs, radio, raytrace, run, pole_heights,
/// antenna_columns and one material.<name> per added or overridden material.
/// Values not present keep their defaults; unknown sections or keys are errors.
AppConfig parse_config(std::string_view ini);
AppConfig load_config(const std::filesystem::path& path);

/// Every effective value in the INI syntax accepted by parse_config.
std::string config_to_ini(const AppConfig& config);

} // namespace citytwin
