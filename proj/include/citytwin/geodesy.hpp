// SPDX-License-Identifier: Apache-2.0
//
// Coordinate machinery: WGS84 geodetic positions, the Lambert Conformal Conic
// state plane in which the source city model is delivered, and per-scene local
// metric frames obtained by differencing projected coordinates.
#pragma once

#include "citytwin/vec3.hpp"

#include <string>
#include <string_view>

namespace citytwin {

enum class LengthUnit { us_survey_foot, meter };

std::string_view to_string(LengthUnit unit);

/// Parses "us-survey-foot"/"ftUS" or "meter"/"m". Throws InputError otherwise.
LengthUnit parse_length_unit(std::string_view tag);

/// Meters per US survey foot, exactly 1200/3937.
inline constexpr double kUsSurveyFootMeters = 1200.0 / 3937.0;

/// Throws InputError for non-finite input.
double length_to_meters(double value, LengthUnit unit);
double meters_to_length(double meters, LengthUnit unit);

/// A length that always knows its unit.
struct Length {
    double value = 0.0;
    LengthUnit unit = LengthUnit::meter;

    double meters() const { return length_to_meters(value, unit); }
    Length to(LengthUnit target) const { return {meters_to_length(meters(), target), target}; }
};

/// Geodetic position: longitude/latitude in degrees (WGS84), altitude in meters.
struct GeoCoord {
    double lon = 0.0;
    double lat = 0.0;
    double alt = 0.0;

    /// Throws InputError when a component is non-finite or out of range.
    void validate() const;

    friend bool operator==(const GeoCoord&, const GeoCoord&) = default;
};

/// Easting/northing pair tagged with its unit. Construction rejects non-finite values.
class ProjectedCoord {
public:
    ProjectedCoord(double easting, double northing, LengthUnit unit);

    double easting() const { return easting_; }
    double northing() const { return northing_; }
    LengthUnit unit() const { return unit_; }

    ProjectedCoord to(LengthUnit target) const;

    /// Component-wise sum; throws InputError when units differ.
    ProjectedCoord operator+(const ProjectedCoord& other) const;
    ProjectedCoord operator-(const ProjectedCoord& other) const;

    friend bool operator==(const ProjectedCoord&, const ProjectedCoord&) = default;

private:
    double easting_;
    double northing_;
    LengthUnit unit_;
};

/// Lambert Conformal Conic (two standard parallels) on an ellipsoid.
struct LccSpec {
    double semi_major_axis_m = 6378137.0;
    double inverse_flattening = 298.257222101;
    double standard_parallel_1 = 0.0;
    double standard_parallel_2 = 0.0;
    double origin_latitude = 0.0;
    double central_meridian = 0.0;
    double false_easting = 0.0;
    double false_northing = 0.0;
    LengthUnit unit = LengthUnit::meter;

    /// NAD83 / Massachusetts Mainland (EPSG:2249), GRS80, US survey feet.
    static LccSpec massachusetts_mainland();

    void validate() const;
};

/// Precomputed projection constants for one LccSpec.
class LambertConformalConic {
public:
    explicit LambertConformalConic(const LccSpec& spec);

    ProjectedCoord forward(const GeoCoord& geo) const;
    /// Altitude of the result is 0.
    GeoCoord inverse(const ProjectedCoord& p) const;

    /// Point scale factor at latitude `lat_deg` (independent of longitude).
    double scale_factor(double lat_deg) const;

    const LccSpec& spec() const { return spec_; }

private:
    double t_of(double sin_phi) const;
    double rho_m(double lat_rad) const;

    LccSpec spec_;
    double e_;
    double n_;
    double af_;
    double rho0_;
};

ProjectedCoord lcc_forward(const GeoCoord& geo, const LccSpec& spec);
GeoCoord lcc_inverse(const ProjectedCoord& p, const LccSpec& spec);

/// The source CRS of the city model: a state-plane LCC plus a custom origin
/// that was subtracted from every vertex of the delivered meshes.
struct SourceCrs {
    LccSpec lcc = LccSpec::massachusetts_mainland();
    ProjectedCoord custom_origin{731100.0, 2902900.0, LengthUnit::us_survey_foot};

    void validate() const;
};

/// East/north/up frame in meters with its origin at a geodetic point.
/// Positions are obtained by projecting through the LCC and differencing.
class LocalFrame {
public:
    LocalFrame(const GeoCoord& origin, const LccSpec& lcc);

    const GeoCoord& origin() const { return origin_; }
    const LambertConformalConic& projection() const { return projection_; }

    Vec3 to_local(const GeoCoord& geo) const;
    GeoCoord to_geo(const Vec3& local) const;

    /// Local planar coordinates (m) of a projected point.
    Vec3 projected_to_local(const ProjectedCoord& p) const;
    ProjectedCoord local_to_projected(const Vec3& local) const;

private:
    GeoCoord origin_;
    LambertConformalConic projection_;
    double origin_e_m_;
    double origin_n_m_;
};

Vec3 geo_to_local(const GeoCoord& geo, const LocalFrame& frame);
GeoCoord local_to_geo(const Vec3& local, const LocalFrame& frame);

} // namespace citytwin
