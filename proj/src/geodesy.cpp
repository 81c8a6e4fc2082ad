// SPDX-License-Identifier: Apache-2.0
#include "citytwin/geodesy.hpp"

#include "citytwin/error.hpp"

#include <cmath>
#include <numbers>

namespace citytwin {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void require_finite(double v, const char* what)
{
    if (!std::isfinite(v))
        throw InputError(std::string("non-finite ") + what);
}

} // namespace

std::string_view to_string(LengthUnit unit)
{
    switch (unit) {
    case LengthUnit::us_survey_foot:
        return "us-survey-foot";
    case LengthUnit::meter:
        return "meter";
    }
    return "meter";
}

LengthUnit parse_length_unit(std::string_view tag)
{
    if (tag == "us-survey-foot" || tag == "ftUS" || tag == "us_survey_foot")
        return LengthUnit::us_survey_foot;
    if (tag == "meter" || tag == "m" || tag == "metre")
        return LengthUnit::meter;
    throw InputError("unknown length unit '" + std::string(tag) + "'");
}

double length_to_meters(double value, LengthUnit unit)
{
    require_finite(value, "length");
    switch (unit) {
    case LengthUnit::us_survey_foot:
        return value * 1200.0 / 3937.0;
    case LengthUnit::meter:
        return value;
    }
    throw InputError("unknown length unit");
}

double meters_to_length(double meters, LengthUnit unit)
{
    require_finite(meters, "length");
    switch (unit) {
    case LengthUnit::us_survey_foot:
        return meters * 3937.0 / 1200.0;
    case LengthUnit::meter:
        return meters;
    }
    throw InputError("unknown length unit");
}

void GeoCoord::validate() const
{
    require_finite(lon, "longitude");
    require_finite(lat, "latitude");
    require_finite(alt, "altitude");
    if (lon < -180.0 || lon > 180.0)
        throw InputError("longitude out of range: " + std::to_string(lon));
    if (lat < -90.0 || lat > 90.0)
        throw InputError("latitude out of range: " + std::to_string(lat));
}

ProjectedCoord::ProjectedCoord(double easting, double northing, LengthUnit unit)
    : easting_(easting), northing_(northing), unit_(unit)
{
    require_finite(easting, "easting");
    require_finite(northing, "northing");
}

ProjectedCoord ProjectedCoord::to(LengthUnit target) const
{
    if (target == unit_)
        return *this;
    return {meters_to_length(length_to_meters(easting_, unit_), target),
            meters_to_length(length_to_meters(northing_, unit_), target), target};
}

ProjectedCoord ProjectedCoord::operator+(const ProjectedCoord& other) const
{
    if (other.unit_ != unit_)
        throw InputError("unit mismatch in projected coordinate arithmetic");
    return {easting_ + other.easting_, northing_ + other.northing_, unit_};
}

ProjectedCoord ProjectedCoord::operator-(const ProjectedCoord& other) const
{
    if (other.unit_ != unit_)
        throw InputError("unit mismatch in projected coordinate arithmetic");
    return {easting_ - other.easting_, northing_ - other.northing_, unit_};
}

LccSpec LccSpec::massachusetts_mainland()
{
    LccSpec s;
    s.semi_major_axis_m = 6378137.0;
    s.inverse_flattening = 298.257222101;
    s.standard_parallel_1 = 41.0 + 43.0 / 60.0;
    s.standard_parallel_2 = 42.0 + 41.0 / 60.0;
    s.origin_latitude = 41.0;
    s.central_meridian = -71.5;
    s.false_easting = 656166.667;
    s.false_northing = 2460625.0;
    s.unit = LengthUnit::us_survey_foot;
    return s;
}

void LccSpec::validate() const
{
    for (double v : {semi_major_axis_m, inverse_flattening, standard_parallel_1, standard_parallel_2,
                     origin_latitude, central_meridian, false_easting, false_northing})
        require_finite(v, "projection parameter");
    if (!(semi_major_axis_m > 0.0))
        throw InputError("semi-major axis must be positive");
    if (!(inverse_flattening > 1.0))
        throw InputError("inverse flattening must exceed 1");
    for (double lat : {standard_parallel_1, standard_parallel_2})
        if (!(std::fabs(lat) < 90.0))
            throw InputError("standard parallel must lie strictly between the poles");
    if (std::fabs(origin_latitude) >= 90.0)
        throw InputError("latitude of origin must lie strictly between the poles");
    if (std::fabs(central_meridian) > 180.0)
        throw InputError("central meridian out of range");
    if (standard_parallel_1 == -standard_parallel_2)
        throw InputError("standard parallels symmetric about the equator give a cylinder, not a cone");
}

LambertConformalConic::LambertConformalConic(const LccSpec& spec) : spec_(spec)
{
    spec_.validate();
    const double f = 1.0 / spec_.inverse_flattening;
    e_ = std::sqrt(f * (2.0 - f));

    auto m_of = [this](double phi) {
        const double s = std::sin(phi);
        return std::cos(phi) / std::sqrt(1.0 - e_ * e_ * s * s);
    };
    const double phi1 = spec_.standard_parallel_1 * kDeg;
    const double phi2 = spec_.standard_parallel_2 * kDeg;
    const double m1 = m_of(phi1);
    const double t1 = t_of(std::sin(phi1));
    if (spec_.standard_parallel_1 == spec_.standard_parallel_2) {
        n_ = std::sin(phi1);
    } else {
        const double m2 = m_of(phi2);
        const double t2 = t_of(std::sin(phi2));
        n_ = (std::log(m1) - std::log(m2)) / (std::log(t1) - std::log(t2));
    }
    af_ = spec_.semi_major_axis_m * m1 / (n_ * std::pow(t1, n_));
    rho0_ = rho_m(spec_.origin_latitude * kDeg);
}

double LambertConformalConic::t_of(double sin_phi) const
{
    const double es = e_ * sin_phi;
    // tan(pi/4 - phi/2) written in terms of sin(phi) to stay accurate near the poles.
    return std::sqrt((1.0 - sin_phi) / (1.0 + sin_phi) * std::pow((1.0 + es) / (1.0 - es), e_));
}

double LambertConformalConic::rho_m(double lat_rad) const
{
    return af_ * std::pow(t_of(std::sin(lat_rad)), n_);
}

ProjectedCoord LambertConformalConic::forward(const GeoCoord& geo) const
{
    geo.validate();
    if (std::fabs(geo.lat) >= 90.0)
        throw DomainError("latitude at a pole has no conic image");
    const double rho = rho_m(geo.lat * kDeg);
    double dlon = geo.lon - spec_.central_meridian;
    if (dlon > 180.0)
        dlon -= 360.0;
    else if (dlon < -180.0)
        dlon += 360.0;
    const double theta = n_ * dlon * kDeg;
    const double x_m = rho * std::sin(theta);
    const double y_m = rho0_ - rho * std::cos(theta);
    return {spec_.false_easting + meters_to_length(x_m, spec_.unit),
            spec_.false_northing + meters_to_length(y_m, spec_.unit), spec_.unit};
}

GeoCoord LambertConformalConic::inverse(const ProjectedCoord& p) const
{
    if (p.unit() != spec_.unit)
        throw InputError("projected coordinate unit does not match the projection unit");
    const double x = length_to_meters(p.easting() - spec_.false_easting, spec_.unit);
    const double y = rho0_ - length_to_meters(p.northing() - spec_.false_northing, spec_.unit);
    const double sgn = n_ < 0.0 ? -1.0 : 1.0;
    const double rho = sgn * std::hypot(x, y);
    if (!(rho * sgn > 0.0))
        throw DomainError("point maps to the cone apex");
    const double theta = std::atan2(sgn * x, sgn * y);
    const double t = std::pow(rho / af_, 1.0 / n_);

    double phi = std::numbers::pi / 2.0 - 2.0 * std::atan(t);
    for (int i = 0; i < 50; ++i) {
        const double es = e_ * std::sin(phi);
        const double next =
            std::numbers::pi / 2.0 - 2.0 * std::atan(t * std::pow((1.0 - es) / (1.0 + es), e_ / 2.0));
        const double delta = next - phi;
        phi = next;
        if (std::fabs(delta) < 1e-15)
            break;
    }
    double lon = theta / n_ / kDeg + spec_.central_meridian;
    if (lon > 180.0)
        lon -= 360.0;
    else if (lon < -180.0)
        lon += 360.0;
    return {lon, phi / kDeg, 0.0};
}

double LambertConformalConic::scale_factor(double lat_deg) const
{
    const double phi = lat_deg * kDeg;
    const double s = std::sin(phi);
    const double m = std::cos(phi) / std::sqrt(1.0 - e_ * e_ * s * s);
    return rho_m(phi) * n_ / (spec_.semi_major_axis_m * m);
}

ProjectedCoord lcc_forward(const GeoCoord& geo, const LccSpec& spec)
{
    return LambertConformalConic(spec).forward(geo);
}

GeoCoord lcc_inverse(const ProjectedCoord& p, const LccSpec& spec)
{
    return LambertConformalConic(spec).inverse(p);
}

void SourceCrs::validate() const
{
    lcc.validate();
    if (custom_origin.unit() != lcc.unit)
        throw InputError("custom origin unit differs from the projection unit");
}

LocalFrame::LocalFrame(const GeoCoord& origin, const LccSpec& lcc)
    : origin_(origin), projection_(lcc)
{
    const ProjectedCoord p = projection_.forward(origin);
    origin_e_m_ = length_to_meters(p.easting(), p.unit());
    origin_n_m_ = length_to_meters(p.northing(), p.unit());
}

Vec3 LocalFrame::to_local(const GeoCoord& geo) const
{
    return projected_to_local(projection_.forward(geo)) + Vec3{0.0, 0.0, geo.alt - origin_.alt};
}

GeoCoord LocalFrame::to_geo(const Vec3& local) const
{
    if (!is_finite(local))
        throw InputError("non-finite local coordinate");
    GeoCoord g = projection_.inverse(local_to_projected(local));
    g.alt = local.z + origin_.alt;
    return g;
}

Vec3 LocalFrame::projected_to_local(const ProjectedCoord& p) const
{
    return {length_to_meters(p.easting(), p.unit()) - origin_e_m_,
            length_to_meters(p.northing(), p.unit()) - origin_n_m_, 0.0};
}

ProjectedCoord LocalFrame::local_to_projected(const Vec3& local) const
{
    const LengthUnit unit = projection_.spec().unit;
    return {meters_to_length(local.x + origin_e_m_, unit), meters_to_length(local.y + origin_n_m_, unit),
            unit};
}

Vec3 geo_to_local(const GeoCoord& geo, const LocalFrame& frame) { return frame.to_local(geo); }

GeoCoord local_to_geo(const Vec3& local, const LocalFrame& frame) { return frame.to_geo(local); }

} // namespace citytwin
