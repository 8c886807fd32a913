#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ntnra/timing.hpp"

namespace ntnra::geometry {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kSpeedOfLightKmS = 299792.458;
inline constexpr double kGeoAltitudeKm = 35793.0;
inline constexpr double kBisectionTolKm = 1e-6;

enum class Payload { Regenerative, Transparent };

std::string to_string(Payload p);
Payload payload_from_string(const std::string& s);

struct NtnGeometry {
    double h_s_km = 600.0;
    double r_earth_km = kEarthRadiusKm;
    Payload payload = Payload::Regenerative;
    double alpha_min_deg = 10.0;
    double alpha_max_deg = 90.0;
    double c_km_s = kSpeedOfLightKmS;

    // throws std::invalid_argument
    void validate() const;
};

// alpha in (0, 90]
double slant_range(double alpha_deg, const NtnGeometry& g);
double rtt_seconds(double d_km, Payload payload, double c_km_s = kSpeedOfLightKmS);
timing::Duration rtt(double d_km, Payload payload, double c_km_s = kSpeedOfLightKmS);
// RTT of a UE seen at the given elevation
timing::Duration rtt_at(double alpha_deg, const NtnGeometry& g);

struct DminResult {
    double d_min_km;
    double alpha_max_deg;
};

// Nearest slant range whose differential delay to the cell edge at alpha_min stays within the CP.
// cp_length in seconds; throws std::invalid_argument when cp_length <= 0
DminResult d_min(double alpha_min_deg, double cp_length_s, const NtnGeometry& g);

double cell_radius(double d_max, double d_min, double alpha_max_deg, double alpha_min_deg);
double terrestrial_radius(double cp_length_s, double c_km_s = kSpeedOfLightKmS);

// Earth central angle between nadir and a UE seen at elevation alpha, and its inverse
double central_angle_rad(double alpha_deg, const NtnGeometry& g);
double elevation_from_central_angle(double lambda_rad, const NtnGeometry& g);

struct CoveragePoint {
    double alpha_cen_deg;
    int format;
    double radius_km;
    double alpha_min_deg;
    double alpha_max_deg;
};

// cell whose far edge sits at alpha_min and whose near edge is set by the CP budget
CoveragePoint coverage_cell(double alpha_min_deg, int format, Standard standard, const NtnGeometry& g);
// alpha_min giving a cell centred at alpha_cen; nullopt if no such cell exists for this format
std::optional<double> alpha_min_for_center(double alpha_cen_deg, int format, Standard standard, const NtnGeometry& g);
std::vector<CoveragePoint> coverage_sweep(Standard standard, const std::vector<int>& formats, const NtnGeometry& g,
                                          double alpha_from_deg, double alpha_to_deg, double alpha_step_deg);

struct Serviceability {
    bool serviceable = false;
    int sfd = 0;
    int format = -1;  // -1 when unserviceable or not applicable
};

// SF-level delay at the BS: SFD from the smallest RTT, the remaining spread has to fit a CP.
// Picks the admissible format with the shortest CP.
Serviceability td_serviceability(timing::Duration rtt_min, timing::Duration rtt_max, Standard standard,
                                 const std::vector<int>& formats = {0, 1, 2});
// SF-level advance at the UE: every UE advances by its own estimate, so only sub-step error reaches the BS
Serviceability ta_serviceability(timing::Duration rtt_min, timing::Duration rtt_max);

}  // namespace ntnra::geometry
