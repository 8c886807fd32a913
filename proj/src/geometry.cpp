#include "ntnra/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "ntnra/raconfig.hpp"

namespace ntnra::geometry {

namespace {

double rad(double deg) { return deg * std::numbers::pi / 180.0; }
double deg(double r) { return r * 180.0 / std::numbers::pi; }

}  // namespace

std::string to_string(Payload p)
{
    return p == Payload::Regenerative ? "regenerative" : "transparent";
}

Payload payload_from_string(const std::string& s)
{
    if (s == "regenerative") return Payload::Regenerative;
    if (s == "transparent") return Payload::Transparent;
    throw std::invalid_argument("unknown payload '" + s + "'");
}

void NtnGeometry::validate() const
{
    if (!(h_s_km > 0)) throw std::invalid_argument("altitude must be positive");
    if (!(r_earth_km > 0) || !(c_km_s > 0)) throw std::invalid_argument("earth radius and c must be positive");
    if (!(alpha_min_deg > 0) || alpha_min_deg > alpha_max_deg || alpha_max_deg > 90)
        throw std::invalid_argument("elevation angles must satisfy 0 < alpha_min <= alpha_max <= 90");
}

double slant_range(double alpha_deg, const NtnGeometry& g)
{
    if (!(alpha_deg > 0) || alpha_deg > 90) throw std::invalid_argument("elevation must be in (0, 90]");
    if (alpha_deg == 90) return g.h_s_km;
    const double s = std::sin(rad(alpha_deg));
    const double re = g.r_earth_km;
    const double h = g.h_s_km;
    return std::sqrt(re * re * s * s + h * h + 2 * re * h) - re * s;
}

double rtt_seconds(double d_km, Payload payload, double c_km_s)
{
    if (!(d_km > 0)) throw std::invalid_argument("distance must be positive");
    const double legs = payload == Payload::Regenerative ? 2.0 : 4.0;
    return legs * d_km / c_km_s;
}

timing::Duration rtt(double d_km, Payload payload, double c_km_s)
{
    return timing::Duration::from_seconds(rtt_seconds(d_km, payload, c_km_s));
}

timing::Duration rtt_at(double alpha_deg, const NtnGeometry& g)
{
    return rtt(slant_range(alpha_deg, g), g.payload, g.c_km_s);
}

DminResult d_min(double alpha_min_deg, double cp_length_s, const NtnGeometry& g)
{
    if (!(cp_length_s > 0)) throw std::invalid_argument("CP length must be positive");
    const double d_far = slant_range(alpha_min_deg, g);
    const double budget = g.c_km_s * cp_length_s / 2.0;
    if (d_far - g.h_s_km <= budget) return {g.h_s_km, 90.0};
    // D falls monotonically with elevation: find where the spread reaches the budget
    double lo = alpha_min_deg;  // feasible
    double hi = 90.0;           // infeasible
    while (true) {
        const double mid = 0.5 * (lo + hi);
        if (d_far - slant_range(mid, g) <= budget)
            lo = mid;
        else
            hi = mid;
        if (slant_range(lo, g) - slant_range(hi, g) < kBisectionTolKm || hi - lo < 1e-13) break;
    }
    return {slant_range(lo, g), lo};
}

double cell_radius(double d_max, double d_min, double alpha_max_deg, double alpha_min_deg)
{
    const double v = d_max * d_max + d_min * d_min + 2 * d_max * d_min * std::cos(rad(alpha_max_deg + alpha_min_deg));
    return std::sqrt(std::max(0.0, v)) / 2.0;
}

double terrestrial_radius(double cp_length_s, double c_km_s)
{
    if (!(cp_length_s > 0)) throw std::invalid_argument("CP length must be positive");
    return c_km_s * cp_length_s / 2.0;
}

double central_angle_rad(double alpha_deg, const NtnGeometry& g)
{
    const double a = rad(alpha_deg);
    return std::acos(g.r_earth_km * std::cos(a) / (g.r_earth_km + g.h_s_km)) - a;
}

double elevation_from_central_angle(double lambda_rad, const NtnGeometry& g)
{
    if (lambda_rad <= 0) return 90.0;
    const double k = g.r_earth_km / (g.r_earth_km + g.h_s_km);
    return deg(std::atan2(std::cos(lambda_rad) - k, std::sin(lambda_rad)));
}

CoveragePoint coverage_cell(double alpha_min_deg, int format, Standard standard, const NtnGeometry& g)
{
    const double cp = raconfig::cp_length_ms(standard, format) * 1e-3;
    const double d_far = slant_range(alpha_min_deg, g);
    const auto near = d_min(alpha_min_deg, cp, g);
    // both edges lie on the same side of nadir, so the near-edge angle enters as its supplement
    const double radius = cell_radius(d_far, near.d_min_km, 180.0 - near.alpha_max_deg, alpha_min_deg);
    const double lam = 0.5 * (central_angle_rad(alpha_min_deg, g) + central_angle_rad(near.alpha_max_deg, g));
    return {elevation_from_central_angle(lam, g), format, radius, alpha_min_deg, near.alpha_max_deg};
}

std::optional<double> alpha_min_for_center(double alpha_cen_deg, int format, Standard standard, const NtnGeometry& g)
{
    // the centre elevation grows with alpha_min
    double lo = 1e-6;
    double hi = 90.0;
    const auto cen = [&](double a) { return coverage_cell(a, format, standard, g).alpha_cen_deg; };
    if (alpha_cen_deg < cen(lo) || alpha_cen_deg > cen(hi)) return std::nullopt;
    for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cen(mid) < alpha_cen_deg)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<CoveragePoint> coverage_sweep(Standard standard, const std::vector<int>& formats, const NtnGeometry& g,
                                          double alpha_from_deg, double alpha_to_deg, double alpha_step_deg)
{
    if (!(alpha_step_deg > 0)) throw std::invalid_argument("sweep step must be positive");
    if (!(alpha_from_deg > 0) || alpha_to_deg > 90 || alpha_from_deg > alpha_to_deg)
        throw std::invalid_argument("sweep range must lie in (0, 90]");
    std::vector<CoveragePoint> out;
    for (int f : formats) {
        const int n = static_cast<int>(std::floor((alpha_to_deg - alpha_from_deg) / alpha_step_deg + 1e-9));
        for (int i = 0; i <= n; ++i) out.push_back(coverage_cell(alpha_from_deg + i * alpha_step_deg, f, standard, g));
    }
    return out;
}

Serviceability td_serviceability(timing::Duration rtt_min, timing::Duration rtt_max, Standard standard,
                                 const std::vector<int>& formats)
{
    if (rtt_min.count() < 0 || rtt_max < rtt_min) throw std::invalid_argument("need 0 <= rtt_min <= rtt_max");
    Serviceability s;
    s.sfd = static_cast<int>(rtt_min.whole_sf());
    const auto spread = rtt_max - timing::Duration::sf(s.sfd);
    double best_cp = 0;
    for (int f : formats) {
        const double cp = raconfig::cp_length_ms(standard, f);
        if (spread.millis() <= cp && (s.format < 0 || cp < best_cp)) {
            s.format = f;
            best_cp = cp;
        }
    }
    s.serviceable = s.format >= 0;
    return s;
}

Serviceability ta_serviceability(timing::Duration rtt_min, timing::Duration rtt_max)
{
    if (rtt_min.count() < 0 || rtt_max < rtt_min) throw std::invalid_argument("need 0 <= rtt_min <= rtt_max");
    const auto worst = std::max(timing::decompose_delay(rtt_min, std::numeric_limits<int>::max()).residual,
                                timing::decompose_delay(rtt_max, std::numeric_limits<int>::max()).residual);
    Serviceability s;
    s.serviceable = worst < timing::Duration(timing::kTacStepSamples);
    s.sfd = 0;
    return s;
}

}  // namespace ntnra::geometry
