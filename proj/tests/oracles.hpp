#pragma once

// Reference implementations kept apart from the library code they check.

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// plain array recurrence over the two m-sequences
inline std::vector<int> gold(std::uint32_t c_init, std::size_t n)
{
    const std::size_t nc = 1600;
    const std::size_t total = n + nc + 31;
    std::vector<int> x1(total, 0), x2(total, 0);
    x1[0] = 1;
    for (int i = 0; i < 31; ++i) x2[i] = (c_init >> i) & 1u;
    for (std::size_t k = 0; k + 31 < total; ++k) {
        x1[k + 31] = (x1[k + 3] + x1[k]) % 2;
        x2[k + 31] = (x2[k + 3] + x2[k + 2] + x2[k + 1] + x2[k]) % 2;
    }
    std::vector<int> c(n);
    for (std::size_t k = 0; k < n; ++k) c[k] = (x1[k + nc] + x2[k + nc]) % 2;
    return c;
}

inline int rnti_lte(int t, int f) { return 1 + t + 10 * f; }
inline int rnti_nbiot(int t, int c) { return 1 + t / 4 + 256 * c; }
inline int rnti_nr(int s, int t, int f, int c) { return 1 + s + 14 * t + 14 * 80 * f + 14 * 80 * 8 * c; }

inline double slant(double alpha_deg, double h, double re = 6371.0)
{
    const double s = std::sin(alpha_deg * M_PI / 180.0);
    return std::sqrt(re * re * s * s + h * h + 2 * re * h) - re * s;
}

// smallest D over a dense elevation grid that keeps the spread to the far edge within budget
inline double dense_dmin(double alpha_min, double budget_km, double h, int steps = 2'000'000)
{
    const double far = slant(alpha_min, h);
    double best = far;
    for (int i = 0; i <= steps; ++i) {
        const double a = alpha_min + (90.0 - alpha_min) * i / steps;
        const double d = slant(a, h);
        if (far - d <= budget_km && d < best) best = d;
    }
    return best;
}

// (frame, sf) moved back by k subframes
struct FrameSf {
    long frame;
    int sf;
};
inline FrameSf back(long frame, int sf, long k)
{
    long abs = frame * 10 + sf - k;
    long f = abs >= 0 ? abs / 10 : -((-abs + 9) / 10);
    return {f, static_cast<int>(abs - f * 10)};
}

}  // namespace oracle
