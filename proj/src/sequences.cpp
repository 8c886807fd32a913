#include "ntnra/sequences.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ntnra::sequences {

namespace {

// reserved seeds for the n_prs table and the base sequences
constexpr std::uint32_t kNprsSeed = 0x5A5A5;
constexpr std::uint32_t kBaseSeed = 0x2C0000;

// one LFSR step; the register holds x(n..n+30) with x(n) in bit 0
inline std::uint32_t step_x1(std::uint32_t s)
{
    const std::uint32_t fb = (s ^ (s >> 3)) & 1u;
    return (s >> 1) | (fb << 30);
}

inline std::uint32_t step_x2(std::uint32_t s)
{
    const std::uint32_t fb = (s ^ (s >> 1) ^ (s >> 2) ^ (s >> 3)) & 1u;
    return (s >> 1) | (fb << 30);
}

std::array<int, 10> build_nprs_table()
{
    std::array<int, 10> table{};
    std::array<bool, 12> used{};
    int filled = 0;
    std::size_t len = 1024;
    while (filled < 10) {
        const auto g = gold_generate(kNprsSeed, len);
        filled = 0;
        used.fill(false);
        for (std::size_t i = 0; i + 8 <= g.bits.size() && filled < 10; i += 8) {
            int byte = 0;
            for (int b = 0; b < 8; ++b) byte |= g.bits[i + b] << b;
            const int v = byte % 12;
            if (used[v]) continue;
            used[v] = true;
            table[filled++] = v;
        }
        len *= 2;
    }
    return table;
}

}  // namespace

GoldSequence gold_generate(std::uint32_t c_init, std::size_t length)
{
    if (length < 1) throw std::invalid_argument("gold sequence length must be positive");
    GoldSequence g;
    g.c_init = c_init & kCinitMask;
    g.bits.resize(length);
    std::uint32_t x1 = 1u;
    std::uint32_t x2 = g.c_init;
    for (int i = 0; i < kGoldNc; ++i) {
        x1 = step_x1(x1);
        x2 = step_x2(x2);
    }
    for (std::size_t n = 0; n < length; ++n) {
        g.bits[n] = static_cast<std::uint8_t>((x1 ^ x2) & 1u);
        x1 = step_x1(x1);
        x2 = step_x2(x2);
    }
    return g;
}

std::uint32_t c_init_for_sf(std::uint32_t x1_init_part, int sf)
{
    if (sf < 0 || sf > 9) throw std::out_of_range("SF must be 0..9");
    return (x1_init_part + (static_cast<std::uint32_t>(sf) << 9)) & kCinitMask;
}

int nprs(int sf)
{
    static const auto table = build_nprs_table();
    if (sf < 0 || sf > 9) throw std::out_of_range("SF must be 0..9");
    return table[sf];
}

void validate(const DmrsParams& p)
{
    if (p.n_dmrs_1 < 0 || p.n_dmrs_1 > 10 || p.n_dmrs_2 < 0 || p.n_dmrs_2 > 10)
        throw std::out_of_range("n_dmrs values must be 0..10");
    if (p.sf < 0 || p.sf > 9) throw std::out_of_range("SF must be 0..9");
    if (p.u < 0 || p.u > 29 || p.v < 0 || p.v > 1) throw std::out_of_range("base sequence indices out of range");
}

int dmrs_shift_index(const DmrsParams& p)
{
    validate(p);
    return (p.n_dmrs_1 + p.n_dmrs_2 + nprs(p.sf)) % 12;
}

double dmrs_alpha(const DmrsParams& p)
{
    return 2.0 * std::numbers::pi * dmrs_shift_index(p) / 12.0;
}

std::vector<std::complex<double>> base_sequence(int u, int v, std::size_t length)
{
    if (u < 0 || u > 29 || v < 0 || v > 1) throw std::out_of_range("base sequence indices out of range");
    const auto g = gold_generate(kBaseSeed + static_cast<std::uint32_t>(2 * u + v), 2 * length);
    std::vector<std::complex<double>> out(length);
    for (std::size_t n = 0; n < length; ++n) {
        const int q = g.bits[2 * n] | (g.bits[2 * n + 1] << 1);
        out[n] = std::polar(1.0, std::numbers::pi / 4 + q * std::numbers::pi / 2);
    }
    return out;
}

std::vector<std::complex<double>> dmrs_sequence(const DmrsParams& p, std::size_t length)
{
    const double alpha = dmrs_alpha(p);
    auto seq = base_sequence(p.u, p.v, length);
    for (std::size_t n = 0; n < length; ++n) seq[n] *= std::polar(1.0, alpha * static_cast<double>(n));
    return seq;
}

std::uint32_t pusch_x1_init_part(int rnti, int cell_id)
{
    if (rnti < 0 || rnti > 0xFFFF) throw std::out_of_range("RNTI must fit 16 bits");
    if (cell_id < 0 || cell_id > 503) throw std::out_of_range("cell id must be 0..503");
    return (static_cast<std::uint32_t>(rnti) << 14) | static_cast<std::uint32_t>(cell_id);
}

bool sequences_match(int ue_sf, int bs_assumed_sf, const SequenceParams& params)
{
    auto ue = params.dmrs;
    ue.sf = ue_sf;
    auto bs = params.dmrs;
    bs.sf = bs_assumed_sf;
    return c_init_for_sf(params.x1_init_part, ue_sf) == c_init_for_sf(params.x1_init_part, bs_assumed_sf) &&
           dmrs_shift_index(ue) == dmrs_shift_index(bs);
}

}  // namespace ntnra::sequences
