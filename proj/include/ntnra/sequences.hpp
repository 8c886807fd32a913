#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace ntnra::sequences {

inline constexpr int kGoldNc = 1600;
inline constexpr std::uint32_t kCinitMask = 0x7FFFFFFFu;

struct GoldSequence {
    std::uint32_t c_init = 0;
    std::vector<std::uint8_t> bits;
};

// length >= 1, else std::invalid_argument
GoldSequence gold_generate(std::uint32_t c_init, std::size_t length);

// x1_init_part + sf * 2^9, reduced to 31 bits
std::uint32_t c_init_for_sf(std::uint32_t x1_init_part, int sf);

// per-SF cyclic shift contribution, distinct for every SF 0..9, values in 0..11
int nprs(int sf);

struct DmrsParams {
    int n_dmrs_1 = 0;
    int n_dmrs_2 = 0;
    int sf = 0;
    int u = 0;
    int v = 0;
};

void validate(const DmrsParams& p);
// (n_dmrs_1 + n_dmrs_2 + nprs(sf)) mod 12
int dmrs_shift_index(const DmrsParams& p);
double dmrs_alpha(const DmrsParams& p);

std::vector<std::complex<double>> base_sequence(int u, int v, std::size_t length);
std::vector<std::complex<double>> dmrs_sequence(const DmrsParams& p, std::size_t length);

// static per-UE parameters shared by both ends; dmrs.sf is overridden per side
struct SequenceParams {
    std::uint32_t x1_init_part = 0;
    DmrsParams dmrs;
};

// scrambling seed built from the temporary C-RNTI and the cell id
std::uint32_t pusch_x1_init_part(int rnti, int cell_id);

bool sequences_match(int ue_sf, int bs_assumed_sf, const SequenceParams& params);

}  // namespace ntnra::sequences
