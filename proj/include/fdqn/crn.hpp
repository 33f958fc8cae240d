#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace fdqn::crn {

// Philox4x64-10 counter-based block cipher (Salmon et al. round constants,
// same convention as numpy.random.Philox). A full noise stream is a pure
// function of (key, counter), so realizations can be replayed at any point
// without storing state.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

// Maps a 64-bit word to (0, 1]; never returns 0, so log(u) is finite.
double to_unit_open(std::uint64_t x);

// Maps a 64-bit word to [0, 1).
double to_unit_half_open(std::uint64_t x);

// Fills `out` with i.i.d. standard normal draws. The stream is keyed by
// (key0, key1); coordinate blocks advance the counter, so out[i] depends
// only on (key0, key1, i).
void fill_standard_normal(std::uint64_t key0, std::uint64_t key1, std::span<double> out);

}  // namespace fdqn::crn
