#include "fdqn/crn.hpp"

#include <cmath>
#include <numbers>

namespace fdqn::crn {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;  // golden ratio
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;  // sqrt(3) - 1

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi) {
  const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(prod >> 64);
  return static_cast<std::uint64_t>(prod);
}

inline void round_once(std::array<std::uint64_t, 4>& ctr, const std::array<std::uint64_t, 2>& key) {
  std::uint64_t hi0 = 0;
  std::uint64_t hi1 = 0;
  const std::uint64_t lo0 = mulhilo(kMul0, ctr[0], hi0);
  const std::uint64_t lo1 = mulhilo(kMul1, ctr[2], hi1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    round_once(counter, key);
  }
  return counter;
}

double to_unit_open(std::uint64_t x) {
  return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
}

double to_unit_half_open(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

void fill_standard_normal(std::uint64_t key0, std::uint64_t key1, std::span<double> out) {
  const std::size_t n = out.size();
  // One block yields four words, i.e. two Box-Muller pairs.
  for (std::size_t blk = 0; blk * 4 < n; ++blk) {
    const auto w = philox4x64({static_cast<std::uint64_t>(blk), 0, 0, 0}, {key0, key1});
    for (int pair = 0; pair < 2; ++pair) {
      const std::size_t base = blk * 4 + static_cast<std::size_t>(pair) * 2;
      if (base >= n) break;
      const double u1 = to_unit_open(w[pair * 2]);
      const double u2 = to_unit_half_open(w[pair * 2 + 1]);
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double a = 2.0 * std::numbers::pi * u2;
      out[base] = r * std::cos(a);
      if (base + 1 < n) out[base + 1] = r * std::sin(a);
    }
  }
}

}  // namespace fdqn::crn
