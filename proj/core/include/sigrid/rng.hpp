#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sigrid {

// Counter-based generator (Philox 4x32-10). Every draw is a pure function of
// (seed, step, component, draw), so parallel consumers produce identical
// streams regardless of thread count or scheduling order.
class CounterRng {
 public:
  // Component id reserved for chain-level draws (component picks, accept
  // tests) that do not belong to a specific lattice site.
  static constexpr std::uint64_t kChainStream = ~std::uint64_t{0};

  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  // 64 uniform bits.
  std::uint64_t bits(std::uint64_t step, std::uint64_t component,
                     std::uint32_t draw) const noexcept {
    Block b = philox(step, component, draw);
    return (std::uint64_t(b.x[0]) << 32) | b.x[1];
  }

  // Uniform in [0,1), 53-bit resolution.
  double uniform(std::uint64_t step, std::uint64_t component,
                 std::uint32_t draw) const noexcept {
    return double(bits(step, component, draw) >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound); bound > 0. Multiply-shift mapping, bias
  // below bound/2^64.
  std::uint64_t uniform_int(std::uint64_t step, std::uint64_t component,
                            std::uint32_t draw, std::uint64_t bound) const noexcept {
    using u128 = unsigned __int128;
    return std::uint64_t((u128(bits(step, component, draw)) * bound) >> 64);
  }

  // Standard normal via Box-Muller; consumes draw slots (2*draw, 2*draw+1).
  double gaussian(std::uint64_t step, std::uint64_t component,
                  std::uint32_t draw) const noexcept {
    double u1 = uniform(step, component, 2 * draw);
    double u2 = uniform(step, component, 2 * draw + 1);
    double r = std::sqrt(-2.0 * std::log1p(-u1));  // u1 < 1, so the log is finite
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  struct Block {
    std::uint32_t x[4];
  };

  Block philox(std::uint64_t step, std::uint64_t component,
               std::uint32_t draw) const noexcept {
    std::uint32_t c0 = std::uint32_t(step);
    std::uint32_t c1 = std::uint32_t(step >> 32);
    std::uint32_t c2 = std::uint32_t(component);
    std::uint32_t c3 = draw;
    std::uint32_t k0 = std::uint32_t(seed_);
    std::uint32_t k1 = std::uint32_t(seed_ >> 32) ^ std::uint32_t(component >> 32);
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = 0xD2511F53ull * c0;
      std::uint64_t p1 = 0xCD9E8D57ull * c2;
      std::uint32_t n0 = std::uint32_t(p1 >> 32) ^ c1 ^ k0;
      std::uint32_t n1 = std::uint32_t(p1);
      std::uint32_t n2 = std::uint32_t(p0 >> 32) ^ c3 ^ k1;
      std::uint32_t n3 = std::uint32_t(p0);
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return {{c0, c1, c2, c3}};
  }

  std::uint64_t seed_;
};

}  // namespace sigrid
