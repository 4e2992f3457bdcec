#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace hfr {

/// xoshiro256++ seeded through splitmix64. Output is identical on every
/// platform, which keeps seeded test vectors and CLI artifacts stable.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform double in [0, 1) built from the top 53 bits.
  double uniform();
  /// Standard normal draw via the Box-Muller transform. Draws come in pairs;
  /// the second value of each pair is cached.
  double gaussian();

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent child seed from a root seed and a stream label.
/// child = splitmix64(root ^ fnv1a(label)) ^ index-mixing (see rng.cpp).
std::uint64_t derive_seed(std::uint64_t root, std::string_view label, std::uint64_t index = 0);

}  // namespace hfr
