#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "hfr/rng.hpp"
#include "hfr/signal.hpp"

namespace testutil {

inline hfr::Signal sine(double freq, std::int64_t rate, std::size_t n, double amp = 0.5, double phase = 0.0) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / static_cast<double>(rate) + phase);
  return hfr::Signal::mono(std::move(v), rate);
}

inline std::vector<double> noise(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  hfr::Xoshiro256pp rng(seed);
  std::vector<double> v(n);
  for (auto& s : v) s = scale * rng.gaussian();
  return v;
}

inline hfr::Signal white(std::size_t n, std::int64_t rate, std::uint64_t seed, std::size_t channels = 1) {
  std::vector<std::vector<double>> ch;
  for (std::size_t c = 0; c < channels; ++c) ch.push_back(noise(n, seed * 31 + c, 0.3));
  return hfr::Signal(std::move(ch), rate);
}

// Samples [begin, end) of every channel.
inline hfr::Signal slice(const hfr::Signal& x, std::size_t begin, std::size_t end) {
  std::vector<std::vector<double>> ch;
  for (const auto& c : x.channels) ch.emplace_back(c.begin() + begin, c.begin() + end);
  return hfr::Signal(std::move(ch), x.rate_hz);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testutil
