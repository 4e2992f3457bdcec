#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hfr {

/// Multichannel sample buffer at an integer sampling rate.
struct Signal {
  std::vector<std::vector<double>> channels;
  std::int64_t rate_hz = 0;

  Signal() = default;
  Signal(std::vector<std::vector<double>> chans, std::int64_t rate);

  static Signal mono(std::vector<double> samples, std::int64_t rate);
  static Signal zeros(std::size_t n_channels, std::size_t length, std::int64_t rate);

  std::size_t num_channels() const { return channels.size(); }
  std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }

  /// Throws std::invalid_argument on ragged channels, non-finite samples or a
  /// nonpositive rate.
  void validate() const;

  /// Sum of squares over all channels and samples.
  double energy() const;
  /// Mean power over all channels jointly.
  double mean_power() const;
  bool is_silent() const;

  bool operator==(const Signal& other) const = default;
};

/// a + scale * b, shapes must match.
Signal add_scaled(const Signal& a, const Signal& b, double scale);

}  // namespace hfr
