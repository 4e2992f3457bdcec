#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hfr {

/// Windowed-sinc kernel parameters.
struct KernelConfig {
  int window_length = 48;  ///< L: taps per input-rate period, even, >= 2
  double kaiser_alpha = 4.1;
  /// Sinc cutoff in Hz. Unset means "half the rate the kernel is built for";
  /// discretize_kernel always overrides it with min(F_in, F_out) / 2.
  std::optional<double> cutoff_hz;
  double rolloff = 1.0;  ///< multiplier on the cutoff, in (0, 1]

  void validate() const;
};

/// Polyphase interpolation kernel for a rational rate pair.
///
/// For output sample m write m * Q = q * P + p with P = F_out / g,
/// Q = F_in / g and g = gcd(F_in, F_out). Then
///
///   y[m] = sum_i taps(p, i) * x[q + center_offset - i]
///
/// and taps(p, i) = k(u / F_in) with u = (i - center_offset) + p / P, which is
/// the kernel argument m / F_out - n / F_in expressed in input samples.
class KernelTable {
 public:
  KernelTable() = default;
  KernelTable(std::int64_t source_rate_hz, std::int64_t target_rate_hz, int taps_per_phase,
              int center_offset, std::vector<double> taps);

  std::int64_t source_rate_hz() const { return source_rate_; }
  std::int64_t target_rate_hz() const { return target_rate_; }
  int phases() const { return phases_; }
  /// Input-sample advance per P output samples (Q above).
  int input_step() const { return input_step_; }
  int taps_per_phase() const { return taps_per_phase_; }
  int center_offset() const { return center_offset_; }

  std::span<const double> taps() const { return taps_; }
  std::span<double> taps() { return taps_; }
  std::span<const double> phase(int p) const;
  double tap(int p, int i) const { return taps_[static_cast<std::size_t>(p) * taps_per_phase_ + i]; }
  std::size_t size() const { return taps_.size(); }

  /// Kernel argument of tap (p, i) in input samples (t * F_in).
  double tap_offset(int p, int i) const;

  bool same_shape(const KernelTable& other) const;
  bool operator==(const KernelTable& other) const = default;

 private:
  std::int64_t source_rate_ = 0;
  std::int64_t target_rate_ = 0;
  int phases_ = 0;
  int input_step_ = 0;
  int taps_per_phase_ = 0;
  int center_offset_ = 0;
  std::vector<double> taps_;
};

struct FrequencyResponse {
  std::vector<double> freqs_hz;
  std::vector<double> magnitude_db;
  int n_fft = 0;
};

double sinc(double t);

/// Zeroth-order modified Bessel function of the first kind, by power series
/// summed until the relative increment drops below 1e-12.
double bessel_i0(double x);

/// Kaiser window with support |t| <= L / (2 rate_hz); zero outside.
double kaiser_window(double t, int window_length, double rate_hz, double alpha);

/// z(t) * sinc(2 * rolloff * cutoff * t), window support set by rate_hz.
double windowed_sinc_kernel(double t, const KernelConfig& cfg, double rate_hz);

/// Tap-grid geometry shared by every kernel discretization for a rate pair.
struct TapGrid {
  std::int64_t source_rate_hz = 0;
  std::int64_t target_rate_hz = 0;
  int phases = 0;
  int taps_per_phase = 0;
  int center_offset = 0;
  double window_rate_hz = 0;  ///< min(F_in, F_out)
  double half_support = 0;    ///< support half-width in input samples
};

TapGrid make_tap_grid(const KernelConfig& cfg, std::int64_t rate_in_hz, std::int64_t rate_out_hz);

/// Samples the windowed-sinc kernel on every distinct argument of the
/// resampling sum. Cutoff is rolloff * min(F_in, F_out) / 2 and taps carry the
/// passband gain 2 * cutoff / F_in so DC is preserved when downsampling.
KernelTable discretize_kernel(const KernelConfig& cfg, std::int64_t rate_in_hz,
                              std::int64_t rate_out_hz);

/// Adds i.i.d. N(0, sigma^2) to every tap, row-major draw order.
KernelTable add_kernel_noise(const KernelTable& table, double sigma, std::uint64_t seed);

/// Taps reordered by kernel argument: entry r = j * P + p + center * P holds
/// tap (p, j + center). The sequence is sampled at lcm(F_in, F_out).
std::vector<double> flatten_taps(const KernelTable& table);

/// Complex DFT of the flattened taps, zero-padded to n_fft, divided by the
/// phase count so a unity-gain passband sits at 0 dB.
std::vector<std::complex<double>> kernel_spectrum(const KernelTable& table, int n_fft);

/// Magnitude response in dB (floor -200) on [0, F_out / 2].
FrequencyResponse kernel_frequency_response(const KernelTable& table, int n_fft);

/// Mean linear magnitude of a response over [f_lo, f_hi].
double mean_magnitude(const FrequencyResponse& response, double f_lo, double f_hi);

}  // namespace hfr
