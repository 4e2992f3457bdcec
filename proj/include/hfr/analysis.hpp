#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hfr/signal.hpp"

namespace hfr {

inline constexpr double kSdrCapDb = 300.0;
inline constexpr std::size_t kWelchThreshold = 8192;
inline constexpr int kWelchSegments = 8;

/// Periodic Hann window.
std::vector<double> hann_window(std::size_t n);

/// Energy of x in [f_lo, f_hi), summed over channels. A band whose upper edge
/// is exactly the Nyquist frequency includes the Nyquist bin.
///
/// Up to kWelchThreshold samples the estimate is the plain one-sided DFT
/// energy, so a disjoint cover of [0, rate/2] sums to the time-domain energy.
/// Longer signals use Hann-windowed Welch averaging over 8 half-overlapping
/// segments, scaled to an energy over the full signal length.
double band_energy(const Signal& x, double f_lo, double f_hi);

struct SpectralReport {
  std::vector<double> band_edges_hz;  ///< bands are [edges[i], edges[i+1])
  std::vector<double> band_energy;
  std::vector<double> band_energy_db;
  double total_energy = 0.0;
  std::size_t n_fft = 0;
  std::string window;
  std::size_t window_size = 0;
  std::size_t hop = 0;
};

/// Band energies over consecutive edges; the last edge must be <= rate / 2.
SpectralReport spectral_report(const Signal& x, std::span<const double> band_edges_hz);

/// 10 log10(||clean||^2 / ||noisy - clean||^2); +inf when they coincide.
double snr_db(const Signal& clean, const Signal& noisy);

/// 10 log10(||ref||^2 / ||ref - est||^2), capped at kSdrCapDb.
/// Throws on an all-zero reference.
double sdr_db(const Signal& estimate, const Signal& reference);

struct Spectrogram {
  std::vector<std::vector<double>> magnitude_db;  ///< [frame][bin], floor -120 dB
  double frame_rate_hz = 0.0;
  double bin_hz = 0.0;
  std::size_t n_fft = 0;
  std::size_t hop = 0;

  std::size_t frames() const { return magnitude_db.size(); }
  std::size_t bins() const { return magnitude_db.empty() ? 0 : magnitude_db.front().size(); }
};

/// Hann-windowed magnitude STFT of the channel average. Frames start at
/// multiples of hop and stay inside the signal; a signal shorter than n_fft
/// gets one zero-padded frame.
Spectrogram spectrogram(const Signal& x, std::size_t n_fft = 1024, std::size_t hop = 256);

}  // namespace hfr
