#include "hfr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "hfr/fft.hpp"

namespace hfr {

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

namespace {

// Adds one-sided |X_k|^2 of the bins in [f_lo, f_hi) for a segment of length n.
double band_power(std::span<const Complex> spectrum, double rate, double f_lo, double f_hi) {
  const std::size_t n = spectrum.size();
  const double nyquist = 0.5 * rate;
  double sum = 0.0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * rate / static_cast<double>(n);
    const bool inside = (f >= f_lo && f < f_hi) || (f == f_hi && f_hi == nyquist);
    if (!inside) continue;
    const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
    sum += (unpaired ? 1.0 : 2.0) * std::norm(spectrum[k]);
  }
  return sum;
}

void check_band(const Signal& x, double f_lo, double f_hi) {
  x.validate();
  const double nyquist = 0.5 * static_cast<double>(x.rate_hz);
  if (!(f_lo >= 0.0 && f_lo < f_hi && f_hi <= nyquist))
    throw std::invalid_argument("band must satisfy 0 <= f_lo < f_hi <= rate/2");
}

}  // namespace

double band_energy(const Signal& x, double f_lo, double f_hi) {
  check_band(x, f_lo, f_hi);
  const std::size_t n = x.length();
  const auto rate = static_cast<double>(x.rate_hz);
  double total = 0.0;

  if (n <= kWelchThreshold) {
    const FftPlan plan(n);
    std::vector<Complex> work(n);
    for (const auto& ch : x.channels) {
      std::copy(ch.begin(), ch.end(), work.begin());
      plan.forward(work);
      total += band_power(work, rate, f_lo, f_hi) / static_cast<double>(n);
    }
    return total;
  }

  const std::size_t seg = 2 * n / (kWelchSegments + 1);
  const std::size_t hop = seg / 2;
  const auto window = hann_window(seg);
  double window_energy = 0.0;
  for (double v : window) window_energy += v * v;
  const FftPlan plan(seg);
  std::vector<Complex> work(seg);
  for (const auto& ch : x.channels) {
    double acc = 0.0;
    for (int s = 0; s < kWelchSegments; ++s) {
      const std::size_t start = static_cast<std::size_t>(s) * hop;
      for (std::size_t i = 0; i < seg; ++i) work[i] = window[i] * ch[start + i];
      plan.forward(work);
      acc += band_power(work, rate, f_lo, f_hi);
    }
    total += static_cast<double>(n) * acc / (kWelchSegments * static_cast<double>(seg) * window_energy);
  }
  return total;
}

SpectralReport spectral_report(const Signal& x, std::span<const double> band_edges_hz) {
  if (band_edges_hz.size() < 2) throw std::invalid_argument("need at least two band edges");
  SpectralReport report;
  report.band_edges_hz.assign(band_edges_hz.begin(), band_edges_hz.end());
  const std::size_t n = x.length();
  if (n <= kWelchThreshold) {
    report.n_fft = n;
    report.window = "rectangular";
    report.window_size = n;
    report.hop = n;
  } else {
    report.n_fft = 2 * n / (kWelchSegments + 1);
    report.window = "hann";
    report.window_size = report.n_fft;
    report.hop = report.n_fft / 2;
  }
  for (std::size_t b = 0; b + 1 < band_edges_hz.size(); ++b) {
    const double e = band_energy(x, band_edges_hz[b], band_edges_hz[b + 1]);
    report.band_energy.push_back(e);
    report.band_energy_db.push_back(10.0 * std::log10(std::max(e, 1e-300)));
    report.total_energy += e;
  }
  return report;
}

namespace {

double diff_energy(const Signal& a, const Signal& b) {
  if (a.num_channels() != b.num_channels() || a.length() != b.length())
    throw std::invalid_argument("signals differ in shape");
  double sum = 0.0;
  for (std::size_t c = 0; c < a.num_channels(); ++c)
    for (std::size_t i = 0; i < a.length(); ++i) {
      const double d = a.channels[c][i] - b.channels[c][i];
      sum += d * d;
    }
  return sum;
}

}  // namespace

double snr_db(const Signal& clean, const Signal& noisy) {
  const double noise = diff_energy(clean, noisy);
  if (noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(clean.energy() / noise);
}

double sdr_db(const Signal& estimate, const Signal& reference) {
  const double ref_energy = reference.energy();
  if (ref_energy == 0.0) throw std::invalid_argument("SDR is undefined for an all-zero reference");
  const double err = diff_energy(reference, estimate);
  if (err == 0.0) return kSdrCapDb;
  return std::min(kSdrCapDb, 10.0 * std::log10(ref_energy / err));
}

Spectrogram spectrogram(const Signal& x, std::size_t n_fft, std::size_t hop) {
  x.validate();
  if (n_fft == 0 || hop == 0 || n_fft < hop) throw std::invalid_argument("spectrogram needs n_fft >= hop > 0");
  const std::size_t n = x.length();
  std::vector<double> mono(n, 0.0);
  for (const auto& ch : x.channels)
    for (std::size_t i = 0; i < n; ++i) mono[i] += ch[i] / static_cast<double>(x.num_channels());

  const std::size_t frames = n < n_fft ? 1 : 1 + (n - n_fft) / hop;
  const auto window = hann_window(n_fft);
  const FftPlan plan(n_fft);
  Spectrogram out;
  out.n_fft = n_fft;
  out.hop = hop;
  out.frame_rate_hz = static_cast<double>(x.rate_hz) / static_cast<double>(hop);
  out.bin_hz = static_cast<double>(x.rate_hz) / static_cast<double>(n_fft);
  out.magnitude_db.reserve(frames);
  std::vector<Complex> work(n_fft);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * hop;
    for (std::size_t i = 0; i < n_fft; ++i)
      work[i] = start + i < n ? window[i] * mono[start + i] : 0.0;
    plan.forward(work);
    std::vector<double> row(n_fft / 2 + 1);
    for (std::size_t k = 0; k < row.size(); ++k)
      row[k] = std::max(-120.0, 20.0 * std::log10(std::max(std::abs(work[k]), 1e-300)));
    out.magnitude_db.push_back(std::move(row));
  }
  return out;
}

}  // namespace hfr
