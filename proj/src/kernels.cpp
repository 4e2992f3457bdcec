#include "hfr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hfr/fft.hpp"
#include "hfr/rng.hpp"

namespace hfr {

void KernelConfig::validate() const {
  if (window_length < 2 || window_length % 2 != 0)
    throw std::invalid_argument("window length must be even and >= 2, got " +
                                std::to_string(window_length));
  if (!(kaiser_alpha >= 0.0) || !std::isfinite(kaiser_alpha))
    throw std::invalid_argument("kaiser alpha must be finite and nonnegative");
  if (cutoff_hz && !(*cutoff_hz > 0.0 && std::isfinite(*cutoff_hz)))
    throw std::invalid_argument("cutoff must be positive");
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw std::invalid_argument("rolloff must be in (0, 1]");
}

KernelTable::KernelTable(std::int64_t source_rate_hz, std::int64_t target_rate_hz,
                         int taps_per_phase, int center_offset, std::vector<double> taps)
    : source_rate_(source_rate_hz),
      target_rate_(target_rate_hz),
      taps_per_phase_(taps_per_phase),
      center_offset_(center_offset),
      taps_(std::move(taps)) {
  if (source_rate_ <= 0 || target_rate_ <= 0)
    throw std::invalid_argument("kernel table rates must be positive");
  if (taps_per_phase_ <= 0) throw std::invalid_argument("taps_per_phase must be positive");
  if (center_offset_ < 0 || center_offset_ >= taps_per_phase_)
    throw std::invalid_argument("center_offset out of range");
  const std::int64_t g = std::gcd(source_rate_, target_rate_);
  phases_ = static_cast<int>(target_rate_ / g);
  input_step_ = static_cast<int>(source_rate_ / g);
  if (taps_.size() != static_cast<std::size_t>(phases_) * taps_per_phase_)
    throw std::invalid_argument("tap count " + std::to_string(taps_.size()) +
                                " does not equal phases * taps_per_phase");
  for (double v : taps_)
    if (!std::isfinite(v)) throw std::invalid_argument("kernel table contains a non-finite tap");
}

std::span<const double> KernelTable::phase(int p) const {
  return std::span<const double>(taps_).subspan(static_cast<std::size_t>(p) * taps_per_phase_,
                                                taps_per_phase_);
}

double KernelTable::tap_offset(int p, int i) const {
  return static_cast<double>(i - center_offset_) + static_cast<double>(p) / phases_;
}

bool KernelTable::same_shape(const KernelTable& other) const {
  return source_rate_ == other.source_rate_ && target_rate_ == other.target_rate_ &&
         taps_per_phase_ == other.taps_per_phase_ && center_offset_ == other.center_offset_;
}

double sinc(double t) {
  if (t == 0.0) return 1.0;
  // exact zeros at the integers keep same-rate and integer-ratio tables exact
  if (t == std::nearbyint(t)) return 0.0;
  const double x = std::numbers::pi * t;
  return std::sin(x) / x;
}

double bessel_i0(double x) {
  // I0(x) = sum_k ((x/2)^k / k!)^2
  const double half = 0.5 * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 1000; ++k) {
    const double r = half / k;
    term *= r * r;
    sum += term;
    if (term <= 1e-12 * sum) break;
  }
  return sum;
}

double kaiser_window(double t, int window_length, double rate_hz, double alpha) {
  const double ratio = 2.0 * rate_hz * t / window_length;
  if (std::abs(ratio) > 1.0) return 0.0;
  const double arg = std::max(0.0, 1.0 - ratio * ratio);
  return bessel_i0(alpha * std::sqrt(arg)) / bessel_i0(alpha);
}

double windowed_sinc_kernel(double t, const KernelConfig& cfg, double rate_hz) {
  const double cutoff = cfg.cutoff_hz.value_or(0.5 * rate_hz);
  const double z = kaiser_window(t, cfg.window_length, rate_hz, cfg.kaiser_alpha);
  if (z == 0.0) return 0.0;
  return z * sinc(2.0 * cfg.rolloff * cutoff * t);
}

TapGrid make_tap_grid(const KernelConfig& cfg, std::int64_t rate_in_hz, std::int64_t rate_out_hz) {
  cfg.validate();
  if (rate_in_hz <= 0 || rate_out_hz <= 0)
    throw std::invalid_argument("sampling rates must be positive");
  TapGrid grid;
  grid.source_rate_hz = rate_in_hz;
  grid.target_rate_hz = rate_out_hz;
  grid.phases = static_cast<int>(rate_out_hz / std::gcd(rate_in_hz, rate_out_hz));
  grid.window_rate_hz = static_cast<double>(std::min(rate_in_hz, rate_out_hz));
  grid.half_support = cfg.window_length * static_cast<double>(rate_in_hz) / (2.0 * grid.window_rate_hz);
  const int reach = static_cast<int>(std::ceil(grid.half_support - 1e-9));
  grid.taps_per_phase = 2 * reach + 1;
  grid.center_offset = reach;
  return grid;
}

KernelTable discretize_kernel(const KernelConfig& cfg, std::int64_t rate_in_hz,
                              std::int64_t rate_out_hz) {
  const TapGrid grid = make_tap_grid(cfg, rate_in_hz, rate_out_hz);
  KernelConfig local = cfg;
  local.cutoff_hz = 0.5 * grid.window_rate_hz;
  const double fin = static_cast<double>(rate_in_hz);
  // passband gain; it is also the sinc argument scale per unit of u
  const double gain = 2.0 * local.rolloff * *local.cutoff_hz / fin;

  std::vector<double> taps(static_cast<std::size_t>(grid.phases) * grid.taps_per_phase);
  for (int p = 0; p < grid.phases; ++p) {
    for (int i = 0; i < grid.taps_per_phase; ++i) {
      const double u = static_cast<double>(i - grid.center_offset) + static_cast<double>(p) / grid.phases;
      const double z = kaiser_window(u / fin, local.window_length, grid.window_rate_hz, local.kaiser_alpha);
      taps[static_cast<std::size_t>(p) * grid.taps_per_phase + i] = z == 0.0 ? 0.0 : gain * z * sinc(gain * u);
    }
  }
  return KernelTable(rate_in_hz, rate_out_hz, grid.taps_per_phase, grid.center_offset, std::move(taps));
}

KernelTable add_kernel_noise(const KernelTable& table, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("kernel noise sigma must be finite and nonnegative");
  if (sigma == 0.0) return table;
  Xoshiro256pp rng(seed);
  std::vector<double> taps(table.taps().begin(), table.taps().end());
  for (double& v : taps) v += sigma * rng.gaussian();
  return KernelTable(table.source_rate_hz(), table.target_rate_hz(), table.taps_per_phase(),
                     table.center_offset(), std::move(taps));
}

std::vector<double> flatten_taps(const KernelTable& table) {
  const int phases = table.phases();
  std::vector<double> out(table.size());
  for (int p = 0; p < phases; ++p)
    for (int i = 0; i < table.taps_per_phase(); ++i)
      out[static_cast<std::size_t>(i) * phases + p] = table.tap(p, i);
  return out;
}

std::vector<Complex> kernel_spectrum(const KernelTable& table, int n_fft) {
  if (n_fft <= 0 || !is_power_of_two(static_cast<std::size_t>(n_fft)))
    throw std::invalid_argument("n_fft must be a power of two");
  if (static_cast<std::size_t>(n_fft) < table.size())
    throw std::invalid_argument("n_fft " + std::to_string(n_fft) + " is smaller than the tap count " +
                                std::to_string(table.size()));
  const auto flat = flatten_taps(table);
  std::vector<Complex> work(static_cast<std::size_t>(n_fft), Complex{});
  std::copy(flat.begin(), flat.end(), work.begin());
  FftPlan(work.size()).forward(work);
  const double scale = 1.0 / table.phases();
  for (auto& v : work) v *= scale;
  return work;
}

FrequencyResponse kernel_frequency_response(const KernelTable& table, int n_fft) {
  const auto spectrum = kernel_spectrum(table, n_fft);
  // Flattened taps run at lcm(F_in, F_out) = P * F_in.
  const double grid_rate = static_cast<double>(table.phases()) * static_cast<double>(table.source_rate_hz());
  const double nyquist = 0.5 * static_cast<double>(table.target_rate_hz());
  FrequencyResponse out;
  out.n_fft = n_fft;
  for (int k = 0; k <= n_fft / 2; ++k) {
    const double f = k * grid_rate / n_fft;
    if (f > nyquist * (1.0 + 1e-12)) break;
    out.freqs_hz.push_back(f);
    const double mag = std::abs(spectrum[static_cast<std::size_t>(k)]);
    out.magnitude_db.push_back(std::max(-200.0, 20.0 * std::log10(std::max(mag, 1e-300))));
  }
  return out;
}

double mean_magnitude(const FrequencyResponse& response, double f_lo, double f_hi) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < response.freqs_hz.size(); ++k) {
    const double f = response.freqs_hz[k];
    if (f < f_lo || f > f_hi) continue;
    sum += std::pow(10.0, response.magnitude_db[k] / 20.0);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("no response bins inside the requested band");
  return sum / count;
}

}  // namespace hfr
