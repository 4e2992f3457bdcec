#include "hfr/resampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hfr/rng.hpp"
#include "hfr/trainable.hpp"

namespace hfr {

Signal::Signal(std::vector<std::vector<double>> chans, std::int64_t rate)
    : channels(std::move(chans)), rate_hz(rate) {
  validate();
}

Signal Signal::mono(std::vector<double> samples, std::int64_t rate) {
  std::vector<std::vector<double>> chans;
  chans.push_back(std::move(samples));
  return Signal(std::move(chans), rate);
}

Signal Signal::zeros(std::size_t n_channels, std::size_t length, std::int64_t rate) {
  return Signal(std::vector<std::vector<double>>(n_channels, std::vector<double>(length, 0.0)), rate);
}

void Signal::validate() const {
  if (rate_hz <= 0) throw std::invalid_argument("signal rate must be positive");
  if (channels.empty()) throw std::invalid_argument("signal has no channels");
  const std::size_t n = channels.front().size();
  for (const auto& ch : channels) {
    if (ch.size() != n) throw std::invalid_argument("signal channels differ in length");
    for (double v : ch)
      if (!std::isfinite(v)) throw std::invalid_argument("signal contains a non-finite sample");
  }
}

double Signal::energy() const {
  double e = 0.0;
  for (const auto& ch : channels)
    for (double v : ch) e += v * v;
  return e;
}

double Signal::mean_power() const {
  const std::size_t count = num_channels() * length();
  return count == 0 ? 0.0 : energy() / static_cast<double>(count);
}

bool Signal::is_silent() const {
  for (const auto& ch : channels)
    for (double v : ch)
      if (v != 0.0) return false;
  return true;
}

Signal add_scaled(const Signal& a, const Signal& b, double scale) {
  if (a.num_channels() != b.num_channels() || a.length() != b.length())
    throw std::invalid_argument("add_scaled: shape mismatch");
  Signal out = a;
  for (std::size_t c = 0; c < a.num_channels(); ++c)
    for (std::size_t i = 0; i < a.length(); ++i) out.channels[c][i] += scale * b.channels[c][i];
  return out;
}

std::string_view to_string(ResampleMethod method) {
  switch (method) {
    case ResampleMethod::conventional: return "conventional";
    case ResampleMethod::post_noise: return "post-noise";
    case ResampleMethod::noisy_kernel: return "noisy-kernel";
    case ResampleMethod::trainable: return "trainable";
  }
  return "unknown";
}

ResampleMethod parse_method(std::string_view name) {
  if (name == "conventional") return ResampleMethod::conventional;
  if (name == "post-noise" || name == "post_noise") return ResampleMethod::post_noise;
  if (name == "noisy-kernel" || name == "noisy_kernel") return ResampleMethod::noisy_kernel;
  if (name == "trainable") return ResampleMethod::trainable;
  throw std::invalid_argument("unknown resampling method '" + std::string(name) + "'");
}

void ResampleSpec::validate() const {
  kernel.validate();
  if (method == ResampleMethod::post_noise && std::isnan(snr_db))
    throw std::invalid_argument("snr_db must not be NaN");
  if (method == ResampleMethod::noisy_kernel && !(kernel_sigma >= 0.0 && std::isfinite(kernel_sigma)))
    throw std::invalid_argument("kernel sigma must be finite and nonnegative");
  if (method == ResampleMethod::trainable && params == nullptr)
    throw std::invalid_argument("trainable resampling needs kernel parameters");
}

std::int64_t output_length(std::int64_t n, std::int64_t rate_in_hz, std::int64_t rate_out_hz) {
  if (n <= 0 || rate_in_hz <= 0 || rate_out_hz <= 0)
    throw std::invalid_argument("output_length: arguments must be positive");
  // floor(a n / b) = a (n / b) + floor(a (n % b) / b); the second product is
  // below a * b, so nothing overflows for rates under 2^31.
  const std::int64_t whole = n / rate_in_hz;
  const std::int64_t rest = n % rate_in_hz;
  return rate_out_hz * whole + (rate_out_hz * rest) / rate_in_hz;
}

namespace {

void check_rates(const Signal& x, const KernelTable& table) {
  if (x.rate_hz != table.source_rate_hz())
    throw std::invalid_argument("signal rate " + std::to_string(x.rate_hz) +
                                " Hz does not match kernel source rate " +
                                std::to_string(table.source_rate_hz()) + " Hz");
}

}  // namespace

std::vector<double> resample_channel(std::span<const double> x, const KernelTable& table) {
  const auto n_in = static_cast<std::int64_t>(x.size());
  const std::int64_t m_out = output_length(n_in, table.source_rate_hz(), table.target_rate_hz());
  const std::int64_t phases = table.phases();
  const std::int64_t step = table.input_step();
  const int width = table.taps_per_phase();
  const int center = table.center_offset();

  std::vector<double> y(static_cast<std::size_t>(m_out), 0.0);
  for (std::int64_t m = 0; m < m_out; ++m) {
    const std::int64_t pos = m * step;
    const std::int64_t q = pos / phases;
    const auto taps = table.phase(static_cast<int>(pos % phases));
    // n = q + center - i must lie in [0, n_in)
    const std::int64_t i_lo = std::max<std::int64_t>(0, q + center - (n_in - 1));
    const std::int64_t i_hi = std::min<std::int64_t>(width - 1, q + center);
    double acc = 0.0;
    for (std::int64_t i = i_lo; i <= i_hi; ++i) acc += taps[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(q + center - i)];
    y[static_cast<std::size_t>(m)] = acc;
  }
  return y;
}

std::vector<double> resample_channel_adjoint(std::span<const double> grad_y, const KernelTable& table,
                                             std::size_t n_in) {
  const std::int64_t phases = table.phases();
  const std::int64_t step = table.input_step();
  const int width = table.taps_per_phase();
  const int center = table.center_offset();
  const auto n = static_cast<std::int64_t>(n_in);

  std::vector<double> grad_x(n_in, 0.0);
  for (std::size_t m = 0; m < grad_y.size(); ++m) {
    const double g = grad_y[m];
    if (g == 0.0) continue;
    const std::int64_t pos = static_cast<std::int64_t>(m) * step;
    const std::int64_t q = pos / phases;
    const auto taps = table.phase(static_cast<int>(pos % phases));
    const std::int64_t i_lo = std::max<std::int64_t>(0, q + center - (n - 1));
    const std::int64_t i_hi = std::min<std::int64_t>(width - 1, q + center);
    for (std::int64_t i = i_lo; i <= i_hi; ++i)
      grad_x[static_cast<std::size_t>(q + center - i)] += g * taps[static_cast<std::size_t>(i)];
  }
  return grad_x;
}

void accumulate_tap_gradient(std::span<const double> x, std::span<const double> grad_y,
                             const KernelTable& table, std::span<double> grad_taps) {
  if (grad_taps.size() != table.size()) throw std::invalid_argument("tap gradient size mismatch");
  const std::int64_t phases = table.phases();
  const std::int64_t step = table.input_step();
  const int width = table.taps_per_phase();
  const int center = table.center_offset();
  const auto n = static_cast<std::int64_t>(x.size());

  for (std::size_t m = 0; m < grad_y.size(); ++m) {
    const double g = grad_y[m];
    if (g == 0.0) continue;
    const std::int64_t pos = static_cast<std::int64_t>(m) * step;
    const std::int64_t q = pos / phases;
    double* row = grad_taps.data() + (pos % phases) * width;
    const std::int64_t i_lo = std::max<std::int64_t>(0, q + center - (n - 1));
    const std::int64_t i_hi = std::min<std::int64_t>(width - 1, q + center);
    for (std::int64_t i = i_lo; i <= i_hi; ++i) row[i] += g * x[static_cast<std::size_t>(q + center - i)];
  }
}

Signal resample_with_table(const Signal& x, const KernelTable& table) {
  x.validate();
  check_rates(x, table);
  Signal y;
  y.rate_hz = table.target_rate_hz();
  y.channels.reserve(x.num_channels());
  for (const auto& ch : x.channels) y.channels.push_back(resample_channel(ch, table));
  return y;
}

Signal resample_conventional(const Signal& x, std::int64_t rate_out_hz, const KernelConfig& cfg) {
  return resample_with_table(x, discretize_kernel(cfg, x.rate_hz, rate_out_hz));
}

double calibrate_noise_variance(const Signal& y, double snr_db) {
  if (std::isnan(snr_db)) throw std::invalid_argument("snr_db must not be NaN");
  if (snr_db == std::numeric_limits<double>::infinity()) return 0.0;
  const double power = y.mean_power();
  if (!(power > 0.0)) throw std::invalid_argument("cannot calibrate noise against a zero-power signal");
  return power * std::pow(10.0, -snr_db / 10.0);
}

Signal resample_post_noise(const Signal& x, std::int64_t rate_out_hz, const KernelConfig& cfg,
                           double snr_db, std::uint64_t seed) {
  Signal y = resample_conventional(x, rate_out_hz, cfg);
  const double variance = calibrate_noise_variance(y, snr_db);
  if (variance == 0.0) return y;
  const double sigma = std::sqrt(variance);
  for (std::size_t c = 0; c < y.num_channels(); ++c) {
    Xoshiro256pp rng(derive_seed(seed, "post-noise", c));
    for (double& v : y.channels[c]) v += sigma * rng.gaussian();
  }
  return y;
}

Signal resample_noisy_kernel(const Signal& x, std::int64_t rate_out_hz, const KernelConfig& cfg,
                             double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("kernel noise sigma must be finite and nonnegative");
  const KernelTable clean = discretize_kernel(cfg, x.rate_hz, rate_out_hz);
  return resample_with_table(x, add_kernel_noise(clean, sigma, seed));
}

Signal resample(const Signal& x, std::int64_t rate_out_hz, const ResampleSpec& spec) {
  spec.validate();
  switch (spec.method) {
    case ResampleMethod::conventional:
      return resample_conventional(x, rate_out_hz, spec.kernel);
    case ResampleMethod::post_noise:
      return resample_post_noise(x, rate_out_hz, spec.kernel, spec.snr_db, spec.seed);
    case ResampleMethod::noisy_kernel:
      return resample_noisy_kernel(x, rate_out_hz, spec.kernel, spec.kernel_sigma, spec.seed);
    case ResampleMethod::trainable:
      return resample_with_table(x, export_kernel(*spec.params, x.rate_hz, rate_out_hz, spec.kernel));
  }
  throw std::logic_error("unhandled resampling method");
}

}  // namespace hfr
