#include "hfr/proxy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "hfr/analysis.hpp"
#include "hfr/rng.hpp"

namespace hfr {

namespace {

std::vector<char> bin_mask(std::size_t n_fft, double rate, const Band& band) {
  std::vector<char> mask(n_fft, 0);
  for (std::size_t k = 0; k <= n_fft / 2; ++k) {
    const double f = static_cast<double>(k) * rate / static_cast<double>(n_fft);
    if (f >= band.lo_hz && f < band.hi_hz) {
      mask[k] = 1;
      mask[(n_fft - k) % n_fft] = 1;
    }
  }
  return mask;
}

}  // namespace

ProxySeparator::ProxySeparator(std::int64_t trained_rate_hz, std::vector<Band> source_bands, Band gate_band,
                               double gate_epsilon, std::size_t n_fft, std::size_t hop, std::uint64_t seed)
    : trained_rate_(trained_rate_hz),
      bands_(std::move(source_bands)),
      gate_(gate_band),
      epsilon_(gate_epsilon),
      n_fft_(n_fft),
      hop_(hop),
      seed_(seed),
      plan_(n_fft == 0 ? 1 : n_fft) {
  if (trained_rate_ <= 0) throw std::invalid_argument("proxy rate must be positive");
  if (bands_.empty()) throw std::invalid_argument("proxy needs at least one source band");
  if (!(epsilon_ > 0.0)) throw std::invalid_argument("gate epsilon must be positive");
  if (n_fft_ == 0 || hop_ == 0 || hop_ > n_fft_) throw std::invalid_argument("proxy needs n_fft >= hop > 0");
  const double nyquist = 0.5 * static_cast<double>(trained_rate_);
  double prev_hi = 0.0;
  for (const auto& b : bands_) {
    if (!(b.lo_hz >= prev_hi && b.lo_hz < b.hi_hz && b.hi_hz < nyquist))
      throw std::invalid_argument("proxy source bands must be ordered, disjoint and below Nyquist");
    prev_hi = b.hi_hz;
  }
  if (!(gate_.lo_hz < gate_.hi_hz && gate_.hi_hz <= nyquist && gate_.lo_hz >= 0.0))
    throw std::invalid_argument("proxy gate band must lie within [0, Nyquist]");

  window_ = hann_window(n_fft_);
  const auto rate = static_cast<double>(trained_rate_);
  for (const auto& b : bands_) source_masks_.push_back(bin_mask(n_fft_, rate, b));
  gate_mask_ = bin_mask(n_fft_, rate, gate_);
}

bool ProxySeparator::operator==(const ProxySeparator& other) const {
  return trained_rate_ == other.trained_rate_ && bands_ == other.bands_ && gate_ == other.gate_ &&
         epsilon_ == other.epsilon_ && n_fft_ == other.n_fft_ && hop_ == other.hop_ && seed_ == other.seed_ &&
         window_ == other.window_ && source_masks_ == other.source_masks_ && gate_mask_ == other.gate_mask_;
}

double ProxySeparator::gate(double e_high, double e_total) const {
  const double denom = e_high + epsilon_ * e_total;
  return denom > 0.0 ? e_high / denom : 0.0;
}

ProxySeparator::FrameLayout ProxySeparator::layout(std::size_t n) const {
  // Frames start at f * hop - (n_fft - hop) so every sample sees the same
  // number of frames, including the first and last.
  FrameLayout out;
  const auto nf = static_cast<std::int64_t>(n_fft_);
  const auto h = static_cast<std::int64_t>(hop_);
  out.first_start = -(nf - h);
  out.frames = n == 0 ? 0 : static_cast<std::size_t>((static_cast<std::int64_t>(n) - 1 + nf - h) / h + 1);
  out.norm.assign(n, 0.0);
  for (std::size_t f = 0; f < out.frames; ++f) {
    const std::int64_t start = out.first_start + static_cast<std::int64_t>(f) * h;
    for (std::size_t j = 0; j < n_fft_; ++j) {
      const std::int64_t idx = start + static_cast<std::int64_t>(j);
      if (idx >= 0 && idx < static_cast<std::int64_t>(n)) out.norm[static_cast<std::size_t>(idx)] += window_[j] * window_[j];
    }
  }
  return out;
}

void ProxySeparator::load_frame(std::span<const double> x, std::int64_t start, std::vector<Complex>& v) const {
  const auto n = static_cast<std::int64_t>(x.size());
  for (std::size_t j = 0; j < n_fft_; ++j) {
    const std::int64_t idx = start + static_cast<std::int64_t>(j);
    v[j] = (idx >= 0 && idx < n) ? window_[j] * x[static_cast<std::size_t>(idx)] : 0.0;
  }
}

std::vector<double> ProxySeparator::frame_gates(std::span<const double> channel) const {
  const FrameLayout lay = layout(channel.size());
  std::vector<double> gates(lay.frames);
  std::vector<Complex> v(n_fft_);
  const double inv_n = 1.0 / static_cast<double>(n_fft_);
  for (std::size_t f = 0; f < lay.frames; ++f) {
    load_frame(channel, lay.first_start + static_cast<std::int64_t>(f * hop_), v);
    plan_.forward(v);
    double e_total = 0.0, e_high = 0.0;
    for (std::size_t k = 0; k < n_fft_; ++k) {
      const double p = std::norm(v[k]) * inv_n;
      e_total += p;
      if (gate_mask_[k]) e_high += p;
    }
    gates[f] = gate(e_high, e_total);
  }
  return gates;
}

std::vector<std::vector<double>> ProxySeparator::separate_channel(std::span<const double> x) const {
  const std::size_t n = x.size();
  const FrameLayout lay = layout(n);
  const std::size_t n_src = bands_.size();
  std::vector<std::vector<double>> out(n_src, std::vector<double>(n, 0.0));
  std::vector<Complex> v(n_fft_), z(n_fft_);
  const double inv_n = 1.0 / static_cast<double>(n_fft_);

  for (std::size_t f = 0; f < lay.frames; ++f) {
    const std::int64_t start = lay.first_start + static_cast<std::int64_t>(f * hop_);
    load_frame(x, start, v);
    plan_.forward(v);
    double e_total = 0.0, e_high = 0.0;
    for (std::size_t k = 0; k < n_fft_; ++k) {
      const double p = std::norm(v[k]) * inv_n;
      e_total += p;
      if (gate_mask_[k]) e_high += p;
    }
    const double g = gate(e_high, e_total);
    if (g == 0.0) continue;
    for (std::size_t s = 0; s < n_src; ++s) {
      for (std::size_t k = 0; k < n_fft_; ++k) z[k] = source_masks_[s][k] ? v[k] : Complex{};
      plan_.inverse(z);
      for (std::size_t j = 0; j < n_fft_; ++j) {
        const std::int64_t idx = start + static_cast<std::int64_t>(j);
        if (idx < 0 || idx >= static_cast<std::int64_t>(n)) continue;
        out[s][static_cast<std::size_t>(idx)] += g * window_[j] * z[j].real();
      }
    }
  }
  for (auto& src : out)
    for (std::size_t i = 0; i < n; ++i) src[i] /= lay.norm[i];
  return out;
}

std::vector<double> ProxySeparator::backward_channel(std::span<const double> x,
                                                     const std::vector<std::span<const double>>& grads) const {
  const std::size_t n = x.size();
  const FrameLayout lay = layout(n);
  const std::size_t n_src = bands_.size();
  std::vector<double> grad_x(n, 0.0);
  std::vector<Complex> v(n_fft_), z(n_fft_), b(n_fft_), acc(n_fft_), high(n_fft_);
  std::vector<double> dv(n_fft_);
  const double inv_n = 1.0 / static_cast<double>(n_fft_);

  for (std::size_t f = 0; f < lay.frames; ++f) {
    const std::int64_t start = lay.first_start + static_cast<std::int64_t>(f * hop_);
    load_frame(x, start, v);
    std::vector<Complex> frame_time(v);  // windowed input, time domain
    plan_.forward(v);
    double e_total = 0.0, e_high = 0.0;
    for (std::size_t k = 0; k < n_fft_; ++k) {
      const double p = std::norm(v[k]) * inv_n;
      e_total += p;
      if (gate_mask_[k]) e_high += p;
    }
    const double g = gate(e_high, e_total);

    // out_s[idx] += g * w[j] * z_s[j] / norm[idx], z_s = P_s v
    std::fill(acc.begin(), acc.end(), Complex{});
    double d_gate = 0.0;
    for (std::size_t s = 0; s < n_src; ++s) {
      for (std::size_t j = 0; j < n_fft_; ++j) {
        const std::int64_t idx = start + static_cast<std::int64_t>(j);
        const bool inside = idx >= 0 && idx < static_cast<std::int64_t>(n);
        b[j] = inside ? window_[j] * grads[s][static_cast<std::size_t>(idx)] / lay.norm[static_cast<std::size_t>(idx)] : 0.0;
      }
      for (std::size_t k = 0; k < n_fft_; ++k) z[k] = source_masks_[s][k] ? v[k] : Complex{};
      plan_.inverse(z);
      for (std::size_t j = 0; j < n_fft_; ++j) d_gate += b[j].real() * z[j].real();
      // P_s is self-adjoint, so d/dv of <b, P_s v> is P_s b.
      plan_.forward(b);
      for (std::size_t k = 0; k < n_fft_; ++k)
        if (source_masks_[s][k]) acc[k] += b[k];
    }
    plan_.inverse(acc);
    for (std::size_t j = 0; j < n_fft_; ++j) dv[j] = g * acc[j].real();

    const double denom = e_high + epsilon_ * e_total;
    if (denom > 0.0 && d_gate != 0.0) {
      const double dg_dhigh = epsilon_ * e_total / (denom * denom);
      const double dg_dtotal = -epsilon_ * e_high / (denom * denom);
      for (std::size_t k = 0; k < n_fft_; ++k) high[k] = gate_mask_[k] ? v[k] : Complex{};
      plan_.inverse(high);
      // E_high = ||P_gate v||^2, E_total = ||v||^2
      for (std::size_t j = 0; j < n_fft_; ++j)
        dv[j] += d_gate * (2.0 * dg_dhigh * high[j].real() + 2.0 * dg_dtotal * frame_time[j].real());
    }
    for (std::size_t j = 0; j < n_fft_; ++j) {
      const std::int64_t idx = start + static_cast<std::int64_t>(j);
      if (idx < 0 || idx >= static_cast<std::int64_t>(n)) continue;
      grad_x[static_cast<std::size_t>(idx)] += window_[j] * dv[j];
    }
  }
  return grad_x;
}

std::vector<Signal> ProxySeparator::separate(const Signal& mixture) const {
  mixture.validate();
  if (mixture.rate_hz != trained_rate_)
    throw std::invalid_argument("proxy expects " + std::to_string(trained_rate_) + " Hz input, got " +
                                std::to_string(mixture.rate_hz) + " Hz");
  std::vector<Signal> sources(bands_.size());
  for (auto& s : sources) s.rate_hz = trained_rate_;
  for (const auto& ch : mixture.channels) {
    auto parts = separate_channel(ch);
    for (std::size_t s = 0; s < parts.size(); ++s) sources[s].channels.push_back(std::move(parts[s]));
  }
  return sources;
}

Signal ProxySeparator::separate_backward(const Signal& mixture, std::span<const Signal> grad_sources) const {
  if (mixture.rate_hz != trained_rate_) throw std::invalid_argument("proxy backward: rate mismatch");
  if (grad_sources.size() != bands_.size()) throw std::invalid_argument("proxy backward: source count mismatch");
  Signal grad;
  grad.rate_hz = trained_rate_;
  for (std::size_t c = 0; c < mixture.num_channels(); ++c) {
    std::vector<std::span<const double>> per_source;
    for (const auto& gs : grad_sources) {
      if (gs.num_channels() != mixture.num_channels() || gs.length() != mixture.length())
        throw std::invalid_argument("proxy backward: gradient shape mismatch");
      per_source.emplace_back(gs.channels[c]);
    }
    grad.channels.push_back(backward_channel(mixture.channels[c], per_source));
  }
  return grad;
}

ProxySeparator build_proxy(std::int64_t trained_rate_hz, std::size_t n_sources, std::uint64_t seed,
                           const ProxyOptions& options) {
  if (n_sources < 2) throw std::invalid_argument("proxy needs at least two sources");
  const double nyquist = 0.5 * static_cast<double>(trained_rate_hz);
  const double span = options.source_span_hz > 0.0 ? options.source_span_hz : 0.4 * nyquist;
  const double width = span / static_cast<double>(n_sources);
  std::vector<Band> bands;
  for (std::size_t i = 0; i < n_sources; ++i)
    bands.push_back({static_cast<double>(i) * width, static_cast<double>(i + 1) * width});
  const Band gate{options.gate_lo_fraction * nyquist, options.gate_hi_fraction * nyquist};
  return ProxySeparator(trained_rate_hz, std::move(bands), gate, options.gate_epsilon, options.n_fft, options.hop,
                        seed);
}

namespace {

struct Tone {
  double freq_hz;
  double amplitude;
  double phase;
};

std::vector<Tone> draw_tones(Xoshiro256pp& rng, int count, double lo, double hi, double total_power) {
  std::vector<Tone> tones(static_cast<std::size_t>(count));
  double power = 0.0;
  for (auto& t : tones) {
    t.freq_hz = lo + (hi - lo) * rng.uniform();
    t.amplitude = 0.5 + 0.5 * rng.uniform();
    t.phase = 2.0 * std::numbers::pi * rng.uniform();
    power += 0.5 * t.amplitude * t.amplitude;
  }
  const double scale = power > 0.0 ? std::sqrt(total_power / power) : 0.0;
  for (auto& t : tones) t.amplitude *= scale;
  return tones;
}

double eval_tones(const std::vector<Tone>& tones, double t) {
  double v = 0.0;
  for (const auto& tone : tones) v += tone.amplitude * std::sin(2.0 * std::numbers::pi * tone.freq_hz * t + tone.phase);
  return v;
}

}  // namespace

SynthDataset synth_dataset(const ProxySeparator& proxy, std::int64_t rate_hz, std::size_t n_items,
                           double duration_s, std::uint64_t seed, const SynthOptions& options) {
  if (rate_hz <= 0 || n_items == 0 || !(duration_s > 0.0))
    throw std::invalid_argument("synth_dataset: rate, item count and duration must be positive");
  const double nyquist = 0.5 * static_cast<double>(rate_hz);
  for (const auto& band : proxy.source_bands())
    if (band.hi_hz > nyquist)
      throw std::invalid_argument("source band above " + std::to_string(band.hi_hz) +
                                  " Hz cannot be represented at " + std::to_string(rate_hz) + " Hz");
  const bool full_band = proxy.gate_band().hi_hz < nyquist;
  const auto length = static_cast<std::size_t>(std::llround(duration_s * static_cast<double>(rate_hz)));
  if (length == 0) throw std::invalid_argument("synth_dataset: duration shorter than one sample");

  SynthDataset ds;
  ds.rate_hz = rate_hz;
  ds.duration_s = duration_s;
  ds.seed = seed;
  const double noise_power = 0.5 * std::pow(10.0, options.noise_level_db / 10.0);
  const double excitation_power = 0.5 * std::pow(10.0, options.excitation_level_db / 10.0);

  for (std::size_t item = 0; item < n_items; ++item) {
    SynthItem it;
    std::vector<double> mix(length, 0.0);
    for (std::size_t s = 0; s < proxy.source_bands().size(); ++s) {
      Xoshiro256pp rng(derive_seed(seed, "synth-source", item * 1024 + s));
      const Band band = proxy.source_bands()[s];
      const double margin = options.edge_margin * (band.hi_hz - band.lo_hz);
      const auto tones = draw_tones(rng, options.tones_per_source, band.lo_hz + margin, band.hi_hz - margin, 0.5);
      const auto noise = draw_tones(rng, options.noise_tones_per_source, band.lo_hz + 0.5 * margin,
                                    band.hi_hz - 0.5 * margin, noise_power);
      const auto excitation = draw_tones(rng, options.excitation_tones_per_source, proxy.gate_band().lo_hz,
                                         proxy.gate_band().hi_hz, excitation_power);
      const double env_freq = 0.5 + 1.5 * rng.uniform();
      const double env_phase = 2.0 * std::numbers::pi * rng.uniform();

      std::vector<double> src(length);
      for (std::size_t i = 0; i < length; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(rate_hz);
        const double env = 0.6 + 0.4 * std::sin(2.0 * std::numbers::pi * env_freq * t + env_phase);
        double v = eval_tones(tones, t) + eval_tones(noise, t);
        if (full_band) v += eval_tones(excitation, t);
        src[i] = env * v;
        mix[i] += src[i];
      }
      it.sources.push_back(Signal::mono(std::move(src), rate_hz));
    }
    it.mixture = Signal::mono(std::move(mix), rate_hz);
    ds.items.push_back(std::move(it));
  }
  return ds;
}

}  // namespace hfr
