#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hfr/fft.hpp"
#include "hfr/separator.hpp"
#include "hfr/signal.hpp"

namespace hfr {

struct Band {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
  bool operator==(const Band&) const = default;
};

struct ProxyOptions {
  std::size_t n_fft = 1024;
  std::size_t hop = 256;
  double gate_epsilon = 6e-7;
  /// Width of the spectrum shared out among the sources; <= 0 selects the
  /// default 0.4 * trained_rate / 2.
  double source_span_hz = 0.0;
  double gate_lo_fraction = 0.55;  ///< of trained_rate / 2
  double gate_hi_fraction = 0.95;
};

/// Frozen band-splitting separator whose output is multiplied, frame by
/// frame, by g = E_high / (E_high + eps * E_total), where E_high is the
/// frame's energy inside gate_band and E_total its full energy.
///
/// Per source: Hann STFT, binary frequency mask over the source band, gate,
/// inverse STFT with weighted overlap-add. Every step is linear except the
/// gate, which is smooth wherever E_high + eps * E_total > 0.
class ProxySeparator final : public FrozenSeparator {
 public:
  ProxySeparator(std::int64_t trained_rate_hz, std::vector<Band> source_bands, Band gate_band,
                 double gate_epsilon, std::size_t n_fft, std::size_t hop, std::uint64_t seed);

  std::int64_t rate_hz() const override { return trained_rate_; }
  std::size_t num_sources() const override { return bands_.size(); }
  std::vector<Signal> separate(const Signal& mixture) const override;
  Signal separate_backward(const Signal& mixture, std::span<const Signal> grad_sources) const override;

  const std::vector<Band>& source_bands() const { return bands_; }
  const Band& gate_band() const { return gate_; }
  double gate_epsilon() const { return epsilon_; }
  std::size_t n_fft() const { return n_fft_; }
  std::size_t hop() const { return hop_; }
  std::uint64_t seed() const { return seed_; }
  bool frozen() const { return true; }

  /// Gate value of every frame of one channel.
  std::vector<double> frame_gates(std::span<const double> channel) const;
  double gate(double e_high, double e_total) const;

  bool operator==(const ProxySeparator& other) const;

 private:
  struct FrameLayout {
    std::size_t frames = 0;
    std::int64_t first_start = 0;
    std::vector<double> norm;  ///< per-sample sum of squared windows
  };

  FrameLayout layout(std::size_t n) const;
  void load_frame(std::span<const double> x, std::int64_t start, std::vector<Complex>& v) const;
  std::vector<std::vector<double>> separate_channel(std::span<const double> x) const;
  std::vector<double> backward_channel(std::span<const double> x,
                                       const std::vector<std::span<const double>>& grads) const;

  std::int64_t trained_rate_;
  std::vector<Band> bands_;
  Band gate_;
  double epsilon_;
  std::size_t n_fft_;
  std::size_t hop_;
  std::uint64_t seed_;

  std::vector<double> window_;
  std::vector<std::vector<char>> source_masks_;  // full-length bin masks
  std::vector<char> gate_mask_;
  FftPlan plan_;
};

/// Source i owns [i B, (i+1) B) with B = span / n_sources (span defaults to
/// 40% of the trained Nyquist); gate band = [0.55, 0.95] * trained Nyquist.
ProxySeparator build_proxy(std::int64_t trained_rate_hz, std::size_t n_sources, std::uint64_t seed,
                           const ProxyOptions& options = {});

struct SynthItem {
  Signal mixture;
  std::vector<Signal> sources;
};

struct SynthDataset {
  std::int64_t rate_hz = 0;
  double duration_s = 0.0;
  std::uint64_t seed = 0;
  std::vector<SynthItem> items;
};

struct SynthOptions {
  int tones_per_source = 8;
  int noise_tones_per_source = 48;
  double noise_level_db = -30.0;       ///< in-band noise power relative to the tones
  int excitation_tones_per_source = 24;
  double excitation_level_db = -30.0;  ///< gate-band excitation relative to the tones
  double edge_margin = 0.1;            ///< tones keep this fraction of B from band edges
};

/// Mono items whose sources are band-confined tone mixtures with a slow
/// random envelope. Every random draw is independent of rate_hz, so the same
/// seed yields the same continuous-time sources at any rate that can carry
/// them. Items at rates whose Nyquist exceeds the gate band's upper edge also
/// carry per-source excitation inside the gate band.
SynthDataset synth_dataset(const ProxySeparator& proxy, std::int64_t rate_hz, std::size_t n_items,
                           double duration_s, std::uint64_t seed, const SynthOptions& options = {});

}  // namespace hfr
