#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hfr/kernels.hpp"
#include "hfr/signal.hpp"

namespace hfr {

struct MlpKernelParams;

enum class ResampleMethod { conventional, post_noise, noisy_kernel, trainable };

std::string_view to_string(ResampleMethod method);
/// Accepts "conventional", "post-noise"/"post_noise", "noisy-kernel"/"noisy_kernel",
/// "trainable". Throws std::invalid_argument otherwise.
ResampleMethod parse_method(std::string_view name);

inline constexpr double kDefaultSnrDb = 20.0;
inline constexpr double kDefaultKernelSigma = 1e-3;  // sigma^2 = 1e-6

/// Method selection plus the method-specific settings.
struct ResampleSpec {
  ResampleMethod method = ResampleMethod::conventional;
  KernelConfig kernel;
  double snr_db = kDefaultSnrDb;          ///< post_noise; +inf means no noise
  double kernel_sigma = kDefaultKernelSigma;  ///< noisy_kernel
  std::uint64_t seed = 0;
  const MlpKernelParams* params = nullptr;  ///< trainable, not owned

  void validate() const;
};

/// floor(rate_out * n / rate_in) in exact integer arithmetic.
std::int64_t output_length(std::int64_t n, std::int64_t rate_in_hz, std::int64_t rate_out_hz);

/// Applies the resampling sum with a precomputed polyphase table. Samples
/// outside [0, N) are zero.
Signal resample_with_table(const Signal& x, const KernelTable& table);

/// Single-channel core of resample_with_table.
std::vector<double> resample_channel(std::span<const double> x, const KernelTable& table);

/// Transpose of resample_channel with respect to x: given dL/dy returns
/// dL/dx of length n_in.
std::vector<double> resample_channel_adjoint(std::span<const double> grad_y, const KernelTable& table,
                                             std::size_t n_in);

/// Gradient of sum_m grad_y[m] * y[m] with respect to every tap; accumulates
/// into grad_taps (same layout as table.taps()).
void accumulate_tap_gradient(std::span<const double> x, std::span<const double> grad_y,
                             const KernelTable& table, std::span<double> grad_taps);

Signal resample_conventional(const Signal& x, std::int64_t rate_out_hz, const KernelConfig& cfg = {});

/// sigma^2 = mean_power(y) * 10^(-snr_db / 10); power taken over all
/// channels jointly. Returns 0 for snr_db = +inf.
double calibrate_noise_variance(const Signal& y, double snr_db);

/// Conventional output plus calibrated i.i.d. Gaussian noise, independent per
/// channel with one shared variance.
Signal resample_post_noise(const Signal& x, std::int64_t rate_out_hz, const KernelConfig& cfg,
                           double snr_db, std::uint64_t seed);

/// One noisy table per call, shared by all channels.
Signal resample_noisy_kernel(const Signal& x, std::int64_t rate_out_hz, const KernelConfig& cfg,
                             double sigma, std::uint64_t seed);

/// Dispatches on spec.method.
Signal resample(const Signal& x, std::int64_t rate_out_hz, const ResampleSpec& spec);

}  // namespace hfr
