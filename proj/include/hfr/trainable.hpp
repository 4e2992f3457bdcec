#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hfr/kernels.hpp"
#include "hfr/mlp_kernel.hpp"
#include "hfr/signal.hpp"

namespace hfr {

/// Samples the kernel network on the same argument grid discretize_kernel
/// uses, so the result plugs into every table-based resampler path.
KernelTable export_kernel(const MlpKernelParams& params, std::int64_t rate_in_hz, std::int64_t rate_out_hz,
                          const KernelConfig& cfg = {});

/// What backward needs from the forward pass: the sampled kernel (every
/// (m, n) pair of the resampling sum maps to one of its taps) and the tap
/// arguments, plus the input shape it was built for.
struct BackpropCache {
  KernelTable table;
  std::vector<double> offsets;  ///< u = t * F_in for each tap, table layout
  std::size_t input_channels = 0;
  std::size_t input_length = 0;
};

/// Samples the network on the tap grid and keeps the arguments; input shape
/// fields stay zero until a forward pass fills them.
BackpropCache sample_kernel(const MlpKernelParams& params, std::int64_t rate_in_hz, std::int64_t rate_out_hz,
                            const KernelConfig& cfg = {});

struct TrainableOutput {
  Signal y;
  BackpropCache cache;
};

TrainableOutput resample_trainable(const Signal& x, std::int64_t rate_out_hz, const MlpKernelParams& params,
                                   const KernelConfig& cfg = {});

/// Tap-space gradient: d/d taps of sum_m grad_y[m] * y[m], summed over channels.
std::vector<double> tap_gradient(const BackpropCache& cache, const Signal& grad_y, const Signal& x);

/// Chain rule from tap-space gradient to network parameters.
std::vector<double> tap_gradient_to_params(const BackpropCache& cache, std::span<const double> grad_taps,
                                           const MlpKernelParams& params);

/// dL/dparams = sum_m dL/dy[m] sum_n x[n] dk(t_mn)/dparams.
std::vector<double> backward(const BackpropCache& cache, const Signal& grad_y, const Signal& x,
                             const MlpKernelParams& params);

struct LossTerms {
  double separation = 0.0;
  double regularizer = 0.0;
  double total() const { return separation + regularizer; }
};

/// ||s_hat - s||^2 summed over sources, channels and samples, plus
/// ||y_tr - y_winsinc||^2. Plain sums of squares, no averaging.
LossTerms kernel_loss(std::span<const Signal> estimates, std::span<const Signal> references, const Signal& y_tr,
                      const Signal& y_winsinc);

}  // namespace hfr
