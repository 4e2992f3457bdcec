#include "hfr/trainable.hpp"

#include <stdexcept>

#include "hfr/resampler.hpp"

namespace hfr {

namespace {

std::vector<double> grid_offsets(const TapGrid& grid) {
  std::vector<double> offsets(static_cast<std::size_t>(grid.phases) * grid.taps_per_phase);
  for (int p = 0; p < grid.phases; ++p)
    for (int i = 0; i < grid.taps_per_phase; ++i)
      offsets[static_cast<std::size_t>(p) * grid.taps_per_phase + i] =
          static_cast<double>(i - grid.center_offset) + static_cast<double>(p) / grid.phases;
  return offsets;
}

void require_same_shape(const Signal& a, const Signal& b, const char* what) {
  if (a.num_channels() != b.num_channels() || a.length() != b.length())
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

double squared_distance(const Signal& a, const Signal& b) {
  double sum = 0.0;
  for (std::size_t c = 0; c < a.num_channels(); ++c)
    for (std::size_t i = 0; i < a.length(); ++i) {
      const double d = a.channels[c][i] - b.channels[c][i];
      sum += d * d;
    }
  return sum;
}

}  // namespace

KernelTable export_kernel(const MlpKernelParams& params, std::int64_t rate_in_hz, std::int64_t rate_out_hz,
                          const KernelConfig& cfg) {
  return sample_kernel(params, rate_in_hz, rate_out_hz, cfg).table;
}

BackpropCache sample_kernel(const MlpKernelParams& params, std::int64_t rate_in_hz, std::int64_t rate_out_hz,
                            const KernelConfig& cfg) {
  if (!params.all_finite()) throw std::invalid_argument("kernel network parameters are not finite");
  const TapGrid grid = make_tap_grid(cfg, rate_in_hz, rate_out_hz);
  BackpropCache cache;
  cache.offsets = grid_offsets(grid);
  auto taps = mlp_forward_batch(cache.offsets, params);
  cache.table = KernelTable(rate_in_hz, rate_out_hz, grid.taps_per_phase, grid.center_offset, std::move(taps));
  return cache;
}

TrainableOutput resample_trainable(const Signal& x, std::int64_t rate_out_hz, const MlpKernelParams& params,
                                   const KernelConfig& cfg) {
  x.validate();
  TrainableOutput out;
  out.cache = sample_kernel(params, x.rate_hz, rate_out_hz, cfg);
  out.cache.input_channels = x.num_channels();
  out.cache.input_length = x.length();
  out.y = resample_with_table(x, out.cache.table);
  return out;
}

std::vector<double> tap_gradient(const BackpropCache& cache, const Signal& grad_y, const Signal& x) {
  if (x.num_channels() != cache.input_channels || x.length() != cache.input_length)
    throw std::invalid_argument("backward: input does not match the cached forward pass");
  const auto expected = static_cast<std::size_t>(
      output_length(static_cast<std::int64_t>(x.length()), cache.table.source_rate_hz(),
                    cache.table.target_rate_hz()));
  if (grad_y.num_channels() != x.num_channels() || grad_y.length() != expected)
    throw std::invalid_argument("backward: output gradient has the wrong shape");
  std::vector<double> grad_taps(cache.table.size(), 0.0);
  for (std::size_t c = 0; c < x.num_channels(); ++c)
    accumulate_tap_gradient(x.channels[c], grad_y.channels[c], cache.table, grad_taps);
  return grad_taps;
}

std::vector<double> tap_gradient_to_params(const BackpropCache& cache, std::span<const double> grad_taps,
                                           const MlpKernelParams& params) {
  return mlp_backward_batch(cache.offsets, grad_taps, params);
}

std::vector<double> backward(const BackpropCache& cache, const Signal& grad_y, const Signal& x,
                             const MlpKernelParams& params) {
  const auto grad_taps = tap_gradient(cache, grad_y, x);
  return tap_gradient_to_params(cache, grad_taps, params);
}

LossTerms kernel_loss(std::span<const Signal> estimates, std::span<const Signal> references, const Signal& y_tr,
                      const Signal& y_winsinc) {
  if (estimates.size() != references.size()) throw std::invalid_argument("loss: source count mismatch");
  LossTerms terms;
  for (std::size_t s = 0; s < estimates.size(); ++s) {
    require_same_shape(estimates[s], references[s], "loss");
    terms.separation += squared_distance(estimates[s], references[s]);
  }
  require_same_shape(y_tr, y_winsinc, "loss");
  terms.regularizer = squared_distance(y_tr, y_winsinc);
  return terms;
}

}  // namespace hfr
