#pragma once

// End-to-end gradient check shared by the unit tests and the acceptance
// suite: trainable upsampling -> frozen proxy -> conventional downsampling ->
// both loss terms, analytic gradient against central differences. The loss
// is only piecewise smooth (ReLU), so a step that moves any hidden unit of any
// tap across zero is shrunk tenfold until the activation pattern is constant.

#include <algorithm>
#include <cstdint>

#include "hfr/mlp_kernel.hpp"
#include "hfr/proxy.hpp"
#include "hfr/rng.hpp"
#include "hfr/trainable.hpp"
#include "hfr/trainer.hpp"
#include "oracles.hpp"

namespace testutil {

struct GradientCheck {
  double max_rel_err = 0.0;
  int checked = 0;
  int kink_retries = 0;
};

inline GradientCheck pipeline_gradient_check(std::uint64_t seed, std::size_t n_samples = 256, int n_params = 20,
                                             double h = 1e-6) {
  hfr::ProxyOptions opts;
  opts.source_span_hz = 3600.0;
  const hfr::ProxySeparator proxy = hfr::build_proxy(44100, 2, seed, opts);
  const double duration = static_cast<double>(n_samples) / 8000.0;
  const hfr::SynthItem item = hfr::synth_dataset(proxy, 8000, 1, duration, seed + 1).items.front();
  const hfr::KernelPipeline pipeline(proxy, 8000, {});

  hfr::MlpKernelParams p = hfr::MlpKernelParams::init(seed + 2);
  const auto [terms, grad] = pipeline.loss_and_gradient(item, p);

  const auto offsets = hfr::sample_kernel(p, 8000, 44100).offsets;
  GradientCheck out;
  hfr::Xoshiro256pp pick(hfr::derive_seed(seed, "gradient-check"));
  for (int k = 0; k < n_params; ++k) {
    const std::size_t i = pick.next() % hfr::MlpKernelParams::kCount;
    const double keep = p.values[i];
    // Shrink the step while the +/- points straddle a ReLU kink of some tap.
    double step = h;
    for (int shrink = 0; shrink < 4; ++shrink) {
      p.values[i] = keep + step;
      const auto above = hfr::mlp_relu_pattern(offsets, p);
      p.values[i] = keep - step;
      const auto below = hfr::mlp_relu_pattern(offsets, p);
      if (above == below) break;
      step *= 0.1;
      ++out.kink_retries;
    }
    p.values[i] = keep + step;
    const double up = pipeline.loss(item, p).total();
    p.values[i] = keep - step;
    const double down = pipeline.loss(item, p).total();
    p.values[i] = keep;
    const double fd = (up - down) / (2.0 * step);
    // absolute floor scaled to the loss: below it the difference quotient is roundoff
    const double floor = 1e-7 * std::max(1.0, terms.total());
    out.max_rel_err = std::max(out.max_rel_err, oracle::rel_err(grad[i], fd, floor));
    ++out.checked;
  }
  return out;
}

}  // namespace testutil
