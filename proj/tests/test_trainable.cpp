#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "hfr/kernels.hpp"
#include "hfr/mlp_kernel.hpp"
#include "hfr/resampler.hpp"
#include "hfr/rng.hpp"
#include "hfr/trainable.hpp"
#include "oracles.hpp"

using namespace hfr;
using P = MlpKernelParams;

namespace {

// Random parameters with non-trivial layer-norm gains and offsets.
P random_params(std::uint64_t seed) {
  P p = P::init(seed);
  Xoshiro256pp rng(seed ^ 0xabcdef);
  for (std::size_t i = P::kGain1; i < P::kOffset1 + P::kHidden; ++i) p.values[i] += 0.3 * rng.gaussian();
  for (std::size_t i = P::kGain2; i < P::kOffset2 + P::kHidden; ++i) p.values[i] += 0.3 * rng.gaussian();
  return p;
}

}  // namespace

TEST_CASE("mlp forward: support, zero output layer, determinism") {
  const P p = random_params(1);
  const double edge = 24.0 / 8000.0;
  CHECK(mlp_forward(edge * 1.001, p, 8000) == 0.0);
  CHECK(mlp_forward(-edge * 1.5, p, 8000) == 0.0);
  CHECK(mlp_forward(0.001, p, 8000) != 0.0);

  P zero = p;
  for (std::size_t i = P::kW3; i < P::kCount; ++i) zero.values[i] = 0.0;
  for (double t = -edge; t <= edge; t += edge / 37) CHECK(mlp_forward(t, zero, 8000) == 0.0);

  const double a = mlp_forward(0.00123, p, 8000);
  CHECK(mlp_forward(0.00123, p, 8000) == a);
  CHECK(P::init(1) == P::init(1));
  CHECK_FALSE(P::init(1) == P::init(2));
}

TEST_CASE("mlp forward: batch and scalar paths agree") {
  const P p = random_params(2);
  std::vector<double> u;
  for (int k = -2600; k <= 2600; ++k) u.push_back(k / 100.0);
  const auto batch = mlp_forward_batch(u, p);
  for (std::size_t j = 0; j < u.size(); ++j) CHECK(std::abs(batch[j] - mlp_forward(u[j] / 8000.0, p, 8000)) < 1e-12);
}

TEST_CASE("mlp parameter gradient matches central differences") {
  Xoshiro256pp rng(77);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    P p = random_params(100 + trial);
    const double t = (2.0 * rng.uniform() - 1.0) * 23.0 / 8000.0;
    const auto g = mlp_param_gradient(t, p, 8000);
    REQUIRE(g.size() == P::kCount);
    CHECK(g[P::kB3] == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t i = 0; i < P::kCount; ++i) {
      const double keep = p.values[i];
      p.values[i] = keep + h;
      const double up = mlp_forward(t, p, 8000);
      p.values[i] = keep - h;
      const double down = mlp_forward(t, p, 8000);
      p.values[i] = keep;
      worst = std::max(worst, oracle::rel_err(g[i], (up - down) / (2.0 * h), 1e-5));
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("mlp gradient outside the support is zero") {
  const auto g = mlp_param_gradient(30.0 / 8000.0, random_params(3), 8000);
  for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("batched backward equals the sum of per-point gradients") {
  const P p = random_params(4);
  const std::vector<double> u{-20.5, -3.25, 0.0, 0.7, 11.0, 25.0};
  const std::vector<double> w{0.3, -1.2, 2.0, 0.5, -0.7, 4.0};
  const auto batch = mlp_backward_batch(u, w, p);
  std::vector<double> sum(P::kCount, 0.0);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const auto g = mlp_param_gradient(u[j] / 8000.0, p, 8000);
    for (std::size_t i = 0; i < P::kCount; ++i) sum[i] += w[j] * g[i];
  }
  for (std::size_t i = 0; i < P::kCount; ++i) CHECK(std::abs(batch[i] - sum[i]) < 1e-10);
}

TEST_CASE("trainable resampling equals table resampling of the exported kernel") {
  const P p = random_params(5);
  const Signal x = testutil::white(300, 8000, 1, 2);
  const auto out = resample_trainable(x, 44100, p);
  const Signal ref = resample_with_table(x, export_kernel(p, 8000, 44100));
  for (std::size_t c = 0; c < 2; ++c) CHECK(testutil::max_abs_diff(out.y.channels[c], ref.channels[c]) < 1e-10);
  CHECK(out.cache.input_length == 300);
  CHECK(out.cache.input_channels == 2);

  CHECK(resample_trainable(Signal::zeros(1, 100, 8000), 44100, p).y.is_silent());

  const auto a = testutil::noise(200, 1), b = testutil::noise(200, 2);
  std::vector<double> mix(200);
  for (std::size_t i = 0; i < 200; ++i) mix[i] = 2.0 * a[i] + 0.5 * b[i];
  const auto ya = resample_trainable(Signal::mono(a, 8000), 44100, p).y.channels[0];
  const auto yb = resample_trainable(Signal::mono(b, 8000), 44100, p).y.channels[0];
  const auto ym = resample_trainable(Signal::mono(mix, 8000), 44100, p).y.channels[0];
  for (std::size_t i = 0; i < ym.size(); ++i) CHECK(std::abs(ym[i] - (2.0 * ya[i] + 0.5 * yb[i])) < 1e-10);
}

TEST_CASE("export of a zero output layer is an all-zero table") {
  P p = random_params(6);
  for (std::size_t i = P::kW3; i < P::kCount; ++i) p.values[i] = 0.0;
  const KernelTable t = export_kernel(p, 8000, 44100);
  CHECK(t.phases() == 441);
  for (double v : t.taps()) CHECK(v == 0.0);
  CHECK(t.same_shape(discretize_kernel({}, 8000, 44100)));
}

TEST_CASE("loss terms") {
  const Signal s1 = testutil::white(50, 8000, 1), s2 = testutil::white(50, 8000, 2);
  const Signal y = testutil::white(80, 44100, 3);
  const std::vector<Signal> s{s1, s2};
  const LossTerms zero = kernel_loss(s, s, y, y);
  CHECK(zero.total() == 0.0);

  Signal impulse = y;
  impulse.channels[0][17] += 1.0;
  const LossTerms one = kernel_loss(s, s, impulse, y);
  CHECK(one.total() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one.separation == 0.0);

  const Signal e1 = testutil::white(50, 8000, 4), e2 = testutil::white(50, 8000, 5);
  const Signal yr = testutil::white(80, 44100, 6);
  const std::vector<Signal> est{e1, e2};
  const LossTerms l = kernel_loss(est, s, yr, y);
  double sep = 0.0, reg = 0.0;
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 50; ++i) sep += std::pow(est[k].channels[0][i] - s[k].channels[0][i], 2);
  for (std::size_t i = 0; i < 80; ++i) reg += std::pow(yr.channels[0][i] - y.channels[0][i], 2);
  CHECK(l.separation == doctest::Approx(sep).epsilon(1e-12));
  CHECK(l.regularizer == doctest::Approx(reg).epsilon(1e-12));
  CHECK(l.total() == l.separation + l.regularizer);

  const std::vector<Signal> short_est{e1};
  CHECK_THROWS(kernel_loss(short_est, s, yr, y));
  CHECK_THROWS(kernel_loss(est, s, yr, testutil::white(81, 44100, 7)));
}

TEST_CASE("backward: trivial cases") {
  const P p = random_params(7);
  const Signal x = testutil::white(40, 8000, 8);
  const auto out = resample_trainable(x, 44100, p);
  const Signal zero_grad = Signal::zeros(1, out.y.length(), 44100);
  for (double v : backward(out.cache, zero_grad, x, p)) CHECK(v == 0.0);

  // x = [1], only y[0] carries gradient: t_00 = 0
  const Signal one = Signal::mono({1.0}, 8000);
  const auto single = resample_trainable(one, 44100, p);
  Signal g = Signal::zeros(1, single.y.length(), 44100);
  g.channels[0][0] = 2.5;
  const auto grad = backward(single.cache, g, one, p);
  const auto ref = mlp_param_gradient(0.0, p, 8000);
  for (std::size_t i = 0; i < P::kCount; ++i) CHECK(std::abs(grad[i] - 2.5 * ref[i]) < 1e-12);

  // stale cache
  CHECK_THROWS(backward(out.cache, zero_grad, testutil::white(41, 8000, 8), p));
  CHECK_THROWS(backward(out.cache, Signal::zeros(1, out.y.length() + 1, 44100), x, p));
}

TEST_CASE("backward through the resampler matches central differences") {
  const double h = 1e-6;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    P p = random_params(20 + seed);
    const Signal x = testutil::white(64, 8000, 30 + seed);
    const auto out = resample_trainable(x, 44100, p);
    const Signal c = testutil::white(out.y.length(), 44100, 40 + seed);
    auto objective = [&](const P& q) {
      const auto y = resample_trainable(x, 44100, q).y.channels[0];
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) s += c.channels[0][i] * y[i];
      return s;
    };
    const auto grad = backward(out.cache, c, x, p);
    Xoshiro256pp pick(seed);
    for (int k = 0; k < 20; ++k) {
      const std::size_t i = pick.next() % P::kCount;
      const double keep = p.values[i];
      // keep both evaluation points on the same side of every ReLU kink
      double step = h;
      for (int shrink = 0; shrink < 4; ++shrink) {
        p.values[i] = keep + step;
        const auto above = mlp_relu_pattern(out.cache.offsets, p);
        p.values[i] = keep - step;
        if (above == mlp_relu_pattern(out.cache.offsets, p)) break;
        step *= 0.1;
      }
      p.values[i] = keep + step;
      const double up = objective(p);
      p.values[i] = keep - step;
      const double down = objective(p);
      p.values[i] = keep;
      CHECK(oracle::rel_err(grad[i], (up - down) / (2.0 * step), 1e-5) <= 1e-4);
    }
  }
}

TEST_CASE("init ranges") {
  const P p = P::init(9);
  for (std::size_t i = P::kGain1; i < P::kOffset1; ++i) CHECK(p.values[i] == 1.0);
  for (std::size_t i = P::kOffset1; i < P::kW2; ++i) CHECK(p.values[i] == 0.0);
  const double bound = 1.0 / std::sqrt(32.0);
  for (std::size_t i = P::kW2; i < P::kB2 + P::kHidden; ++i) CHECK(std::abs(p.values[i]) <= bound);
  CHECK(p.all_finite());
  P bad = p;
  bad.values[5] = std::nan("");
  CHECK_FALSE(bad.all_finite());
  CHECK_THROWS(export_kernel(bad, 8000, 44100));
}
