#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "hfr/fft.hpp"
#include "hfr/kernels.hpp"
#include "oracles.hpp"

using namespace hfr;

TEST_CASE("sinc values") {
  CHECK(sinc(0.0) == 1.0);
  for (int n : {-3, -1, 1, 2, 7}) CHECK(std::abs(sinc(n)) < 1e-15);
  CHECK(sinc(0.5) == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("bessel_i0 agrees with the standard library") {
  for (double x : {0.0, 0.3, 1.0, 4.1, 8.0, 20.0})
    CHECK(bessel_i0(x) == doctest::Approx(std::cyl_bessel_i(0.0, x)).epsilon(1e-11));
}

TEST_CASE("kaiser window shape") {
  const int L = 48;
  const double rate = 8000.0, alpha = 4.1;
  const double edge = L / (2.0 * rate);
  CHECK(kaiser_window(0.0, L, rate, alpha) == 1.0);
  CHECK(kaiser_window(edge, L, rate, alpha) == doctest::Approx(1.0 / bessel_i0(alpha)).epsilon(1e-12));
  CHECK(kaiser_window(-edge, L, rate, alpha) == doctest::Approx(1.0 / bessel_i0(alpha)).epsilon(1e-12));
  CHECK(kaiser_window(edge * 1.0001, L, rate, alpha) == 0.0);

  double prev = 1.0;
  for (int k = 0; k <= 1000; ++k) {
    const double w = kaiser_window(edge * k / 1000.0, L, rate, alpha);
    CHECK(w >= 0.0);
    CHECK(w <= prev);
    prev = w;
  }
}

TEST_CASE("windowed sinc zero crossings and support") {
  KernelConfig cfg;
  const double rate = 8000.0;
  CHECK(windowed_sinc_kernel(0.0, cfg, rate) == 1.0);
  for (int n = 1; n < 24; ++n) CHECK(std::abs(windowed_sinc_kernel(n / rate, cfg, rate)) < 1e-15);
  CHECK(windowed_sinc_kernel(25.0 / rate, cfg, rate) == 0.0);
}

TEST_CASE("kernel config validation") {
  KernelConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.window_length = 47;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.rolloff = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.kaiser_alpha = -1.0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("discretize: phase counts and identity phase") {
  const KernelConfig cfg;
  const KernelTable same = discretize_kernel(cfg, 8000, 8000);
  CHECK(same.phases() == 1);
  for (int i = 0; i < same.taps_per_phase(); ++i)
    CHECK(std::abs(same.tap(0, i) - (i == same.center_offset() ? 1.0 : 0.0)) <= 1e-12);

  CHECK(discretize_kernel(cfg, 8000, 44100).phases() == 441);

  const KernelTable up2 = discretize_kernel(cfg, 8000, 16000);
  CHECK(up2.phases() == 2);
  CHECK(up2.phases() * up2.taps_per_phase() == static_cast<int>(up2.size()));
  for (int i = 0; i < up2.taps_per_phase(); ++i)
    CHECK(std::abs(up2.tap(0, i) - (i == up2.center_offset() ? 1.0 : 0.0)) <= 1e-12);

  CHECK_THROWS(discretize_kernel(cfg, 0, 44100));
  CHECK_THROWS(discretize_kernel(cfg, 8000, -1));
}

TEST_CASE("discretize matches the direct kernel formula") {
  for (auto [fin, fout] : {std::pair<std::int64_t, std::int64_t>{8000, 44100}, {44100, 8000}, {22050, 44100}}) {
    const KernelTable t = discretize_kernel({}, fin, fout);
    for (int p = 0; p < t.phases(); p += 7)
      for (int i = 0; i < t.taps_per_phase(); ++i) {
        const double time = t.tap_offset(p, i) / static_cast<double>(fin);
        CHECK(std::abs(t.tap(p, i) - oracle::kernel(time, fin, fout, 48, 4.1, 1.0)) < 1e-12);
      }
  }
}

TEST_CASE("clean taps are even-symmetric about the center") {
  const KernelTable t = discretize_kernel({}, 8000, 44100);
  const auto flat = flatten_taps(t);
  // flat index r holds argument (r - center * P) / P; symmetric pair r <-> 2 c P - r
  const std::size_t c = static_cast<std::size_t>(t.center_offset()) * t.phases();
  for (std::size_t r = 0; r <= 2 * c && r < flat.size(); ++r) CHECK(std::abs(flat[r] - flat[2 * c - r]) < 1e-12);
}

TEST_CASE("kernel noise") {
  const KernelTable clean = discretize_kernel({}, 8000, 44100);
  CHECK(add_kernel_noise(clean, 0.0, 7) == clean);
  CHECK_THROWS(add_kernel_noise(clean, -1e-3, 7));

  const KernelTable a = add_kernel_noise(clean, 1e-3, 11);
  const KernelTable b = add_kernel_noise(clean, 1e-3, 11);
  const KernelTable c = add_kernel_noise(clean, 1e-3, 12);
  CHECK(a == b);
  CHECK_FALSE(a == c);

  // sample variance of the perturbation over 441 * 49 taps, repeated to pass 1e5 draws
  double sum = 0.0, sum2 = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const KernelTable n = add_kernel_noise(clean, 1e-3, seed);
    for (std::size_t k = 0; k < clean.size(); ++k) {
      const double d = n.taps()[k] - clean.taps()[k];
      sum += d;
      sum2 += d * d;
      ++count;
    }
  }
  REQUIRE(count >= 100000);
  const double mean = sum / count;
  const double var = sum2 / count - mean * mean;
  CHECK(var == doctest::Approx(1e-6).epsilon(0.05));
}

TEST_CASE("frequency response: impulse, stopband, noisy table") {
  const KernelTable impulse = discretize_kernel({}, 8000, 8000);
  const FrequencyResponse flat = kernel_frequency_response(impulse, 64);
  CHECK(flat.freqs_hz.front() == 0.0);
  CHECK(flat.freqs_hz.back() == doctest::Approx(4000.0));
  for (double db : flat.magnitude_db) CHECK(std::abs(db) < 1e-9);

  const KernelTable clean = discretize_kernel({}, 8000, 44100);
  const FrequencyResponse r = kernel_frequency_response(clean, 32768);
  CHECK(r.freqs_hz.size() == r.magnitude_db.size());
  for (std::size_t k = 1; k < r.freqs_hz.size(); ++k) CHECK(r.freqs_hz[k] > r.freqs_hz[k - 1]);
  CHECK(r.freqs_hz.back() <= 22050.0);
  const double pass = mean_magnitude(r, 0.0, 3500.0);
  const double stop = mean_magnitude(r, 6000.0, 22050.0);
  CHECK(pass == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(20.0 * std::log10(stop / pass) < -40.0);
  // regression value of this implementation
  CHECK(20.0 * std::log10(stop / pass) == doctest::Approx(-83.2).epsilon(0.01));

  const FrequencyResponse rn = kernel_frequency_response(add_kernel_noise(clean, 1e-3, 3), 32768);
  CHECK(mean_magnitude(rn, 6000.0, 22050.0) > stop);

  CHECK_THROWS(kernel_frequency_response(clean, 1024));
  CHECK_THROWS(kernel_frequency_response(clean, 30000));
}

TEST_CASE("response of clean + noise is the sum of complex spectra") {
  const KernelTable clean = discretize_kernel({}, 8000, 16000);
  const KernelTable noisy = add_kernel_noise(clean, 1e-3, 5);
  std::vector<double> diff(clean.size());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = noisy.taps()[k] - clean.taps()[k];
  const KernelTable noise_only(8000, 16000, clean.taps_per_phase(), clean.center_offset(), diff);

  const auto a = kernel_spectrum(clean, 256);
  const auto b = kernel_spectrum(noise_only, 256);
  const auto c = kernel_spectrum(noisy, 256);
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(std::abs(c[k] - (a[k] + b[k])) < 1e-12);
}
