#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "helpers.hpp"
#include "hfr/analysis.hpp"
#include "hfr/fft.hpp"
#include "oracles.hpp"

using namespace hfr;

TEST_CASE("fft matches the naive DFT") {
  for (std::size_t n : {1u, 2u, 7u, 64u, 100u, 127u, 256u, 441u}) {
    const auto re = testutil::noise(n, n), im = testutil::noise(n, n + 1000);
    std::vector<Complex> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = {re[i], im[i]};
    const auto ref = oracle::naive_dft(x);
    std::vector<Complex> y = x;
    FftPlan(n).forward(y);
    double scale = 0.0, err = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      scale = std::max(scale, std::abs(ref[k]));
      err = std::max(err, std::abs(ref[k] - y[k]));
    }
    INFO("n = " << n);
    CHECK(err <= 1e-9 * scale);

    FftPlan(n).inverse(y);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y[i] - x[i]) < 1e-12);
  }
}

TEST_CASE("dft of impulse and constant") {
  std::vector<double> impulse(16, 0.0);
  impulse[0] = 1.0;
  for (const auto& v : dft(impulse)) CHECK(std::abs(v - Complex(1.0, 0.0)) < 1e-14);

  const auto c = dft(std::vector<double>(12, 2.0));
  CHECK(std::abs(c[0] - Complex(24.0, 0.0)) < 1e-12);
  for (std::size_t k = 1; k < c.size(); ++k) CHECK(std::abs(c[k]) < 1e-12);

  const auto x = testutil::noise(30, 8);
  const auto back = idft_real(dft(x));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back[i] - x[i]) < 1e-12);
}

TEST_CASE("power-of-two helpers") {
  CHECK(is_power_of_two(1));
  CHECK(is_power_of_two(1024));
  CHECK_FALSE(is_power_of_two(0));
  CHECK_FALSE(is_power_of_two(12));
  CHECK(next_power_of_two(1) == 1);
  CHECK(next_power_of_two(1025) == 2048);
}

TEST_CASE("band energy of a sine") {
  // short signal: plain DFT
  const Signal s = testutil::sine(1000.0, 8000, 4000);
  CHECK(band_energy(s, 500.0, 1500.0) >= 0.99 * s.energy());
  // long signal: Welch averaging
  const Signal l = testutil::sine(1000.0, 44100, 44100);
  CHECK(band_energy(l, 500.0, 1500.0) >= 0.99 * band_energy(l, 0.0, 22050.0));
  CHECK(band_energy(l, 0.0, 22050.0) == doctest::Approx(l.energy()).epsilon(0.01));
}

TEST_CASE("band energy edge cases") {
  CHECK(band_energy(Signal::zeros(1, 1000, 8000), 0.0, 4000.0) == 0.0);
  const Signal x = testutil::white(1000, 8000, 2);
  CHECK_THROWS(band_energy(x, 0.0, 4001.0));
  CHECK_THROWS(band_energy(x, 2000.0, 2000.0));
  CHECK_THROWS(band_energy(x, -1.0, 100.0));
}

TEST_CASE("white noise splits evenly between half bands") {
  const Signal x = testutil::white(20000, 16000, 3);
  const double lo = band_energy(x, 0.0, 4000.0), hi = band_energy(x, 4000.0, 8000.0);
  CHECK(lo == doctest::Approx(hi).epsilon(0.1));
}

TEST_CASE("disjoint full cover sums to the total energy") {
  const Signal x = testutil::white(999, 8000, 4, 2);
  const std::vector<double> edges{0.0, 150.0, 1000.0, 2500.0, 3999.0, 4000.0};
  const SpectralReport r = spectral_report(x, edges);
  double sum = 0.0;
  for (double e : r.band_energy) sum += e;
  CHECK(sum == doctest::Approx(x.energy()).epsilon(1e-9));
  CHECK(r.total_energy == doctest::Approx(x.energy()).epsilon(1e-9));
  CHECK(r.band_energy.size() == edges.size() - 1);

  const Signal even = testutil::white(1000, 8000, 5);
  const double parts = band_energy(even, 0.0, 1234.5) + band_energy(even, 1234.5, 4000.0);
  CHECK(parts == doctest::Approx(even.energy()).epsilon(1e-9));
}

TEST_CASE("snr and sdr") {
  const Signal ref = testutil::white(1000, 8000, 6);
  Signal est = ref;
  for (auto& v : est.channels[0]) v *= 1.1;
  CHECK(sdr_db(est, ref) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(sdr_db(ref, ref) == kSdrCapDb);
  CHECK(sdr_db(Signal::zeros(1, 1000, 8000), ref) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS(sdr_db(ref, Signal::zeros(1, 1000, 8000)));

  Signal a = est, b = ref;
  for (auto& v : a.channels[0]) v *= -3.0;
  for (auto& v : b.channels[0]) v *= -3.0;
  CHECK(sdr_db(a, b) == doctest::Approx(sdr_db(est, ref)).epsilon(1e-12));

  CHECK(snr_db(ref, est) == doctest::Approx(20.0).epsilon(1e-12));
  Signal doubled = ref;
  for (auto& v : doubled.channels[0]) v *= 2.0;
  CHECK(snr_db(ref, doubled) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::isinf(snr_db(ref, ref)));
}

TEST_CASE("spectrogram") {
  const Spectrogram silent = spectrogram(Signal::zeros(1, 4096, 8000));
  CHECK(silent.frames() == 13);
  CHECK(silent.bins() == 513);
  for (const auto& row : silent.magnitude_db)
    for (double v : row) CHECK(v == -120.0);

  const double f = 1250.0;
  const Spectrogram s = spectrogram(testutil::sine(f, 8000, 8000), 512, 128);
  const auto expected = static_cast<std::size_t>(std::lround(f * 512 / 8000.0));
  for (const auto& row : s.magnitude_db) {
    const auto peak = std::max_element(row.begin(), row.end()) - row.begin();
    CHECK(static_cast<std::size_t>(peak) == expected);
  }
  CHECK(s.bin_hz == doctest::Approx(8000.0 / 512));
  CHECK(s.frame_rate_hz == doctest::Approx(8000.0 / 128));

  // chirp: the ridge climbs monotonically
  std::vector<double> chirp(16000);
  for (std::size_t i = 0; i < chirp.size(); ++i) {
    const double t = static_cast<double>(i) / 16000.0;
    chirp[i] = std::sin(2.0 * std::numbers::pi * (500.0 * t + 2500.0 * t * t));
  }
  const Spectrogram c = spectrogram(Signal::mono(chirp, 16000), 1024, 256);
  long prev = -1;
  for (const auto& row : c.magnitude_db) {
    const long peak = std::max_element(row.begin(), row.end()) - row.begin();
    CHECK(peak >= prev);
    prev = peak;
  }
}
