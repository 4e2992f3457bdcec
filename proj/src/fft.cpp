#include "hfr/fft.hpp"

#include <numbers>
#include <stdexcept>

namespace hfr {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("FftPlan: length must be positive");
  if (is_power_of_two(n)) {
    int bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    bitrev_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (int b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      bitrev_[i] = r;
    }
    twiddles_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddles_[k] = {std::cos(angle), std::sin(angle)};
    }
    return;
  }

  // chirp[k] = exp(-i pi k^2 / n); k^2 reduced mod 2n to keep the angle small.
  const std::size_t m = next_power_of_two(2 * n - 1);
  chirp_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t k2 = (k * k) % (2 * n);
    const double angle = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp_[k] = {std::cos(angle), std::sin(angle)};
  }
  inner_.emplace_back(m);
  chirp_spectrum_.assign(m, Complex{});
  chirp_spectrum_[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n; ++k) {
    chirp_spectrum_[k] = std::conj(chirp_[k]);
    chirp_spectrum_[m - k] = std::conj(chirp_[k]);
  }
  inner_.front().forward(chirp_spectrum_);
}

void FftPlan::forward(std::span<Complex> data) const {
  if (data.size() != n_) throw std::invalid_argument("FftPlan: length mismatch");
  if (bitrev_.empty())
    bluestein(data, false);
  else
    radix2(data, false);
}

void FftPlan::inverse(std::span<Complex> data) const {
  if (data.size() != n_) throw std::invalid_argument("FftPlan: length mismatch");
  if (bitrev_.empty())
    bluestein(data, true);
  else
    radix2(data, true);
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& v : data) v *= scale;
}

void FftPlan::radix2(std::span<Complex> data, bool inverse) const {
  for (std::size_t i = 0; i < n_; ++i)
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        Complex w = twiddles_[k * stride];
        if (inverse) w = std::conj(w);
        const Complex a = data[start + k];
        const Complex b = data[start + k + half] * w;
        data[start + k] = a + b;
        data[start + k + half] = a - b;
      }
    }
  }
}

void FftPlan::bluestein(std::span<Complex> data, bool inverse) const {
  // The inverse transform is conj(F(conj(x))) before scaling.
  const FftPlan& inner = inner_.front();
  const std::size_t m = inner.size();
  std::vector<Complex> work(m, Complex{});
  for (std::size_t k = 0; k < n_; ++k) {
    const Complex v = inverse ? std::conj(data[k]) : data[k];
    work[k] = v * chirp_[k];
  }
  inner.forward(work);
  for (std::size_t k = 0; k < m; ++k) work[k] *= chirp_spectrum_[k];
  inner.inverse(work);
  for (std::size_t k = 0; k < n_; ++k) {
    const Complex v = work[k] * chirp_[k];
    data[k] = inverse ? std::conj(v) : v;
  }
}

std::vector<Complex> dft(std::span<const double> x) {
  std::vector<Complex> out(x.begin(), x.end());
  FftPlan(x.size()).forward(out);
  return out;
}

std::vector<double> idft_real(std::span<const Complex> spectrum) {
  std::vector<Complex> work(spectrum.begin(), spectrum.end());
  FftPlan(work.size()).inverse(work);
  std::vector<double> out(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) out[i] = work[i].real();
  return out;
}

}  // namespace hfr
