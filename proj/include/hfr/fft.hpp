#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace hfr {

using Complex = std::complex<double>;

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

/// Precomputed transform of a fixed length. Power-of-two lengths run an
/// iterative radix-2 transform; other lengths go through Bluestein's chirp-z
/// algorithm on a power-of-two convolution.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }

  /// In-place forward transform X[k] = sum x[n] exp(-2 pi i k n / N).
  void forward(std::span<Complex> data) const;
  /// In-place inverse transform including the 1/N factor.
  void inverse(std::span<Complex> data) const;

 private:
  void radix2(std::span<Complex> data, bool inverse) const;
  void bluestein(std::span<Complex> data, bool inverse) const;

  std::size_t n_ = 0;
  // radix-2 state (n_ a power of two)
  std::vector<std::size_t> bitrev_;
  std::vector<Complex> twiddles_;
  // Bluestein state
  std::vector<Complex> chirp_;
  std::vector<Complex> chirp_spectrum_;
  std::vector<FftPlan> inner_;  // zero or one element
};

/// Forward DFT of a real sequence (full N-point complex spectrum).
std::vector<Complex> dft(std::span<const double> x);

/// Inverse DFT returning the real part (input assumed Hermitian).
std::vector<double> idft_real(std::span<const Complex> spectrum);

}  // namespace hfr
