#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hfr {

/// Parameters of the continuous-time kernel network
///
///   u  = t * F_in
///   h1 = relu(LN1(W1 u + b1))
///   h2 = relu(LN2(W2 h1 + b2))
///   k  = W3 h2 + b3
///
/// with layer normalization LN(a) = gain * (a - mean(a)) / sqrt(var(a) + eps) + offset.
/// Everything lives in one flat vector so optimizers and gradient checks can
/// treat it as a plain parameter array; the offsets below name the blocks.
struct MlpKernelParams {
  static constexpr int kHidden = 32;
  static constexpr double kLayerNormEps = 1e-5;

  static constexpr std::size_t kW1 = 0;
  static constexpr std::size_t kB1 = kW1 + kHidden;
  static constexpr std::size_t kGain1 = kB1 + kHidden;
  static constexpr std::size_t kOffset1 = kGain1 + kHidden;
  static constexpr std::size_t kW2 = kOffset1 + kHidden;  // row-major [out][in]
  static constexpr std::size_t kB2 = kW2 + kHidden * kHidden;
  static constexpr std::size_t kGain2 = kB2 + kHidden;
  static constexpr std::size_t kOffset2 = kGain2 + kHidden;
  static constexpr std::size_t kW3 = kOffset2 + kHidden;
  static constexpr std::size_t kB3 = kW3 + kHidden;
  static constexpr std::size_t kCount = kB3 + 1;

  std::vector<double> values = std::vector<double>(kCount, 0.0);
  /// Support is |t| <= window_length / (2 F_in); the network is zero outside.
  int window_length = 48;

  /// Fan-in scaled uniform init U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights
  /// and biases, unit gains, zero offsets.
  static MlpKernelParams init(std::uint64_t seed, int window_length = 48);

  bool all_finite() const;
  bool operator==(const MlpKernelParams& other) const = default;
};

/// Kernel amplitude at time t (seconds).
double mlp_forward(double t, const MlpKernelParams& params, std::int64_t rate_in_hz);

/// d k(t) / d params; all zeros outside the support.
std::vector<double> mlp_param_gradient(double t, const MlpKernelParams& params, std::int64_t rate_in_hz);

/// Evaluates the network at many normalized offsets u = t * F_in at once.
std::vector<double> mlp_forward_batch(std::span<const double> offsets, const MlpKernelParams& params);

/// Returns sum_j upstream[j] * d k(u_j) / d params.
std::vector<double> mlp_backward_batch(std::span<const double> offsets, std::span<const double> upstream,
                                       const MlpKernelParams& params);

/// Which hidden units are active (pre-activation > 0) at each offset inside
/// the support, both layers. The network is smooth in params between changes
/// of this pattern, which finite-difference checks use to avoid kinks.
std::vector<char> mlp_relu_pattern(std::span<const double> offsets, const MlpKernelParams& params);

}  // namespace hfr
