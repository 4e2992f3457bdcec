#include "hfr/mlp_kernel.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "hfr/rng.hpp"

namespace hfr {

namespace {

constexpr int H = MlpKernelParams::kHidden;
constexpr std::size_t kBlock = 2048;

using Mat = Eigen::MatrixXd;
using Row = Eigen::RowVectorXd;
using HVec = Eigen::Matrix<double, H, 1>;
using HMat = Eigen::Matrix<double, H, H, Eigen::RowMajor>;

struct Views {
  Eigen::Map<const HVec> w1, b1, g1, o1;
  Eigen::Map<const HMat> w2;
  Eigen::Map<const HVec> b2, g2, o2, w3;
  double b3;

  explicit Views(const std::vector<double>& v)
      : w1(v.data() + MlpKernelParams::kW1),
        b1(v.data() + MlpKernelParams::kB1),
        g1(v.data() + MlpKernelParams::kGain1),
        o1(v.data() + MlpKernelParams::kOffset1),
        w2(v.data() + MlpKernelParams::kW2),
        b2(v.data() + MlpKernelParams::kB2),
        g2(v.data() + MlpKernelParams::kGain2),
        o2(v.data() + MlpKernelParams::kOffset2),
        w3(v.data() + MlpKernelParams::kW3),
        b3(v[MlpKernelParams::kB3]) {}
};

// Activations of one block of inputs, kept for the backward pass.
struct Block {
  Row u;
  Mat norm1, pre1, h1;  // normalized, post-affine (pre-relu), post-relu
  Row inv_std1;
  Mat norm2, pre2, h2;
  Row inv_std2;
  Row out;
};

void layer_norm(const Mat& a, const Eigen::Map<const HVec>& gain, const Eigen::Map<const HVec>& offset,
                Mat& norm, Mat& pre, Row& inv_std) {
  const Row mean = a.colwise().mean();
  Mat centered = a.rowwise() - mean;
  const Row var = centered.array().square().colwise().mean();
  inv_std = (var.array() + MlpKernelParams::kLayerNormEps).rsqrt();
  norm = centered.array().rowwise() * inv_std.array();
  pre = (norm.array().colwise() * gain.array()).colwise() + offset.array();
}

void forward_block(const Views& p, Block& b) {
  Mat a1 = p.w1 * b.u;
  a1.colwise() += p.b1;
  layer_norm(a1, p.g1, p.o1, b.norm1, b.pre1, b.inv_std1);
  b.h1 = b.pre1.cwiseMax(0.0);

  Mat a2 = p.w2 * b.h1;
  a2.colwise() += p.b2;
  layer_norm(a2, p.g2, p.o2, b.norm2, b.pre2, b.inv_std2);
  b.h2 = b.pre2.cwiseMax(0.0);

  b.out = p.w3.transpose() * b.h2;
  b.out.array() += p.b3;
}

// Gradient through gain * norm + offset followed by normalization; returns
// d/d(pre-normalization input) and accumulates gain/offset gradients.
Mat layer_norm_backward(const Mat& d_pre, const Mat& norm, const Row& inv_std,
                        const Eigen::Map<const HVec>& gain, double* d_gain, double* d_offset) {
  Eigen::Map<HVec> dg(d_gain), doff(d_offset);
  dg += (d_pre.array() * norm.array()).rowwise().sum().matrix();
  doff += d_pre.rowwise().sum();
  const Mat d_norm = d_pre.array().colwise() * gain.array();
  const Row mean_d = d_norm.colwise().mean();
  const Row mean_dn = (d_norm.array() * norm.array()).colwise().mean();
  Mat d_a = d_norm;
  d_a.rowwise() -= mean_d;
  d_a.array() -= norm.array().rowwise() * mean_dn.array();
  d_a.array().rowwise() *= inv_std.array();
  return d_a;
}

double half_support(const MlpKernelParams& params) { return 0.5 * params.window_length; }

}  // namespace

MlpKernelParams MlpKernelParams::init(std::uint64_t seed, int window_length) {
  MlpKernelParams p;
  p.window_length = window_length;
  Xoshiro256pp rng(seed);
  auto fill = [&](std::size_t start, std::size_t n, double bound) {
    for (std::size_t i = 0; i < n; ++i) p.values[start + i] = bound * (2.0 * rng.uniform() - 1.0);
  };
  fill(kW1, H, 1.0);
  fill(kB1, H, 1.0);
  fill(kW2, H * H, 1.0 / std::sqrt(double(H)));
  fill(kB2, H, 1.0 / std::sqrt(double(H)));
  fill(kW3, H, 1.0 / std::sqrt(double(H)));
  fill(kB3, 1, 1.0 / std::sqrt(double(H)));
  for (std::size_t i = 0; i < H; ++i) {
    p.values[kGain1 + i] = 1.0;
    p.values[kGain2 + i] = 1.0;
  }
  return p;
}

bool MlpKernelParams::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return values.size() == kCount;
}

std::vector<double> mlp_forward_batch(std::span<const double> offsets, const MlpKernelParams& params) {
  if (params.values.size() != MlpKernelParams::kCount)
    throw std::invalid_argument("kernel network parameter vector has the wrong size");
  const Views p(params.values);
  const double support = half_support(params);
  std::vector<double> out(offsets.size(), 0.0);
  std::vector<std::size_t> idx;
  idx.reserve(kBlock);
  Block b;
  auto flush = [&] {
    if (idx.empty()) return;
    b.u.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) b.u[static_cast<Eigen::Index>(j)] = offsets[idx[j]];
    forward_block(p, b);
    for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] = b.out[static_cast<Eigen::Index>(j)];
    idx.clear();
  };
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    if (std::abs(offsets[j]) > support) continue;
    idx.push_back(j);
    if (idx.size() == kBlock) flush();
  }
  flush();
  return out;
}

std::vector<double> mlp_backward_batch(std::span<const double> offsets, std::span<const double> upstream,
                                       const MlpKernelParams& params) {
  if (offsets.size() != upstream.size()) throw std::invalid_argument("upstream size mismatch");
  if (params.values.size() != MlpKernelParams::kCount)
    throw std::invalid_argument("kernel network parameter vector has the wrong size");
  const Views p(params.values);
  const double support = half_support(params);
  std::vector<double> grad(MlpKernelParams::kCount, 0.0);
  double* g = grad.data();

  std::vector<std::size_t> idx;
  idx.reserve(kBlock);
  Block b;
  auto flush = [&] {
    if (idx.empty()) return;
    const auto n = static_cast<Eigen::Index>(idx.size());
    b.u.resize(n);
    Row s(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      b.u[j] = offsets[idx[static_cast<std::size_t>(j)]];
      s[j] = upstream[idx[static_cast<std::size_t>(j)]];
    }
    forward_block(p, b);

    Eigen::Map<HVec>(g + MlpKernelParams::kW3) += b.h2 * s.transpose();
    g[MlpKernelParams::kB3] += s.sum();
    Mat d_pre2 = p.w3 * s;
    d_pre2.array() *= (b.pre2.array() > 0.0).cast<double>();
    const Mat d_a2 = layer_norm_backward(d_pre2, b.norm2, b.inv_std2, p.g2, g + MlpKernelParams::kGain2,
                                         g + MlpKernelParams::kOffset2);
    Eigen::Map<HMat>(g + MlpKernelParams::kW2) += d_a2 * b.h1.transpose();
    Eigen::Map<HVec>(g + MlpKernelParams::kB2) += d_a2.rowwise().sum();

    Mat d_pre1 = p.w2.transpose() * d_a2;
    d_pre1.array() *= (b.pre1.array() > 0.0).cast<double>();
    const Mat d_a1 = layer_norm_backward(d_pre1, b.norm1, b.inv_std1, p.g1, g + MlpKernelParams::kGain1,
                                         g + MlpKernelParams::kOffset1);
    Eigen::Map<HVec>(g + MlpKernelParams::kW1) += d_a1 * b.u.transpose();
    Eigen::Map<HVec>(g + MlpKernelParams::kB1) += d_a1.rowwise().sum();
    idx.clear();
  };
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    if (upstream[j] == 0.0 || std::abs(offsets[j]) > support) continue;
    idx.push_back(j);
    if (idx.size() == kBlock) flush();
  }
  flush();
  return grad;
}

std::vector<char> mlp_relu_pattern(std::span<const double> offsets, const MlpKernelParams& params) {
  const Views p(params.values);
  const double support = half_support(params);
  std::vector<char> pattern;
  Block b;
  b.u.resize(1);
  for (double u : offsets) {
    if (std::abs(u) > support) continue;
    b.u[0] = u;
    forward_block(p, b);
    for (Eigen::Index i = 0; i < b.pre1.rows(); ++i) pattern.push_back(b.pre1(i, 0) > 0.0);
    for (Eigen::Index i = 0; i < b.pre2.rows(); ++i) pattern.push_back(b.pre2(i, 0) > 0.0);
  }
  return pattern;
}

double mlp_forward(double t, const MlpKernelParams& params, std::int64_t rate_in_hz) {
  const double u = t * static_cast<double>(rate_in_hz);
  return mlp_forward_batch(std::span<const double>(&u, 1), params)[0];
}

std::vector<double> mlp_param_gradient(double t, const MlpKernelParams& params, std::int64_t rate_in_hz) {
  const double u = t * static_cast<double>(rate_in_hz);
  const double one = 1.0;
  return mlp_backward_batch(std::span<const double>(&u, 1), std::span<const double>(&one, 1), params);
}

}  // namespace hfr
