#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hfr/signal.hpp"

namespace hfr {

/// A downstream model that is never updated: forward plus the
/// vector-Jacobian product with respect to its input.
class FrozenSeparator {
 public:
  virtual ~FrozenSeparator() = default;

  virtual std::int64_t rate_hz() const = 0;
  virtual std::size_t num_sources() const = 0;
  virtual std::vector<Signal> separate(const Signal& mixture) const = 0;
  /// Given dL/d(source estimates) returns dL/d(mixture).
  virtual Signal separate_backward(const Signal& mixture, std::span<const Signal> grad_sources) const = 0;
};

/// Returns the mixture as its single source.
class IdentitySeparator final : public FrozenSeparator {
 public:
  explicit IdentitySeparator(std::int64_t rate_hz) : rate_(rate_hz) {}

  std::int64_t rate_hz() const override { return rate_; }
  std::size_t num_sources() const override { return 1; }
  std::vector<Signal> separate(const Signal& mixture) const override { return {mixture}; }
  Signal separate_backward(const Signal&, std::span<const Signal> grad_sources) const override {
    return grad_sources.front();
  }

 private:
  std::int64_t rate_;
};

}  // namespace hfr
