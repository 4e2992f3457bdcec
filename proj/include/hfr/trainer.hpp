#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hfr/kernels.hpp"
#include "hfr/mlp_kernel.hpp"
#include "hfr/proxy.hpp"
#include "hfr/separator.hpp"
#include "hfr/trainable.hpp"

namespace hfr {

struct TrainConfig {
  double learning_rate = 1e-3;
  double decay_factor = 0.98;
  int decay_every_epochs = 2;
  double grad_clip_norm = 5.0;
  int early_stop_patience = 10;
  int max_epochs = 100;
  int batch_size = 4;
  std::uint64_t seed = 0;
  std::int64_t rate_in_hz = 8000;
  std::int64_t rate_out_hz = 44100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  KernelConfig kernel;
  /// Learning rate is zero for every epoch after this one. Used to check the
  /// early-stopping contract.
  std::optional<int> freeze_after_epoch;

  void validate() const;
  double learning_rate_at(int epoch) const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  ///< mean item loss over the epoch, before each update
  double val_loss = 0.0;    ///< mean item loss on the validation split after the epoch
  double sep_term = 0.0;    ///< training-set mean of the separation term
  double reg_term = 0.0;    ///< training-set mean of the regularizer term
  double lr = 0.0;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainRecord {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  bool early_stopped = false;
  bool operator==(const TrainRecord&) const = default;
};

struct KernelTrainingSet {
  std::vector<SynthItem> train;
  std::vector<SynthItem> validation;
};

/// Per-item loss pieces and the tap-space gradient for one parameter setting.
struct ItemEvaluation {
  LossTerms terms;
  std::vector<double> grad_taps;
};

/// Evaluates the full pipeline for one item: trainable upsampling, frozen
/// model, conventional downsampling back to the input rate, loss. When
/// with_gradient is set, grad_taps holds dL/d(taps) of the exported table.
class KernelPipeline {
 public:
  KernelPipeline(const FrozenSeparator& model, std::int64_t rate_in_hz, const KernelConfig& kernel);

  std::int64_t rate_in_hz() const { return rate_in_; }
  std::int64_t rate_out_hz() const { return model_.rate_hz(); }
  const KernelConfig& kernel() const { return kernel_; }

  /// Conventional upsampling of the mixture: the regularizer target.
  Signal regularizer_target(const Signal& mixture) const;

  /// Source estimates at the input rate, zero-padded to the input length.
  std::vector<Signal> estimates(const Signal& mixture, const KernelTable& table) const;

  ItemEvaluation evaluate(const SynthItem& item, const Signal& y_winsinc, const KernelTable& table,
                          bool with_gradient) const;

  /// Total loss and dL/dparams for one item, end to end.
  std::pair<LossTerms, std::vector<double>> loss_and_gradient(const SynthItem& item, const MlpKernelParams& params) const;
  LossTerms loss(const SynthItem& item, const MlpKernelParams& params) const;

 private:
  const FrozenSeparator& model_;
  std::int64_t rate_in_;
  KernelConfig kernel_;
  KernelTable down_table_;
};

struct TrainResult {
  MlpKernelParams params;
  TrainRecord record;
};

/// Adam with step decay, global-norm clipping and early stopping on the mean
/// validation loss; only the kernel network is updated. Returns the
/// parameters of the best validation epoch. Throws std::runtime_error on a
/// non-finite loss.
TrainResult train_kernel(const KernelTrainingSet& data, const FrozenSeparator& model, const TrainConfig& cfg,
                         const MlpKernelParams& init);

/// Replaces every item's sources with the conventional round trip of its
/// mixture (up to rate_out_hz and back). Trained against IdentitySeparator,
/// the separation term then pulls towards the same optimum as the
/// regularizer, giving a regularizer-only objective.
KernelTrainingSet regularizer_only_set(const KernelTrainingSet& data, std::int64_t rate_out_hz,
                                       const KernelConfig& kernel = {});

}  // namespace hfr
