#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hfr/mlp_kernel.hpp"
#include "hfr/proxy.hpp"
#include "hfr/resampler.hpp"
#include "hfr/trainer.hpp"

namespace hfr {

struct SourceScore {
  double mean_sdr_db = 0.0;
  double stderr_db = 0.0;
  std::size_t n_items = 0;
};

struct SdrTable {
  std::string method;
  std::vector<SourceScore> sources;

  /// Mean over sources of the per-source mean SDR.
  double mean_sdr_db() const;
};

/// Mean and standard error (sample std / sqrt(n)) in input order.
SourceScore summarize(const std::vector<double>& values);

/// For every item: resample the mixture up to the proxy rate with the given
/// method, separate, bring each estimate back with the conventional kernel
/// and score it against the input-rate ground truth. Per-item randomness uses
/// derive_seed(spec.seed, "experiment-item", item).
SdrTable run_experiment(const ProxySeparator& proxy, const SynthDataset& dataset, const ResampleSpec& spec);

/// Separation at the proxy's own rate without any resampling.
SdrTable run_reference(const ProxySeparator& proxy, const SynthDataset& native);

struct ExperimentConfig {
  std::int64_t trained_rate_hz = 44100;
  std::int64_t input_rate_hz = 8000;
  std::size_t n_sources = 2;
  std::size_t n_items = 8;
  double duration_s = 0.5;
  std::uint64_t seed = 0;
  std::vector<ResampleMethod> methods{ResampleMethod::conventional, ResampleMethod::post_noise,
                                      ResampleMethod::noisy_kernel, ResampleMethod::trainable};
  KernelConfig kernel;
  double snr_db = kDefaultSnrDb;
  double kernel_sigma = kDefaultKernelSigma;
  ProxyOptions proxy;  ///< source_span_hz <= 0 means 90% of the input Nyquist

  // trainable-kernel training
  std::size_t train_items = 32;
  std::size_t validation_items = 4;
  double train_duration_s = 0.1;
  int pretrain_epochs = 5;
  TrainConfig train;

  void validate() const;
};

struct ExperimentReport {
  SdrTable reference;
  std::vector<SdrTable> methods;
  std::optional<MlpKernelParams> trained_params;
  std::optional<TrainRecord> train_record;
};

ProxySeparator experiment_proxy(const ExperimentConfig& cfg);

/// Training and validation items at the input rate, drawn from the proxy's band plan.
KernelTrainingSet experiment_training_set(const ExperimentConfig& cfg, const ProxySeparator& proxy);
/// cfg.train with rates, kernel and seed taken from the experiment.
TrainConfig experiment_train_config(const ExperimentConfig& cfg);
MlpKernelParams experiment_initial_params(const ExperimentConfig& cfg);

/// Training against an identity model with round-trip targets, so only the
/// fit to the conventional kernel matters. Starts from the initial params.
TrainResult train_regularizer_only(const ExperimentConfig& cfg, const ProxySeparator& proxy, int max_epochs);

/// Trains a kernel for the proxy: regularizer-only pretraining with an
/// identity model, then end-to-end training through the frozen proxy.
TrainResult train_experiment_kernel(const ExperimentConfig& cfg, const ProxySeparator& proxy);

/// Reference plus one table per configured method. If the method list holds
/// "trainable" and no parameters are given, a kernel is trained first.
ExperimentReport run_full_experiment(const ExperimentConfig& cfg,
                                     const std::optional<MlpKernelParams>& trainable_params = std::nullopt);

}  // namespace hfr
