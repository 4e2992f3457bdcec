#include "hfr/experiment.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hfr/analysis.hpp"
#include "hfr/rng.hpp"
#include "hfr/trainable.hpp"

namespace hfr {

double SdrTable::mean_sdr_db() const {
  if (sources.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : sources) sum += s.mean_sdr_db;
  return sum / static_cast<double>(sources.size());
}

SourceScore summarize(const std::vector<double>& values) {
  SourceScore out;
  out.n_items = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean_sdr_db = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean_sdr_db) * (v - out.mean_sdr_db);
    const double var = sq / static_cast<double>(values.size() - 1);
    out.stderr_db = std::sqrt(var / static_cast<double>(values.size()));
  }
  return out;
}

namespace {

Signal fit_length(Signal s, std::size_t n) {
  for (auto& ch : s.channels) ch.resize(n, 0.0);
  return s;
}

SdrTable score(const std::string& method, const std::vector<std::vector<double>>& per_source) {
  SdrTable table;
  table.method = method;
  for (const auto& values : per_source) table.sources.push_back(summarize(values));
  return table;
}

}  // namespace

SdrTable run_experiment(const ProxySeparator& proxy, const SynthDataset& dataset, const ResampleSpec& spec) {
  spec.validate();
  if (dataset.rate_hz >= proxy.rate_hz())
    throw std::invalid_argument("experiment input rate must be below the model rate");
  const KernelTable down = discretize_kernel(spec.kernel, proxy.rate_hz(), dataset.rate_hz);
  std::vector<std::vector<double>> sdrs(proxy.num_sources());
  for (std::size_t k = 0; k < dataset.items.size(); ++k) {
    const auto& item = dataset.items[k];
    ResampleSpec item_spec = spec;
    item_spec.seed = derive_seed(spec.seed, "experiment-item", k);
    const Signal up = resample(item.mixture, proxy.rate_hz(), item_spec);
    const auto estimates = proxy.separate(up);
    for (std::size_t s = 0; s < estimates.size(); ++s) {
      const Signal back = fit_length(resample_with_table(estimates[s], down), item.mixture.length());
      sdrs[s].push_back(sdr_db(back, item.sources[s]));
    }
  }
  return score(std::string(to_string(spec.method)), sdrs);
}

SdrTable run_reference(const ProxySeparator& proxy, const SynthDataset& native) {
  if (native.rate_hz != proxy.rate_hz()) throw std::invalid_argument("reference dataset must be at the model rate");
  std::vector<std::vector<double>> sdrs(proxy.num_sources());
  for (const auto& item : native.items) {
    const auto estimates = proxy.separate(item.mixture);
    for (std::size_t s = 0; s < estimates.size(); ++s) sdrs[s].push_back(sdr_db(estimates[s], item.sources[s]));
  }
  return score("reference", sdrs);
}

void ExperimentConfig::validate() const {
  kernel.validate();
  if (trained_rate_hz <= 0 || input_rate_hz <= 0) throw std::invalid_argument("rates must be positive");
  if (input_rate_hz >= trained_rate_hz) throw std::invalid_argument("input rate must be below the trained rate");
  if (n_sources < 2) throw std::invalid_argument("need at least two sources");
  if (n_items == 0 || !(duration_s > 0.0)) throw std::invalid_argument("need a positive item count and duration");
  if (methods.empty()) throw std::invalid_argument("experiment needs at least one method");
}

ProxySeparator experiment_proxy(const ExperimentConfig& cfg) {
  ProxyOptions opts = cfg.proxy;
  if (opts.source_span_hz <= 0.0) opts.source_span_hz = 0.9 * 0.5 * static_cast<double>(cfg.input_rate_hz);
  return build_proxy(cfg.trained_rate_hz, cfg.n_sources, derive_seed(cfg.seed, "proxy"), opts);
}

KernelTrainingSet experiment_training_set(const ExperimentConfig& cfg, const ProxySeparator& proxy) {
  KernelTrainingSet data;
  data.train = synth_dataset(proxy, cfg.input_rate_hz, cfg.train_items, cfg.train_duration_s,
                             derive_seed(cfg.seed, "train-data"))
                   .items;
  data.validation = synth_dataset(proxy, cfg.input_rate_hz, cfg.validation_items, cfg.train_duration_s,
                                  derive_seed(cfg.seed, "validation-data"))
                        .items;
  return data;
}

TrainConfig experiment_train_config(const ExperimentConfig& cfg) {
  TrainConfig tc = cfg.train;
  tc.rate_in_hz = cfg.input_rate_hz;
  tc.rate_out_hz = cfg.trained_rate_hz;
  tc.kernel = cfg.kernel;
  tc.seed = derive_seed(cfg.seed, "train");
  return tc;
}

MlpKernelParams experiment_initial_params(const ExperimentConfig& cfg) {
  return MlpKernelParams::init(derive_seed(cfg.seed, "kernel-init"), cfg.kernel.window_length);
}

TrainResult train_regularizer_only(const ExperimentConfig& cfg, const ProxySeparator& proxy, int max_epochs) {
  TrainConfig tc = experiment_train_config(cfg);
  tc.max_epochs = max_epochs;
  const IdentitySeparator identity(cfg.trained_rate_hz);
  return train_kernel(regularizer_only_set(experiment_training_set(cfg, proxy), cfg.trained_rate_hz, cfg.kernel),
                      identity, tc, experiment_initial_params(cfg));
}

TrainResult train_experiment_kernel(const ExperimentConfig& cfg, const ProxySeparator& proxy) {
  MlpKernelParams params = experiment_initial_params(cfg);
  if (cfg.pretrain_epochs > 0) params = train_regularizer_only(cfg, proxy, cfg.pretrain_epochs).params;
  return train_kernel(experiment_training_set(cfg, proxy), proxy, experiment_train_config(cfg), params);
}

ExperimentReport run_full_experiment(const ExperimentConfig& cfg,
                                     const std::optional<MlpKernelParams>& trainable_params) {
  cfg.validate();
  const ProxySeparator proxy = experiment_proxy(cfg);
  const std::uint64_t data_seed = derive_seed(cfg.seed, "test-data");
  const SynthDataset native = synth_dataset(proxy, cfg.trained_rate_hz, cfg.n_items, cfg.duration_s, data_seed);
  const SynthDataset low = synth_dataset(proxy, cfg.input_rate_hz, cfg.n_items, cfg.duration_s, data_seed);

  ExperimentReport report;
  report.reference = run_reference(proxy, native);
  for (const ResampleMethod method : cfg.methods) {
    ResampleSpec spec;
    spec.method = method;
    spec.kernel = cfg.kernel;
    spec.snr_db = cfg.snr_db;
    spec.kernel_sigma = cfg.kernel_sigma;
    spec.seed = derive_seed(cfg.seed, to_string(method));
    if (method == ResampleMethod::trainable) {
      if (!report.trained_params) {
        if (trainable_params) {
          report.trained_params = *trainable_params;
        } else {
          auto trained = train_experiment_kernel(cfg, proxy);
          report.trained_params = std::move(trained.params);
          report.train_record = std::move(trained.record);
        }
      }
      spec.params = &*report.trained_params;
    }
    report.methods.push_back(run_experiment(proxy, low, spec));
  }
  return report;
}

}  // namespace hfr
