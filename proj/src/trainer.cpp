#include "hfr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hfr/optim.hpp"
#include "hfr/resampler.hpp"
#include "hfr/rng.hpp"

namespace hfr {

void TrainConfig::validate() const {
  kernel.validate();
  if (!(learning_rate > 0.0) || !(decay_factor > 0.0) || decay_every_epochs <= 0 || !(grad_clip_norm > 0.0) ||
      early_stop_patience <= 0 || max_epochs <= 0 || batch_size <= 0 || rate_in_hz <= 0 || rate_out_hz <= 0)
    throw std::invalid_argument("training configuration values must be positive");
}

double TrainConfig::learning_rate_at(int epoch) const {
  if (freeze_after_epoch && epoch > *freeze_after_epoch) return 0.0;
  return learning_rate * std::pow(decay_factor, static_cast<double>(epoch / decay_every_epochs));
}

namespace {

Signal fit_length(Signal s, std::size_t n) {
  for (auto& ch : s.channels) ch.resize(n, 0.0);
  return s;
}

}  // namespace

KernelPipeline::KernelPipeline(const FrozenSeparator& model, std::int64_t rate_in_hz, const KernelConfig& kernel)
    : model_(model),
      rate_in_(rate_in_hz),
      kernel_(kernel),
      down_table_(discretize_kernel(kernel, model.rate_hz(), rate_in_hz)) {}

Signal KernelPipeline::regularizer_target(const Signal& mixture) const {
  return resample_conventional(mixture, model_.rate_hz(), kernel_);
}

std::vector<Signal> KernelPipeline::estimates(const Signal& mixture, const KernelTable& table) const {
  const Signal y = resample_with_table(mixture, table);
  std::vector<Signal> out;
  for (const auto& est : model_.separate(y))
    out.push_back(fit_length(resample_with_table(est, down_table_), mixture.length()));
  return out;
}

ItemEvaluation KernelPipeline::evaluate(const SynthItem& item, const Signal& y_winsinc, const KernelTable& table,
                                        bool with_gradient) const {
  const Signal& x = item.mixture;
  if (x.rate_hz != rate_in_) throw std::invalid_argument("training item rate does not match the pipeline");
  const Signal y_tr = resample_with_table(x, table);
  const auto separated = model_.separate(y_tr);
  std::vector<Signal> est;
  est.reserve(separated.size());
  for (const auto& s : separated) est.push_back(fit_length(resample_with_table(s, down_table_), x.length()));

  ItemEvaluation out;
  out.terms = kernel_loss(est, item.sources, y_tr, y_winsinc);
  if (!with_gradient) return out;

  std::vector<Signal> grad_sep;
  grad_sep.reserve(est.size());
  for (std::size_t s = 0; s < est.size(); ++s) {
    Signal g;
    g.rate_hz = model_.rate_hz();
    for (std::size_t c = 0; c < x.num_channels(); ++c) {
      std::vector<double> d(est[s].length());
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = 2.0 * (est[s].channels[c][i] - item.sources[s].channels[c][i]);
      // samples past the downsampled length are padding and carry no gradient
      d.resize(static_cast<std::size_t>(
          output_length(static_cast<std::int64_t>(y_tr.length()), model_.rate_hz(), rate_in_)));
      g.channels.push_back(resample_channel_adjoint(d, down_table_, y_tr.length()));
    }
    grad_sep.push_back(std::move(g));
  }
  Signal grad_y = model_.separate_backward(y_tr, grad_sep);
  for (std::size_t c = 0; c < grad_y.num_channels(); ++c)
    for (std::size_t i = 0; i < grad_y.length(); ++i)
      grad_y.channels[c][i] += 2.0 * (y_tr.channels[c][i] - y_winsinc.channels[c][i]);

  out.grad_taps.assign(table.size(), 0.0);
  for (std::size_t c = 0; c < x.num_channels(); ++c)
    accumulate_tap_gradient(x.channels[c], grad_y.channels[c], table, out.grad_taps);
  return out;
}

std::pair<LossTerms, std::vector<double>> KernelPipeline::loss_and_gradient(const SynthItem& item,
                                                                            const MlpKernelParams& params) const {
  auto fwd = resample_trainable(item.mixture, model_.rate_hz(), params, kernel_);
  const auto eval = evaluate(item, regularizer_target(item.mixture), fwd.cache.table, true);
  return {eval.terms, tap_gradient_to_params(fwd.cache, eval.grad_taps, params)};
}

LossTerms KernelPipeline::loss(const SynthItem& item, const MlpKernelParams& params) const {
  const KernelTable table = export_kernel(params, rate_in_, model_.rate_hz(), kernel_);
  return evaluate(item, regularizer_target(item.mixture), table, false).terms;
}

KernelTrainingSet regularizer_only_set(const KernelTrainingSet& data, std::int64_t rate_out_hz,
                                       const KernelConfig& kernel) {
  auto convert = [&](const std::vector<SynthItem>& items) {
    std::vector<SynthItem> out;
    for (const auto& it : items) {
      SynthItem r;
      r.mixture = it.mixture;
      const Signal up = resample_conventional(it.mixture, rate_out_hz, kernel);
      r.sources.push_back(fit_length(resample_conventional(up, it.mixture.rate_hz, kernel), it.mixture.length()));
      out.push_back(std::move(r));
    }
    return out;
  };
  return {convert(data.train), convert(data.validation)};
}

TrainResult train_kernel(const KernelTrainingSet& data, const FrozenSeparator& model, const TrainConfig& cfg,
                         const MlpKernelParams& init) {
  cfg.validate();
  if (data.train.empty() || data.validation.empty())
    throw std::invalid_argument("training needs non-empty train and validation splits");
  if (model.rate_hz() != cfg.rate_out_hz)
    throw std::invalid_argument("frozen model rate does not match the training output rate");
  if (!init.all_finite()) throw std::invalid_argument("initial kernel parameters are not finite");

  const KernelPipeline pipeline(model, cfg.rate_in_hz, cfg.kernel);
  auto targets = [&](const std::vector<SynthItem>& items) {
    std::vector<Signal> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back(pipeline.regularizer_target(it.mixture));
    return out;
  };
  const auto train_targets = targets(data.train);
  const auto val_targets = targets(data.validation);

  auto check_finite = [](const LossTerms& t, int epoch, const char* where) {
    if (!std::isfinite(t.total())) {
      std::ostringstream msg;
      msg << "non-finite " << where << " loss at epoch " << epoch << " (separation=" << t.separation
          << ", regularizer=" << t.regularizer << ")";
      throw std::runtime_error(msg.str());
    }
  };

  TrainResult result{init, {}};
  MlpKernelParams params = init;
  Adam adam(MlpKernelParams::kCount, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Xoshiro256pp order_rng(derive_seed(cfg.seed, "train-order"));
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cfg.learning_rate_at(epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(order_rng.next() % i);
      std::swap(order[i - 1], order[j]);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const BackpropCache cache = sample_kernel(params, cfg.rate_in_hz, cfg.rate_out_hz, cfg.kernel);
      std::vector<double> grad_taps(cache.table.size(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t k = order[b];
        const auto eval = pipeline.evaluate(data.train[k], train_targets[k], cache.table, true);
        check_finite(eval.terms, epoch, "training");
        rec.train_loss += eval.terms.total();
        rec.sep_term += eval.terms.separation;
        rec.reg_term += eval.terms.regularizer;
        for (std::size_t i = 0; i < grad_taps.size(); ++i) grad_taps[i] += eval.grad_taps[i];
      }
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      for (double& g : grad_taps) g *= inv_batch;
      auto grad = tap_gradient_to_params(cache, grad_taps, params);
      clip_global_norm(grad, cfg.grad_clip_norm);
      adam.step(params.values, grad, lr);
      if (!params.all_finite()) throw std::runtime_error("kernel parameters became non-finite");
    }
    const double inv_n = 1.0 / static_cast<double>(data.train.size());
    rec.train_loss *= inv_n;
    rec.sep_term *= inv_n;
    rec.reg_term *= inv_n;

    const KernelTable table = export_kernel(params, cfg.rate_in_hz, cfg.rate_out_hz, cfg.kernel);
    double val = 0.0;
    for (std::size_t k = 0; k < data.validation.size(); ++k) {
      const auto eval = pipeline.evaluate(data.validation[k], val_targets[k], table, false);
      check_finite(eval.terms, epoch, "validation");
      val += eval.terms.total();
    }
    rec.val_loss = val / static_cast<double>(data.validation.size());
    result.record.epochs.push_back(rec);

    if (result.record.best_epoch < 0 || rec.val_loss < result.record.best_val_loss) {
      result.record.best_epoch = epoch;
      result.record.best_val_loss = rec.val_loss;
      result.params = params;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      result.record.early_stopped = true;
      break;
    }
  }
  return result;
}

}  // namespace hfr
