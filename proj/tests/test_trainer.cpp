#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "hfr/experiment.hpp"
#include "hfr/optim.hpp"
#include "hfr/proxy.hpp"
#include "hfr/separator.hpp"
#include "hfr/trainer.hpp"
#include "pipeline_check.hpp"

using namespace hfr;

namespace {

KernelTrainingSet small_set(std::uint64_t seed, std::size_t n_train = 4, std::size_t n_val = 2) {
  ProxyOptions opts;
  opts.source_span_hz = 3600.0;
  const ProxySeparator proxy = build_proxy(44100, 2, seed, opts);
  KernelTrainingSet data;
  data.train = synth_dataset(proxy, 8000, n_train, 0.05, seed + 1).items;
  data.validation = synth_dataset(proxy, 8000, n_val, 0.05, seed + 2).items;
  return data;
}

}  // namespace

TEST_CASE("global norm clipping") {
  std::vector<double> g{30.0, 40.0};  // norm 50
  CHECK(clip_global_norm(g, 5.0) == doctest::Approx(50.0));
  CHECK(g[0] == doctest::Approx(3.0));
  CHECK(g[1] == doctest::Approx(4.0));
  CHECK(std::hypot(g[0], g[1]) == doctest::Approx(5.0));

  std::vector<double> small{0.3, 0.4};
  CHECK(clip_global_norm(small, 5.0) == doctest::Approx(0.5));
  CHECK(small == std::vector<double>{0.3, 0.4});
}

TEST_CASE("adam steps") {
  // first step moves every coordinate by lr * g / (|g| + eps)
  Adam adam(3);
  std::vector<double> p{1.0, -2.0, 0.5};
  const std::vector<double> g{0.2, -3.0, 0.0};
  adam.step(p, g, 0.1);
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 0.2 / (0.2 + 1e-8)).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.1 * 3.0 / (3.0 + 1e-8)).epsilon(1e-14));
  CHECK(p[2] == 0.5);
  CHECK(adam.steps() == 1);

  // hand-rolled second step
  Adam b(1);
  std::vector<double> q{0.0};
  b.step(q, std::vector<double>{1.0}, 0.01);
  const double q1 = q[0];
  b.step(q, std::vector<double>{-0.5}, 0.01);
  const double m = 0.9 * 0.1 * 1.0 + 0.1 * -0.5;
  const double v = 0.999 * 0.001 * 1.0 + 0.001 * 0.25;
  const double m_hat = m / (1.0 - 0.81), v_hat = v / (1.0 - 0.999 * 0.999);
  CHECK(q[0] == doctest::Approx(q1 - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8)).epsilon(1e-12));

  // lr = 0 leaves parameters untouched
  std::vector<double> r{1.0};
  b.step(r, std::vector<double>{5.0}, 0.0);
  CHECK(r[0] == 1.0);
}

TEST_CASE("train config defaults and schedule") {
  const TrainConfig c;
  CHECK(c.learning_rate == 1e-3);
  CHECK(c.decay_factor == 0.98);
  CHECK(c.grad_clip_norm == 5.0);
  CHECK(c.early_stop_patience == 10);
  CHECK(c.max_epochs == 100);
  CHECK(c.batch_size == 4);
  CHECK(c.learning_rate_at(0) == 1e-3);
  CHECK(c.learning_rate_at(1) == 1e-3);
  CHECK(c.learning_rate_at(2) == doctest::Approx(0.98e-3).epsilon(1e-15));
  CHECK(c.learning_rate_at(7) == doctest::Approx(1e-3 * std::pow(0.98, 3)).epsilon(1e-15));

  TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS(bad.validate());
  bad = {};
  bad.learning_rate = -1.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("end-to-end gradient matches central differences") {
  for (std::uint64_t seed : {11u, 12u}) {
    const auto r = testutil::pipeline_gradient_check(seed, 128, 8);
    CHECK(r.max_rel_err <= 1e-4);
  }
}

TEST_CASE("training is deterministic and keeps the proxy frozen") {
  ProxyOptions opts;
  opts.source_span_hz = 3600.0;
  const ProxySeparator proxy = build_proxy(44100, 2, 5, opts);
  const ProxySeparator copy = proxy;
  const KernelTrainingSet data = small_set(5);
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.seed = 9;
  const auto init = MlpKernelParams::init(1);
  const TrainResult a = train_kernel(data, proxy, cfg, init);
  const TrainResult b = train_kernel(data, proxy, cfg, init);
  CHECK(a.record == b.record);
  CHECK(a.params == b.params);
  CHECK(proxy == copy);
  CHECK(a.record.epochs.size() == 3);
  for (std::size_t e = 0; e < a.record.epochs.size(); ++e) {
    const auto& r = a.record.epochs[e];
    CHECK(r.epoch == static_cast<int>(e));
    CHECK(r.train_loss == doctest::Approx(r.sep_term + r.reg_term).epsilon(1e-12));
    CHECK(r.lr == cfg.learning_rate_at(r.epoch));
  }

  cfg.seed = 10;
  CHECK_FALSE(train_kernel(data, proxy, cfg, init).record == a.record);
}

TEST_CASE("early stopping after the learning rate freezes") {
  const KernelTrainingSet data = regularizer_only_set(small_set(6, 4, 2), 44100);
  const IdentitySeparator identity(44100);
  TrainConfig cfg;
  cfg.freeze_after_epoch = 3;
  const TrainResult r = train_kernel(data, identity, cfg, MlpKernelParams::init(2));
  CHECK(r.record.early_stopped);
  CHECK(r.record.best_epoch == 3);
  CHECK(r.record.epochs.back().epoch == 13);
  for (const auto& e : r.record.epochs)
    if (e.epoch >= r.record.best_epoch) CHECK(r.record.best_val_loss <= e.val_loss);
}

TEST_CASE("regularizer-only training shrinks the regularizer") {
  const KernelTrainingSet data = regularizer_only_set(small_set(7, 4, 2), 44100);
  const IdentitySeparator identity(44100);
  TrainConfig cfg;
  cfg.max_epochs = 20;
  const TrainResult r = train_kernel(data, identity, cfg, MlpKernelParams::init(3));
  CHECK(r.record.epochs.back().reg_term < 0.5 * r.record.epochs.front().reg_term);
  // the returned parameters are the best validation epoch's
  const KernelPipeline pipe(identity, 8000, {});
  double val = 0.0;
  for (const auto& it : data.validation) val += pipe.loss(it, r.params).total();
  CHECK(val / data.validation.size() == doctest::Approx(r.record.best_val_loss).epsilon(1e-9));
}

TEST_CASE("training errors") {
  const IdentitySeparator identity(44100);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  CHECK_THROWS_AS(train_kernel({}, identity, cfg, MlpKernelParams::init(1)), std::invalid_argument);

  KernelTrainingSet data = regularizer_only_set(small_set(8, 1, 1), 44100);
  const IdentitySeparator wrong_rate(48000);
  CHECK_THROWS(train_kernel(data, wrong_rate, cfg, MlpKernelParams::init(1)));

  data.train[0].mixture.channels[0][3] = 1e200;
  CHECK_THROWS_AS(train_kernel(data, identity, cfg, MlpKernelParams::init(1)), std::runtime_error);
}

TEST_CASE("pipeline estimates keep the input length") {
  const KernelTrainingSet data = small_set(9, 1, 1);
  ProxyOptions opts;
  opts.source_span_hz = 3600.0;
  const ProxySeparator proxy = build_proxy(44100, 2, 9, opts);
  const KernelPipeline pipe(proxy, 8000, {});
  const auto est = pipe.estimates(data.train[0].mixture, discretize_kernel({}, 8000, 44100));
  REQUIRE(est.size() == 2);
  for (const auto& e : est) CHECK(e.length() == data.train[0].mixture.length());
}
