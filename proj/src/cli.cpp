#include "hfr/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hfr/analysis.hpp"
#include "hfr/experiment.hpp"
#include "hfr/fft.hpp"
#include "hfr/kernels.hpp"
#include "hfr/resampler.hpp"
#include "hfr/serialize.hpp"
#include "hfr/trainable.hpp"
#include "hfr/trainer.hpp"
#include "hfr/wav.hpp"

namespace fs = std::filesystem;

namespace hfr {
namespace {

// Files written by the running command. Anything registered is deleted
// unless the command reaches commit().
class OutputFiles {
 public:
  OutputFiles() = default;
  OutputFiles(const OutputFiles&) = delete;
  OutputFiles& operator=(const OutputFiles&) = delete;
  ~OutputFiles() {
    if (committed_) return;
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

  void text(const fs::path& path, const std::string& body) {
    written_.push_back(path);
    write_text_file(path, body);
  }
  void wav(const fs::path& path, const Signal& signal, WavFormat format) {
    written_.push_back(path);
    write_wav(path, signal, format);
  }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> written_;
  bool committed_ = false;
};

// Flags that can also be given in a config file: a flag on the command line
// wins over the file.
template <class T, class U>
void override_from(const CLI::Option* opt, const T& value, U& field) {
  if (opt->count() > 0) field = static_cast<U>(value);
}

MlpKernelParams load_params(const std::string& path) {
  if (path.empty()) throw std::invalid_argument("method 'trainable' needs --params");
  return params_from_json(read_json_file(path));
}

void add_kernel_flags(CLI::App* cmd, KernelConfig& kernel) {
  cmd->add_option("--window-length", kernel.window_length, "Kernel window length L in input samples")
      ->capture_default_str();
  cmd->add_option("--kaiser-alpha", kernel.kaiser_alpha, "Kaiser window shape alpha")->capture_default_str();
  cmd->add_option("--rolloff", kernel.rolloff, "Cutoff multiplier in (0, 1]")->capture_default_str();
}

std::string format_db(double energy) {
  if (energy <= 0.0) return "-inf dB";
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << 10.0 * std::log10(energy) << " dB";
  return s.str();
}

// ---- resample -------------------------------------------------------------

struct ResampleArgs {
  std::string input;
  std::string output;
  std::int64_t rate = 0;
  std::string method = "conventional";
  double snr_db = kDefaultSnrDb;
  double sigma = kDefaultKernelSigma;
  std::uint64_t seed = 0;
  std::string params;
  std::string format;
  KernelConfig kernel;
};

void cmd_resample(const ResampleArgs& a, std::ostream& out) {
  if (a.rate <= 0) throw std::invalid_argument("--rate must be a positive integer");
  ResampleSpec spec;
  spec.method = parse_method(a.method);
  spec.kernel = a.kernel;
  spec.snr_db = a.snr_db;
  spec.kernel_sigma = a.sigma;
  spec.seed = a.seed;
  spec.validate();
  std::optional<MlpKernelParams> params;
  if (spec.method == ResampleMethod::trainable) {
    params = load_params(a.params);
    spec.params = &*params;
  }

  const WavData in = read_wav(a.input);
  const WavFormat format = a.format.empty() ? in.format : parse_wav_format(a.format);
  const Signal y = resample(in.signal, a.rate, spec);

  OutputFiles files;
  files.wav(a.output, y, format);
  files.commit();

  const double split = 0.5 * static_cast<double>(std::min(in.signal.rate_hz, a.rate));
  const double nyquist = 0.5 * static_cast<double>(a.rate);
  out << "method: " << to_string(spec.method) << "\n";
  out << "N = " << in.signal.length() << " at " << in.signal.rate_hz << " Hz\n";
  out << "M = " << y.length() << " at " << y.rate_hz << " Hz\n";
  out << "energy [0, " << split << ") Hz: " << format_db(band_energy(y, 0.0, split)) << "\n";
  if (split < nyquist)
    out << "energy [" << split << ", " << nyquist << "] Hz: " << format_db(band_energy(y, split, nyquist)) << "\n";
}

// ---- kernel ---------------------------------------------------------------

struct KernelArgs {
  std::int64_t rate_in = 8000;
  std::int64_t rate_out = 44100;
  std::string method = "conventional";
  double sigma = kDefaultKernelSigma;
  std::uint64_t seed = 0;
  std::string params;
  int n_fft = 0;
  std::string out_csv;
  std::string out_json;
  std::string out_comparison;
  KernelConfig kernel;
};

int response_size(const KernelTable& table, int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(next_power_of_two(std::max<std::size_t>(table.size(), 4096)));
}

void cmd_kernel(const KernelArgs& a, std::ostream& out) {
  if (a.out_csv.empty() && a.out_json.empty() && a.out_comparison.empty())
    throw std::invalid_argument("nothing to write: give --out-csv, --out-json or --out-comparison");
  a.kernel.validate();
  const ResampleMethod method = parse_method(a.method);
  if (method == ResampleMethod::post_noise)
    throw std::invalid_argument("post-noise does not change the kernel; use conventional");
  if (a.sigma < 0.0) throw std::invalid_argument("--sigma must be nonnegative");

  std::optional<MlpKernelParams> params;
  if (method == ResampleMethod::trainable || !a.params.empty()) params = load_params(a.params);

  const KernelTable clean = discretize_kernel(a.kernel, a.rate_in, a.rate_out);
  const KernelTable noisy = add_kernel_noise(clean, a.sigma, a.seed);
  std::optional<KernelTable> learned;
  if (params) learned = export_kernel(*params, a.rate_in, a.rate_out, a.kernel);

  const KernelTable& chosen = method == ResampleMethod::noisy_kernel ? noisy
                              : method == ResampleMethod::trainable  ? *learned
                                                                     : clean;
  const int n_fft = response_size(chosen, a.n_fft);
  const FrequencyResponse response = kernel_frequency_response(chosen, n_fft);

  std::string comparison;
  if (!a.out_comparison.empty()) {
    const FrequencyResponse r_clean = kernel_frequency_response(clean, n_fft);
    const FrequencyResponse r_noisy = kernel_frequency_response(noisy, n_fft);
    std::optional<FrequencyResponse> r_learned;
    if (learned) r_learned = kernel_frequency_response(*learned, n_fft);
    comparison = response_comparison_csv(r_clean, &r_noisy, r_learned ? &*r_learned : nullptr);
  }

  OutputFiles files;
  if (!a.out_json.empty()) files.text(a.out_json, kernel_table_to_json(chosen).dump() + "\n");
  if (!a.out_csv.empty()) files.text(a.out_csv, frequency_response_csv(response));
  if (!a.out_comparison.empty()) files.text(a.out_comparison, comparison);
  files.commit();

  const double split = 0.5 * static_cast<double>(std::min(a.rate_in, a.rate_out));
  const double nyquist = 0.5 * static_cast<double>(a.rate_out);
  out << "method: " << to_string(method) << "\n";
  out << "phases: " << chosen.phases() << ", taps per phase: " << chosen.taps_per_phase() << "\n";
  out << "n_fft: " << n_fft << "\n";
  out << "mean magnitude [0, " << 0.875 * split << "] Hz: " << mean_magnitude(response, 0.0, 0.875 * split)
      << "\n";
  if (1.5 * split < nyquist)
    out << "mean magnitude [" << 1.5 * split << ", " << nyquist
        << "] Hz: " << mean_magnitude(response, 1.5 * split, nyquist) << "\n";
}

// ---- train / experiment shared flags -------------------------------------

struct ExperimentFlags {
  std::string config;
  std::uint64_t seed = 0;
  std::int64_t input_rate = 0;
  std::int64_t trained_rate = 0;
  int max_epochs = 0;
  double learning_rate = 0.0;
  int batch_size = 0;
  std::size_t train_items = 0;
  std::size_t validation_items = 0;
  double train_duration = 0.0;
  int pretrain_epochs = 0;
  double gate_epsilon = 0.0;

  CLI::Option* o_seed = nullptr;
  CLI::Option* o_input_rate = nullptr;
  CLI::Option* o_trained_rate = nullptr;
  CLI::Option* o_max_epochs = nullptr;
  CLI::Option* o_learning_rate = nullptr;
  CLI::Option* o_batch_size = nullptr;
  CLI::Option* o_train_items = nullptr;
  CLI::Option* o_validation_items = nullptr;
  CLI::Option* o_train_duration = nullptr;
  CLI::Option* o_pretrain_epochs = nullptr;
  CLI::Option* o_gate_epsilon = nullptr;

  void add(CLI::App* cmd) {
    const ExperimentConfig d;
    cmd->add_option("--config", config, "JSON configuration file; flags override its values")
        ->check(CLI::ExistingFile);
    o_seed = cmd->add_option("--seed", seed, "Root seed (default 0)");
    o_input_rate = cmd->add_option("--input-rate", input_rate,
                                   "Low input rate in Hz (default " + std::to_string(d.input_rate_hz) + ")");
    o_trained_rate = cmd->add_option("--trained-rate", trained_rate,
                                     "Rate of the frozen model in Hz (default " + std::to_string(d.trained_rate_hz) +
                                         ")");
    o_max_epochs = cmd->add_option("--max-epochs", max_epochs, "Maximum training epochs (default 100)");
    o_learning_rate = cmd->add_option("--learning-rate", learning_rate,
                                      "Initial Adam learning rate, decayed by 0.98 every 2 epochs (default 0.001)");
    o_batch_size = cmd->add_option("--batch-size", batch_size, "Training batch size (default 4)");
    o_train_items = cmd->add_option("--train-items", train_items,
                                    "Synthetic training items (default " + std::to_string(d.train_items) + ")");
    o_validation_items = cmd->add_option(
        "--validation-items", validation_items,
        "Synthetic validation items (default " + std::to_string(d.validation_items) + ")");
    o_train_duration = cmd->add_option("--train-duration", train_duration,
                                       "Training item length in seconds (default 0.1)");
    o_pretrain_epochs = cmd->add_option(
        "--pretrain-epochs", pretrain_epochs,
        "Regularizer-only epochs before end-to-end training (default " + std::to_string(d.pretrain_epochs) + ")");
    o_gate_epsilon = cmd->add_option("--gate-epsilon", gate_epsilon,
                                     "Proxy gate epsilon (default " + format_double(d.proxy.gate_epsilon) + ")");
  }

  // Config file first, then explicit flags.
  ExperimentConfig resolve(const Json& doc) const {
    ExperimentConfig cfg = doc.is_null() ? ExperimentConfig{} : experiment_config_from_json(doc);
    override_from(o_seed, seed, cfg.seed);
    override_from(o_input_rate, input_rate, cfg.input_rate_hz);
    override_from(o_trained_rate, trained_rate, cfg.trained_rate_hz);
    override_from(o_max_epochs, max_epochs, cfg.train.max_epochs);
    override_from(o_learning_rate, learning_rate, cfg.train.learning_rate);
    override_from(o_batch_size, batch_size, cfg.train.batch_size);
    override_from(o_train_items, train_items, cfg.train_items);
    override_from(o_validation_items, validation_items, cfg.validation_items);
    override_from(o_train_duration, train_duration, cfg.train_duration_s);
    override_from(o_pretrain_epochs, pretrain_epochs, cfg.pretrain_epochs);
    override_from(o_gate_epsilon, gate_epsilon, cfg.proxy.gate_epsilon);
    return cfg;
  }

  Json load() const { return config.empty() ? Json(nullptr) : read_json_file(config); }
};

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  ExperimentFlags flags;
  std::string out_params;
  std::string out_record;
  bool regularizer_only = false;
  CLI::Option* o_regularizer_only = nullptr;
};

void cmd_train(const TrainArgs& a, std::ostream& out) {
  Json doc = a.flags.load();
  bool regularizer_only = false;
  if (doc.is_object() && doc.contains("regularizer_only")) {
    if (!doc.at("regularizer_only").is_boolean())
      throw std::invalid_argument("config key 'regularizer_only' must be a boolean");
    regularizer_only = doc.at("regularizer_only").get<bool>();
    doc.erase("regularizer_only");
  }
  override_from(a.o_regularizer_only, a.regularizer_only, regularizer_only);
  ExperimentConfig cfg = a.flags.resolve(doc);
  if (!(cfg.input_rate_hz < cfg.trained_rate_hz)) throw std::invalid_argument("input rate must be below the trained rate");
  cfg.train.validate();
  if (cfg.train_items == 0 || cfg.validation_items == 0 || !(cfg.train_duration_s > 0.0))
    throw std::invalid_argument("training needs positive item counts and duration");

  const ProxySeparator proxy = experiment_proxy(cfg);
  const TrainResult result = regularizer_only ? train_regularizer_only(cfg, proxy, cfg.train.max_epochs)
                                              : train_experiment_kernel(cfg, proxy);

  OutputFiles files;
  files.text(a.out_params, params_to_json(result.params, cfg.seed, experiment_train_config(cfg)).dump(2) + "\n");
  files.text(a.out_record, train_record_csv(result.record));
  files.commit();

  const auto& ep = result.record.epochs;
  out << "objective: " << (regularizer_only ? "regularizer only" : "end to end through the proxy") << "\n";
  out << "epochs: " << ep.size() << (result.record.early_stopped ? " (early stop)" : "") << "\n";
  if (!ep.empty())
    out << "regularizer term: " << format_double(ep.front().reg_term) << " -> " << format_double(ep.back().reg_term)
        << "\n";
  out << "best epoch: " << result.record.best_epoch << "\n";
  out << "best validation loss: " << format_double(result.record.best_val_loss) << "\n";
}

// ---- experiment -----------------------------------------------------------

struct ExperimentArgs {
  ExperimentFlags flags;
  std::string out_csv;
  std::vector<std::string> methods;
  CLI::Option* o_methods = nullptr;
  std::size_t n_items = 0;
  CLI::Option* o_n_items = nullptr;
  double duration = 0.0;
  CLI::Option* o_duration = nullptr;
  std::string params;
  std::string out_params;
  std::string out_record;
};

void cmd_experiment(const ExperimentArgs& a, std::ostream& out) {
  ExperimentConfig cfg = a.flags.resolve(a.flags.load());
  if (a.o_methods->count() > 0) {
    cfg.methods.clear();
    for (const auto& m : a.methods)
      if (!m.empty()) cfg.methods.push_back(parse_method(m));
  }
  override_from(a.o_n_items, a.n_items, cfg.n_items);
  override_from(a.o_duration, a.duration, cfg.duration_s);
  cfg.validate();

  std::optional<MlpKernelParams> params;
  if (!a.params.empty()) params = load_params(a.params);
  const ExperimentReport report = run_full_experiment(cfg, params);

  OutputFiles files;
  files.text(a.out_csv, sdr_tables_csv(report.methods));
  if (!a.out_params.empty()) {
    if (!report.trained_params) throw std::invalid_argument("--out-params needs the trainable method");
    files.text(a.out_params,
               params_to_json(*report.trained_params, cfg.seed, experiment_train_config(cfg)).dump(2) + "\n");
  }
  if (!a.out_record.empty()) {
    if (!report.train_record) throw std::invalid_argument("--out-record needs a kernel trained by this run");
    files.text(a.out_record, train_record_csv(*report.train_record));
  }
  files.commit();

  auto row = [&](const SdrTable& t) {
    out << std::left << std::setw(14) << t.method << std::right << std::fixed << std::setprecision(2)
        << std::setw(9) << t.mean_sdr_db();
    for (const auto& s : t.sources) out << std::setw(9) << s.mean_sdr_db;
    out << "\n";
  };
  out << "mean SDR (dB) per method, then per source\n";
  row(report.reference);
  for (const auto& t : report.methods) row(t);
  out.unsetf(std::ios::floatfield);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sampling-frequency conversion with windowed-sinc, noisy and trainable kernels", "hfr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hfr 0.1.0");

  const std::string method_help =
      "conventional | post-noise | noisy-kernel | trainable";

  ResampleArgs ra;
  auto* resample = app.add_subcommand("resample", "Resample a WAV file");
  resample->add_option("input", ra.input, "Input WAV (16/24-bit PCM or float32)")->required()->check(CLI::ExistingFile);
  resample->add_option("output", ra.output, "Output WAV")->required();
  resample->add_option("--rate", ra.rate, "Target rate in Hz")->required();
  resample->add_option("--method", ra.method, method_help)->capture_default_str();
  resample->add_option("--snr-db", ra.snr_db, "post-noise: SNR of the added noise in dB (default 20)");
  resample->add_option("--sigma", ra.sigma, "noisy-kernel: tap noise std (default 0.001, sigma^2 = 1e-6)");
  resample->add_option("--seed", ra.seed, "Noise seed")->capture_default_str();
  resample->add_option("--params", ra.params, "trainable: kernel network JSON");
  resample->add_option("--format", ra.format, "Output sample format pcm16 | pcm24 | float32 (default: as input)");
  add_kernel_flags(resample, ra.kernel);

  KernelArgs ka;
  auto* kernel = app.add_subcommand("kernel", "Write kernel taps and frequency responses");
  kernel->add_option("--rate-in", ka.rate_in, "Input rate in Hz")->capture_default_str();
  kernel->add_option("--rate-out", ka.rate_out, "Output rate in Hz")->capture_default_str();
  kernel->add_option("--method", ka.method, "conventional | noisy-kernel | trainable")->capture_default_str();
  kernel->add_option("--sigma", ka.sigma, "noisy-kernel: tap noise std (default 0.001, sigma^2 = 1e-6)");
  kernel->add_option("--seed", ka.seed, "Noise seed")->capture_default_str();
  kernel->add_option("--params", ka.params, "Kernel network JSON (required for trainable)");
  kernel->add_option("--n-fft", ka.n_fft, "DFT size, power of two (default: fits the taps, at least 4096)");
  kernel->add_option("--out-csv", ka.out_csv, "Frequency response CSV (freq_hz, magnitude_db)");
  kernel->add_option("--out-json", ka.out_json, "Kernel table JSON");
  kernel->add_option("--out-comparison", ka.out_comparison,
                     "CSV of conventional, noisy and (with --params) trainable responses");
  add_kernel_flags(kernel, ka.kernel);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train the kernel network on synthetic data");
  ta.flags.add(train);
  train->add_option("--out-params", ta.out_params, "Trained kernel network JSON")->required();
  train->add_option("--out-record", ta.out_record, "Per-epoch record CSV")->required();
  ta.o_regularizer_only = train->add_flag("--regularizer-only", ta.regularizer_only,
                                          "Fit the conventional kernel only (identity model)");

  ExperimentArgs ea;
  auto* experiment = app.add_subcommand("experiment", "Run the proxy separation experiment");
  ea.flags.add(experiment);
  experiment->add_option("--out-csv", ea.out_csv, "SDR table CSV")->required();
  ea.o_methods = experiment->add_option("--methods", ea.methods, "Methods to compare (default: all four); " + method_help)
                     ->expected(0, CLI::detail::expected_max_vector_size);
  ea.o_n_items = experiment->add_option("--n-items", ea.n_items, "Test items (default 8)");
  ea.o_duration = experiment->add_option("--duration", ea.duration, "Test item length in seconds (default 0.5)");
  experiment->add_option("--params", ea.params, "Use this kernel network instead of training one");
  experiment->add_option("--out-params", ea.out_params, "Write the trained kernel network JSON");
  experiment->add_option("--out-record", ea.out_record, "Write the training record CSV");

  const std::string defaults =
      "Kernel defaults: window length L = 48, Kaiser alpha = 4.1, rolloff 1.\n"
      "post-noise SNR 20 dB; noisy-kernel sigma^2 = 1e-6.\n"
      "Training: Adam lr 1e-3 decayed x0.98 every 2 epochs, clip norm 5, patience 10, <= 100 epochs, batch 4.";
  app.footer(defaults);
  for (auto* cmd : {resample, kernel, train, experiment}) cmd->footer(defaults);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*resample) cmd_resample(ra, out);
    if (*kernel) cmd_kernel(ka, out);
    if (*train) cmd_train(ta, out);
    if (*experiment) cmd_experiment(ea, out);
  } catch (const std::exception& e) {
    err << "hfr: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace hfr
