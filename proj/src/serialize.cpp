#include "hfr/serialize.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hfr {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Json kernel_table_to_json(const KernelTable& table) {
  Json doc;
  doc["source_rate_hz"] = table.source_rate_hz();
  doc["target_rate_hz"] = table.target_rate_hz();
  doc["phases"] = table.phases();
  doc["taps_per_phase"] = table.taps_per_phase();
  doc["center_offset"] = table.center_offset();
  doc["taps"] = std::vector<double>(table.taps().begin(), table.taps().end());
  return doc;
}

KernelTable kernel_table_from_json(const Json& doc) {
  try {
    KernelTable table(doc.at("source_rate_hz").get<std::int64_t>(), doc.at("target_rate_hz").get<std::int64_t>(),
                      doc.at("taps_per_phase").get<int>(), doc.at("center_offset").get<int>(),
                      doc.at("taps").get<std::vector<double>>());
    if (doc.contains("phases") && doc.at("phases").get<int>() != table.phases())
      throw std::invalid_argument("phase count does not match the rate pair");
    return table;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed kernel table document: ") + e.what());
  }
}

namespace {

constexpr int H = MlpKernelParams::kHidden;

std::vector<double> block(const MlpKernelParams& p, std::size_t start, std::size_t n) {
  return {p.values.begin() + static_cast<std::ptrdiff_t>(start),
          p.values.begin() + static_cast<std::ptrdiff_t>(start + n)};
}

std::vector<std::vector<double>> matrix(const MlpKernelParams& p, std::size_t start, int rows, int cols) {
  std::vector<std::vector<double>> m(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) m[static_cast<std::size_t>(r)] = block(p, start + static_cast<std::size_t>(r * cols), static_cast<std::size_t>(cols));
  return m;
}

void load_block(MlpKernelParams& p, const Json& arr, std::size_t start, std::size_t n, const char* name) {
  const auto v = arr.get<std::vector<double>>();
  if (v.size() != n) throw std::invalid_argument(std::string("parameter block '") + name + "' has the wrong size");
  std::copy(v.begin(), v.end(), p.values.begin() + static_cast<std::ptrdiff_t>(start));
}

void load_matrix(MlpKernelParams& p, const Json& arr, std::size_t start, int rows, int cols, const char* name) {
  const auto m = arr.get<std::vector<std::vector<double>>>();
  if (m.size() != static_cast<std::size_t>(rows))
    throw std::invalid_argument(std::string("parameter matrix '") + name + "' has the wrong shape");
  for (int r = 0; r < rows; ++r) {
    if (m[static_cast<std::size_t>(r)].size() != static_cast<std::size_t>(cols))
      throw std::invalid_argument(std::string("parameter matrix '") + name + "' has the wrong shape");
    std::copy(m[static_cast<std::size_t>(r)].begin(), m[static_cast<std::size_t>(r)].end(),
              p.values.begin() + static_cast<std::ptrdiff_t>(start + static_cast<std::size_t>(r * cols)));
  }
}

}  // namespace

Json params_to_json(const MlpKernelParams& params, std::uint64_t seed, const std::optional<TrainConfig>& train_config) {
  using P = MlpKernelParams;
  Json doc;
  doc["architecture"] = {1, H, H, 1};
  doc["activations"] = {"relu", "relu", "linear"};
  doc["layer_norm"] = true;
  doc["layer_norm_eps"] = P::kLayerNormEps;
  doc["input_scaling"] = "t * rate_in_hz";
  doc["window_length"] = params.window_length;
  Json w;
  w["w1"] = matrix(params, P::kW1, H, 1);
  w["b1"] = block(params, P::kB1, H);
  w["ln1_gain"] = block(params, P::kGain1, H);
  w["ln1_offset"] = block(params, P::kOffset1, H);
  w["w2"] = matrix(params, P::kW2, H, H);
  w["b2"] = block(params, P::kB2, H);
  w["ln2_gain"] = block(params, P::kGain2, H);
  w["ln2_offset"] = block(params, P::kOffset2, H);
  w["w3"] = matrix(params, P::kW3, 1, H);
  w["b3"] = block(params, P::kB3, 1);
  doc["weights"] = std::move(w);
  doc["seed"] = seed;
  doc["train_config"] = train_config ? train_config_to_json(*train_config) : Json(nullptr);
  return doc;
}

MlpKernelParams params_from_json(const Json& doc) {
  using P = MlpKernelParams;
  try {
    if (doc.at("architecture") != Json({1, H, H, 1}))
      throw std::invalid_argument("unsupported kernel network architecture");
    MlpKernelParams p;
    p.window_length = doc.value("window_length", 48);
    const Json& w = doc.at("weights");
    load_matrix(p, w.at("w1"), P::kW1, H, 1, "w1");
    load_block(p, w.at("b1"), P::kB1, H, "b1");
    load_block(p, w.at("ln1_gain"), P::kGain1, H, "ln1_gain");
    load_block(p, w.at("ln1_offset"), P::kOffset1, H, "ln1_offset");
    load_matrix(p, w.at("w2"), P::kW2, H, H, "w2");
    load_block(p, w.at("b2"), P::kB2, H, "b2");
    load_block(p, w.at("ln2_gain"), P::kGain2, H, "ln2_gain");
    load_block(p, w.at("ln2_offset"), P::kOffset2, H, "ln2_offset");
    load_matrix(p, w.at("w3"), P::kW3, 1, H, "w3");
    load_block(p, w.at("b3"), P::kB3, 1, "b3");
    if (!p.all_finite()) throw std::invalid_argument("kernel network parameters are not finite");
    return p;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed kernel network document: ") + e.what());
  }
}

Json train_config_to_json(const TrainConfig& cfg) {
  Json doc;
  doc["learning_rate"] = cfg.learning_rate;
  doc["decay_factor"] = cfg.decay_factor;
  doc["decay_every_epochs"] = cfg.decay_every_epochs;
  doc["grad_clip_norm"] = cfg.grad_clip_norm;
  doc["early_stop_patience"] = cfg.early_stop_patience;
  doc["max_epochs"] = cfg.max_epochs;
  doc["batch_size"] = cfg.batch_size;
  doc["seed"] = cfg.seed;
  doc["rate_in_hz"] = cfg.rate_in_hz;
  doc["rate_out_hz"] = cfg.rate_out_hz;
  doc["adam_beta1"] = cfg.adam_beta1;
  doc["adam_beta2"] = cfg.adam_beta2;
  doc["adam_eps"] = cfg.adam_eps;
  doc["window_length"] = cfg.kernel.window_length;
  doc["kaiser_alpha"] = cfg.kernel.kaiser_alpha;
  doc["rolloff"] = cfg.kernel.rolloff;
  return doc;
}

TrainConfig train_config_from_json(const Json& doc, TrainConfig base) {
  static const std::set<std::string> known = {
      "learning_rate", "decay_factor", "decay_every_epochs", "grad_clip_norm", "early_stop_patience",
      "max_epochs",    "batch_size",   "seed",               "rate_in_hz",     "rate_out_hz",
      "adam_beta1",    "adam_beta2",   "adam_eps",           "window_length",  "kaiser_alpha",
      "rolloff"};
  if (!doc.is_object()) throw std::invalid_argument("training configuration must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (!known.contains(key)) throw std::invalid_argument("unknown training configuration key '" + key + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("learning_rate", base.learning_rate);
    get("decay_factor", base.decay_factor);
    get("decay_every_epochs", base.decay_every_epochs);
    get("grad_clip_norm", base.grad_clip_norm);
    get("early_stop_patience", base.early_stop_patience);
    get("max_epochs", base.max_epochs);
    get("batch_size", base.batch_size);
    get("seed", base.seed);
    get("rate_in_hz", base.rate_in_hz);
    get("rate_out_hz", base.rate_out_hz);
    get("adam_beta1", base.adam_beta1);
    get("adam_beta2", base.adam_beta2);
    get("adam_eps", base.adam_eps);
    get("window_length", base.kernel.window_length);
    get("kaiser_alpha", base.kernel.kaiser_alpha);
    get("rolloff", base.kernel.rolloff);
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed training configuration: ") + e.what());
  }
  base.validate();
  return base;
}

Json experiment_config_to_json(const ExperimentConfig& cfg) {
  Json doc;
  doc["trained_rate_hz"] = cfg.trained_rate_hz;
  doc["input_rate_hz"] = cfg.input_rate_hz;
  doc["n_sources"] = cfg.n_sources;
  doc["n_items"] = cfg.n_items;
  doc["duration_s"] = cfg.duration_s;
  doc["seed"] = cfg.seed;
  Json methods = Json::array();
  for (const ResampleMethod m : cfg.methods) methods.push_back(std::string(to_string(m)));
  doc["methods"] = std::move(methods);
  doc["window_length"] = cfg.kernel.window_length;
  doc["kaiser_alpha"] = cfg.kernel.kaiser_alpha;
  doc["rolloff"] = cfg.kernel.rolloff;
  doc["snr_db"] = cfg.snr_db;
  doc["kernel_sigma"] = cfg.kernel_sigma;
  doc["gate_epsilon"] = cfg.proxy.gate_epsilon;
  doc["source_span_hz"] = cfg.proxy.source_span_hz;
  doc["train_items"] = cfg.train_items;
  doc["validation_items"] = cfg.validation_items;
  doc["train_duration_s"] = cfg.train_duration_s;
  doc["pretrain_epochs"] = cfg.pretrain_epochs;
  Json train = train_config_to_json(cfg.train);
  for (const char* key : {"seed", "rate_in_hz", "rate_out_hz", "window_length", "kaiser_alpha", "rolloff"})
    train.erase(key);
  doc["train"] = std::move(train);
  return doc;
}

ExperimentConfig experiment_config_from_json(const Json& doc, ExperimentConfig base) {
  static const std::set<std::string> known = {
      "trained_rate_hz", "input_rate_hz",  "n_sources",    "n_items",          "duration_s",
      "seed",            "methods",        "window_length", "kaiser_alpha",    "rolloff",
      "snr_db",          "kernel_sigma",   "gate_epsilon", "source_span_hz",   "train_items",
      "validation_items", "train_duration_s", "pretrain_epochs", "train"};
  if (!doc.is_object()) throw std::invalid_argument("experiment configuration must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (!known.contains(key)) throw std::invalid_argument("unknown experiment configuration key '" + key + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("trained_rate_hz", base.trained_rate_hz);
    get("input_rate_hz", base.input_rate_hz);
    get("n_sources", base.n_sources);
    get("n_items", base.n_items);
    get("duration_s", base.duration_s);
    get("seed", base.seed);
    if (doc.contains("methods")) {
      base.methods.clear();
      for (const auto& name : doc.at("methods")) base.methods.push_back(parse_method(name.get<std::string>()));
    }
    get("window_length", base.kernel.window_length);
    get("kaiser_alpha", base.kernel.kaiser_alpha);
    get("rolloff", base.kernel.rolloff);
    get("snr_db", base.snr_db);
    get("kernel_sigma", base.kernel_sigma);
    get("gate_epsilon", base.proxy.gate_epsilon);
    get("source_span_hz", base.proxy.source_span_hz);
    get("train_items", base.train_items);
    get("validation_items", base.validation_items);
    get("train_duration_s", base.train_duration_s);
    get("pretrain_epochs", base.pretrain_epochs);
    if (doc.contains("train")) base.train = train_config_from_json(doc.at("train"), base.train);
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed experiment configuration: ") + e.what());
  }
  base.validate();
  return base;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw std::invalid_argument(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::string train_record_csv(const TrainRecord& record) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,sep_term,reg_term,lr\n";
  for (const auto& e : record.epochs)
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss) << ','
        << format_double(e.sep_term) << ',' << format_double(e.reg_term) << ',' << format_double(e.lr) << '\n';
  return out.str();
}

std::string sdr_tables_csv(std::span<const SdrTable> tables) {
  std::ostringstream out;
  out << "method,source,mean_sdr_db,stderr_db,n_items\n";
  for (const auto& t : tables)
    for (std::size_t s = 0; s < t.sources.size(); ++s)
      out << t.method << ',' << s << ',' << format_double(t.sources[s].mean_sdr_db) << ','
          << format_double(t.sources[s].stderr_db) << ',' << t.sources[s].n_items << '\n';
  return out.str();
}

std::string frequency_response_csv(const FrequencyResponse& response) {
  std::ostringstream out;
  out << "freq_hz,magnitude_db\n";
  for (std::size_t k = 0; k < response.freqs_hz.size(); ++k)
    out << format_double(response.freqs_hz[k]) << ',' << format_double(response.magnitude_db[k]) << '\n';
  return out.str();
}

std::string response_comparison_csv(const FrequencyResponse& conventional, const FrequencyResponse* noisy,
                                    const FrequencyResponse* trainable) {
  auto check = [&](const FrequencyResponse* r) {
    if (r && r->freqs_hz != conventional.freqs_hz)
      throw std::invalid_argument("frequency responses use different frequency grids");
  };
  check(noisy);
  check(trainable);
  std::ostringstream out;
  out << "freq_hz,conventional_db,noisy_db,trainable_db\n";
  for (std::size_t k = 0; k < conventional.freqs_hz.size(); ++k) {
    out << format_double(conventional.freqs_hz[k]) << ',' << format_double(conventional.magnitude_db[k]) << ',';
    if (noisy) out << format_double(noisy->magnitude_db[k]);
    out << ',';
    if (trainable) out << format_double(trainable->magnitude_db[k]);
    out << '\n';
  }
  return out.str();
}

std::string spectral_report_csv(const SpectralReport& report) {
  std::ostringstream out;
  out << "f_lo_hz,f_hi_hz,energy,energy_db\n";
  for (std::size_t b = 0; b < report.band_energy.size(); ++b)
    out << format_double(report.band_edges_hz[b]) << ',' << format_double(report.band_edges_hz[b + 1]) << ','
        << format_double(report.band_energy[b]) << ',' << format_double(report.band_energy_db[b]) << '\n';
  return out.str();
}

std::string spectrogram_csv(const Spectrogram& spec) {
  std::ostringstream out;
  out << "frame,time_s,bin,freq_hz,magnitude_db\n";
  for (std::size_t f = 0; f < spec.frames(); ++f)
    for (std::size_t k = 0; k < spec.bins(); ++k)
      out << f << ',' << format_double(static_cast<double>(f) / spec.frame_rate_hz) << ',' << k << ','
          << format_double(static_cast<double>(k) * spec.bin_hz) << ',' << format_double(spec.magnitude_db[f][k])
          << '\n';
  return out.str();
}

}  // namespace hfr
