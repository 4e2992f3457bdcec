#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfr/analysis.hpp"
#include "hfr/experiment.hpp"
#include "hfr/kernels.hpp"
#include "hfr/mlp_kernel.hpp"
#include "hfr/trainer.hpp"

namespace hfr {

using Json = nlohmann::json;

/// Shortest decimal that round-trips the double ('.' decimal separator).
std::string format_double(double v);

// Kernel table document:
// {source_rate_hz, target_rate_hz, phases, taps_per_phase, center_offset, taps}
// with taps row-major [phase][tap].
Json kernel_table_to_json(const KernelTable& table);
KernelTable kernel_table_from_json(const Json& doc);

// Kernel network document: architecture [1,32,32,1], activations, layer_norm,
// window_length, weights/biases as nested arrays, seed, train_config.
Json params_to_json(const MlpKernelParams& params, std::uint64_t seed = 0,
                    const std::optional<TrainConfig>& train_config = std::nullopt);
MlpKernelParams params_from_json(const Json& doc);

Json train_config_to_json(const TrainConfig& cfg);
/// Overlays the keys present in doc onto base; unknown keys are rejected.
TrainConfig train_config_from_json(const Json& doc, TrainConfig base = {});

/// Flat document mirroring ExperimentConfig; "methods" is a list of method
/// names and "train" holds the optimizer keys of a training configuration.
Json experiment_config_to_json(const ExperimentConfig& cfg);
/// Overlays the keys present in doc onto base; unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const Json& doc, ExperimentConfig base = {});

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// CSV writers: header row, comma separated, LF line endings.
std::string train_record_csv(const TrainRecord& record);
std::string sdr_tables_csv(std::span<const SdrTable> tables);
std::string frequency_response_csv(const FrequencyResponse& response);
/// freq_hz, conventional_db, noisy_db, trainable_db; absent columns are left empty.
std::string response_comparison_csv(const FrequencyResponse& conventional, const FrequencyResponse* noisy,
                                    const FrequencyResponse* trainable);
std::string spectral_report_csv(const SpectralReport& report);
std::string spectrogram_csv(const Spectrogram& spec);

}  // namespace hfr
