#pragma once

#include <filesystem>
#include <string_view>

#include "hfr/signal.hpp"

namespace hfr {

enum class WavFormat { pcm16, pcm24, float32 };

WavFormat parse_wav_format(std::string_view name);
std::string_view to_string(WavFormat format);

struct WavData {
  Signal signal;
  WavFormat format = WavFormat::float32;
};

/// Reads a RIFF/WAVE file with 16- or 24-bit PCM or 32-bit IEEE float data
/// (plain or WAVE_FORMAT_EXTENSIBLE), one or two channels. PCM is scaled to
/// [-1, 1) by 1 / 2^(bits-1). Throws std::runtime_error on anything else.
WavData read_wav(const std::filesystem::path& path);

/// Writes interleaved samples. PCM output is rounded and clipped; float32
/// output stores each sample's float conversion, so a float32 file read and
/// written again is bit-identical.
void write_wav(const std::filesystem::path& path, const Signal& signal, WavFormat format);

}  // namespace hfr
