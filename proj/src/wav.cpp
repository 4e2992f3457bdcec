#include "hfr/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace hfr {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
std::uint16_t read_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}
void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}
void put_tag(std::vector<unsigned char>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

}  // namespace

WavFormat parse_wav_format(std::string_view name) {
  if (name == "pcm16") return WavFormat::pcm16;
  if (name == "pcm24") return WavFormat::pcm24;
  if (name == "float32") return WavFormat::float32;
  throw std::invalid_argument("unknown WAV sample format '" + std::string(name) + "'");
}

std::string_view to_string(WavFormat format) {
  switch (format) {
    case WavFormat::pcm16: return "pcm16";
    case WavFormat::pcm24: return "pcm24";
    case WavFormat::float32: return "float32";
  }
  return "unknown";
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open file");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail(path, "not a RIFF/WAVE file");

  std::uint16_t format_tag = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (available < 16) fail(path, "truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      format_tag = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      if (format_tag == kFormatExtensible) {
        if (available < 26) fail(path, "truncated extensible fmt chunk");
        format_tag = read_u16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = available;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) fail(path, "missing fmt chunk");
  if (data == nullptr) fail(path, "missing data chunk");
  if (channels < 1 || channels > 2) fail(path, "only mono and stereo files are supported");
  if (rate == 0) fail(path, "sample rate is zero");

  WavData out;
  if (format_tag == kFormatPcm && bits == 16)
    out.format = WavFormat::pcm16;
  else if (format_tag == kFormatPcm && bits == 24)
    out.format = WavFormat::pcm24;
  else if (format_tag == kFormatFloat && bits == 32)
    out.format = WavFormat::float32;
  else
    fail(path, "unsupported sample format (tag " + std::to_string(format_tag) + ", " + std::to_string(bits) + " bits)");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  std::vector<std::vector<double>> chans(channels, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (i * channels + c) * width;
      double v = 0.0;
      switch (out.format) {
        case WavFormat::pcm16:
          v = static_cast<std::int16_t>(read_u16(p)) / 32768.0;
          break;
        case WavFormat::pcm24: {
          std::int32_t s = std::int32_t(p[0]) | (std::int32_t(p[1]) << 8) | (std::int32_t(p[2]) << 16);
          if (s & 0x800000) s -= 0x1000000;
          v = s / 8388608.0;
          break;
        }
        case WavFormat::float32:
          v = static_cast<double>(std::bit_cast<float>(read_u32(p)));
          break;
      }
      chans[c][i] = v;
    }
  }
  out.signal.channels = std::move(chans);
  out.signal.rate_hz = rate;
  out.signal.validate();
  return out;
}

void write_wav(const std::filesystem::path& path, const Signal& signal, WavFormat format) {
  signal.validate();
  if (signal.num_channels() > 2) throw std::invalid_argument("WAV output supports mono and stereo only");
  const auto channels = static_cast<std::uint16_t>(signal.num_channels());
  const std::uint16_t bits = format == WavFormat::pcm16 ? 16 : format == WavFormat::pcm24 ? 24 : 32;
  const std::uint16_t block_align = static_cast<std::uint16_t>(channels * bits / 8);
  const std::size_t frames = signal.length();
  const std::uint64_t data_size = static_cast<std::uint64_t>(frames) * block_align;
  if (data_size > 0xFFFFFFF0u) throw std::invalid_argument("signal too long for a RIFF file");

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(36 + data_size));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == WavFormat::float32 ? kFormatFloat : kFormatPcm);
  put_u16(out, channels);
  put_u32(out, static_cast<std::uint32_t>(signal.rate_hz));
  put_u32(out, static_cast<std::uint32_t>(signal.rate_hz) * block_align);
  put_u16(out, block_align);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(data_size));

  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = signal.channels[c][i];
      switch (format) {
        case WavFormat::pcm16: {
          const double s = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
          put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(s)));
          break;
        }
        case WavFormat::pcm24: {
          const auto s = static_cast<std::int32_t>(std::clamp(std::round(v * 8388608.0), -8388608.0, 8388607.0));
          const auto u = static_cast<std::uint32_t>(s);
          out.push_back(static_cast<unsigned char>(u & 0xFF));
          out.push_back(static_cast<unsigned char>((u >> 8) & 0xFF));
          out.push_back(static_cast<unsigned char>((u >> 16) & 0xFF));
          break;
        }
        case WavFormat::float32:
          put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
          break;
      }
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error(path.string() + ": cannot open for writing");
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error(path.string() + ": write failed");
}

}  // namespace hfr
