#include "mixbeam/wav.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace mixbeam {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

}  // namespace

Audio read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open WAV file: " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw DataError("not a RIFF file: " + path);
  (void)read_le<std::uint32_t>(in);  // RIFF size
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw DataError("not a WAVE file: " + path);

  FmtChunk fmt;
  bool have_fmt = false;
  std::vector<char> data;

  while (in.read(tag, 4)) {
    const std::uint32_t chunk_size = read_le<std::uint32_t>(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      fmt.format = read_le<std::uint16_t>(in);
      fmt.channels = read_le<std::uint16_t>(in);
      fmt.sample_rate = read_le<std::uint32_t>(in);
      (void)read_le<std::uint32_t>(in);  // byte rate
      (void)read_le<std::uint16_t>(in);  // block align
      fmt.bits_per_sample = read_le<std::uint16_t>(in);
      std::uint32_t consumed = 16;
      if (fmt.format == kFormatExtensible && chunk_size >= 40) {
        (void)read_le<std::uint16_t>(in);  // extension size
        (void)read_le<std::uint16_t>(in);  // valid bits
        (void)read_le<std::uint32_t>(in);  // channel mask
        fmt.format = read_le<std::uint16_t>(in);  // sub-format GUID leads with the format tag
        in.ignore(14);
        consumed = 40;
      }
      if (chunk_size > consumed) in.ignore(chunk_size - consumed);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data.resize(chunk_size);
      in.read(data.data(), chunk_size);
      if (!in) throw DataError("truncated WAV data chunk: " + path);
    } else {
      in.ignore(chunk_size + (chunk_size & 1));  // chunks are word-aligned
      continue;
    }
    if (chunk_size & 1) in.ignore(1);
  }

  if (!have_fmt) throw DataError("WAV file has no fmt chunk: " + path);
  if (data.empty()) throw DataError("WAV file has no data chunk: " + path);
  if (fmt.channels == 0) throw DataError("WAV file has zero channels: " + path);

  const std::size_t bytes_per_sample = fmt.bits_per_sample / 8;
  if (fmt.format == kFormatFloat && fmt.bits_per_sample != 32)
    throw DataError("unsupported float WAV bit depth: " + path);
  if (fmt.format == kFormatPcm && fmt.bits_per_sample != 16)
    throw DataError("unsupported integer WAV bit depth (only 16-bit accepted): " + path);
  if (fmt.format != kFormatFloat && fmt.format != kFormatPcm)
    throw DataError("unsupported WAV sample format: " + path);

  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t num_frames = data.size() / frame_bytes;

  Audio audio(static_cast<double>(fmt.sample_rate), static_cast<Eigen::Index>(num_frames),
              static_cast<Eigen::Index>(fmt.channels));
  const char* p = data.data();
  for (std::size_t i = 0; i < num_frames; ++i) {
    for (std::uint16_t m = 0; m < fmt.channels; ++m) {
      if (fmt.format == kFormatFloat) {
        float v;
        std::memcpy(&v, p, 4);
        audio.samples(static_cast<Eigen::Index>(i), m) = static_cast<double>(v);
        p += 4;
      } else {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        audio.samples(static_cast<Eigen::Index>(i), m) = static_cast<double>(v) / 32768.0;
        p += 2;
      }
    }
  }
  return audio;
}

void write_wav(const std::string& path, const Audio& audio) {
  if (audio.num_channels() <= 0) throw DataError("write_wav: no channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot create WAV file: " + path);

  const std::uint16_t channels = static_cast<std::uint16_t>(audio.num_channels());
  const std::uint32_t sample_rate = static_cast<std::uint32_t>(audio.sample_rate);
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(audio.num_samples() * audio.num_channels() * 4);

  out.write("RIFF", 4);
  write_le<std::uint32_t>(out, 36 + data_bytes);
  out.write("WAVE", 4);

  out.write("fmt ", 4);
  write_le<std::uint32_t>(out, 16);
  write_le<std::uint16_t>(out, kFormatFloat);
  write_le<std::uint16_t>(out, channels);
  write_le<std::uint32_t>(out, sample_rate);
  write_le<std::uint32_t>(out, sample_rate * channels * 4);
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(channels * 4));
  write_le<std::uint16_t>(out, 32);

  out.write("data", 4);
  write_le<std::uint32_t>(out, data_bytes);
  for (Eigen::Index i = 0; i < audio.num_samples(); ++i) {
    for (Eigen::Index m = 0; m < audio.num_channels(); ++m) {
      const float v = static_cast<float>(audio.samples(i, m));
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      write_le<std::uint32_t>(out, bits);
    }
  }
  if (!out) throw DataError("failed writing WAV file: " + path);
}

}  // namespace mixbeam
