#include "adapitch/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "adapitch/error.hpp"

namespace adapitch {

namespace {

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("wav: truncated file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  if (!in) throw IoError("wav: truncated file");
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

Waveform load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("wav: cannot open " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw ContractViolation("wav: not a RIFF file: " + path);
  read_u32(in);  // riff size
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw ContractViolation("wav: not a WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::vector<int16_t> pcm;
  while (in.read(tag, 4)) {
    const uint32_t chunk_size = read_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_u16(in);
      channels = read_u16(in);
      sample_rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      if (chunk_size > 16) in.ignore(chunk_size - 16);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw ContractViolation("wav: data chunk before fmt chunk: " + path);
      if (format != 1 || bits != 16)
        throw ContractViolation("wav: unsupported encoding (PCM 16-bit required): " + path);
      if (channels != 1)
        throw ContractViolation("wav: unsupported encoding (mono required, got " +
                                std::to_string(channels) + " channels): " + path);
      pcm.resize(chunk_size / 2);
      in.read(reinterpret_cast<char*>(pcm.data()), chunk_size);
      if (!in) throw IoError("wav: truncated data chunk: " + path);
      break;
    } else {
      in.ignore(chunk_size + (chunk_size & 1));
    }
  }
  if (!have_fmt) throw ContractViolation("wav: missing fmt chunk: " + path);

  Waveform wave;
  wave.sample_rate = static_cast<int>(sample_rate);
  wave.samples.resize(pcm.size());
  for (size_t i = 0; i < pcm.size(); ++i)
    wave.samples[i] = static_cast<float>(pcm[i]) / 32768.0f;
  return wave;
}

void save_wav(const Waveform& wave, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("wav: cannot write " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(wave.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<uint32_t>(wave.sample_rate));
  write_u32(out, static_cast<uint32_t>(wave.sample_rate * 2));
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);
  for (float s : wave.samples) {
    const float clipped = std::fmax(-1.0f, std::fmin(1.0f, s));
    const int16_t q = static_cast<int16_t>(std::lrintf(clipped * 32767.0f));
    write_u16(out, static_cast<uint16_t>(q));
  }
  if (!out) throw IoError("wav: write failed for " + path);
}

}  // namespace adapitch
