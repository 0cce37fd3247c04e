#include "rtfs/wav_io.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "rtfs/errors.h"

namespace rtfs {

namespace {

std::uint32_t rd_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t rd_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back(static_cast<std::uint8_t>(x & 0xff));
  v.push_back(static_cast<std::uint8_t>((x >> 8) & 0xff));
  v.push_back(static_cast<std::uint8_t>((x >> 16) & 0xff));
  v.push_back(static_cast<std::uint8_t>((x >> 24) & 0xff));
}
void wr_u16(std::vector<std::uint8_t>& v, std::uint16_t x) {
  v.push_back(static_cast<std::uint8_t>(x & 0xff));
  v.push_back(static_cast<std::uint8_t>((x >> 8) & 0xff));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("read_wav: cannot open '" + path + "'");
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw format_error("read_wav: '" + path + "' is not a RIFF/WAVE file");
  }

  std::uint16_t audio_format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const char* id = reinterpret_cast<const char*>(buf.data() + pos);
    const std::uint32_t sz = rd_u32(buf.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + sz > buf.size()) throw format_error("read_wav: truncated chunk in '" + path + "'");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (sz < 16) throw format_error("read_wav: malformed fmt chunk");
      audio_format = rd_u16(buf.data() + body);
      channels = rd_u16(buf.data() + body + 2);
      rate = rd_u32(buf.data() + body + 4);
      bits = rd_u16(buf.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = buf.data() + body;
      data_len = sz;
    }
    pos = body + sz + (sz & 1);  // chunks are word-aligned
  }
  if (!have_fmt || data == nullptr) {
    throw format_error("read_wav: missing fmt/data chunk in '" + path + "'");
  }
  if (channels != 1) {
    throw format_error("read_wav: '" + path + "' has " + std::to_string(channels) +
                       " channels; only mono is supported");
  }
  if (rate != static_cast<std::uint32_t>(kSampleRate)) {
    throw format_error("read_wav: '" + path + "' sample rate is " + std::to_string(rate) +
                       " Hz; expected 16000 Hz (no resampling is performed)");
  }

  Waveform out;
  out.sample_rate = static_cast<int>(rate);
  if (audio_format == 1 && bits == 16) {
    const std::size_t n = data_len / 2;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::int16_t s =
          static_cast<std::int16_t>(static_cast<std::uint16_t>(data[2 * i] | (data[2 * i + 1] << 8)));
      out.samples[i] = static_cast<float>(s) / 32768.0f;
    }
  } else if (audio_format == 3 && bits == 32) {
    const std::size_t n = data_len / 4;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u = rd_u32(data + 4 * i);
      float v;
      std::memcpy(&v, &u, 4);
      out.samples[i] = v;
    }
  } else {
    throw format_error("read_wav: '" + path + "' format tag " + std::to_string(audio_format) +
                       " with " + std::to_string(bits) +
                       " bits is unsupported (expected PCM16 or float32)");
  }
  if (out.samples.empty()) throw format_error("read_wav: '" + path + "' has no samples");
  return out;
}

void write_wav(const std::string& path, const Waveform& wave) {
  if (wave.sample_rate != kSampleRate) {
    throw format_error("write_wav: sample rate must be 16000 Hz");
  }
  const std::uint32_t nbytes = static_cast<std::uint32_t>(wave.samples.size() * 4);
  std::vector<std::uint8_t> buf;
  buf.reserve(58 + nbytes);
  buf.insert(buf.end(), {'R', 'I', 'F', 'F'});
  wr_u32(buf, 4 + 8 + 16 + 8 + nbytes);
  buf.insert(buf.end(), {'W', 'A', 'V', 'E'});
  buf.insert(buf.end(), {'f', 'm', 't', ' '});
  wr_u32(buf, 16);
  wr_u16(buf, 3);  // IEEE float
  wr_u16(buf, 1);  // mono
  wr_u32(buf, static_cast<std::uint32_t>(kSampleRate));
  wr_u32(buf, static_cast<std::uint32_t>(kSampleRate) * 4);
  wr_u16(buf, 4);
  wr_u16(buf, 32);
  buf.insert(buf.end(), {'d', 'a', 't', 'a'});
  wr_u32(buf, nbytes);
  for (float v : wave.samples) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    wr_u32(buf, u);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw io_error("write_wav: cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw io_error("write_wav: short write to '" + path + "'");
}

}  // namespace rtfs
