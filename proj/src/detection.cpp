#include "pairsim/detection.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace pairsim {

namespace {

template <typename T>
void write_le(std::ostream& out, T v) {
  // Host is little-endian on every supported target.
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_le(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

std::vector<PhotonEvent> apply_losses(const std::vector<PhotonEvent>& events,
                                      const SourceConfig& config,
                                      SplitMix64& rng) {
  const double p = config.fiber_coupling_efficiency *
                   config.optics_transmission *
                   config.detector_quantum_efficiency;
  std::vector<PhotonEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    if (uniform01(rng) < p) out.push_back(e);
  }
  return out;
}

std::vector<PhotonEvent> chopper_gate(const std::vector<PhotonEvent>& events,
                                      const SourceConfig& config) {
  if (!(config.chopper_frequency > 0.0)) {
    throw ValidationError("chopper_frequency must be strictly positive");
  }
  const double period = 1.0 / config.chopper_frequency;
  const double open = config.chopper_duty_cycle * period;
  std::vector<PhotonEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    if (std::fmod(e.time, period) < open) out.push_back(e);
  }
  return out;
}

TimeTagStream quantize(const std::vector<PhotonEvent>& events,
                       const SourceConfig& config, double duration) {
  if (!(config.tagger_resolution > 0.0)) {
    throw ValidationError("tagger_resolution must be strictly positive");
  }
  TimeTagStream stream;
  stream.resolution = config.tagger_resolution;
  stream.duration = duration;
  stream.live_time = config.chopper_duty_cycle * duration;
  for (const auto& e : events) {
    if (e.time < 0.0 || e.time >= duration) continue;
    const auto tag =
        static_cast<std::int64_t>(std::floor(e.time / stream.resolution));
    stream.tags[e.channel].push_back(tag);
  }
  for (auto& channel : stream.tags) {
    std::sort(channel.begin(), channel.end());
  }
  return stream;
}

void TimeTagStream::save_binary(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write("PTAG", 4);
  write_le<std::uint16_t>(out, 1);
  write_le<std::uint64_t>(out,
                          static_cast<std::uint64_t>(std::llround(resolution * 1e12)));
  write_le<std::uint64_t>(out,
                          static_cast<std::uint64_t>(std::llround(duration * 1e12)));
  for (std::uint8_t ch = 0; ch < 2; ++ch) {
    write_le<std::uint8_t>(out, ch);
    write_le<std::uint64_t>(out, tags[ch].size());
    for (std::int64_t t : tags[ch]) {
      write_le<std::uint64_t>(out, static_cast<std::uint64_t>(t));
    }
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

TimeTagStream TimeTagStream::load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "PTAG", 4) != 0) {
    throw ValidationError("not a PTAG file: " + path);
  }
  const auto version = read_le<std::uint16_t>(in);
  if (version != 1) {
    throw ValidationError("unsupported PTAG version " +
                             std::to_string(version));
  }
  TimeTagStream stream;
  stream.resolution = static_cast<double>(read_le<std::uint64_t>(in)) * 1e-12;
  stream.duration = static_cast<double>(read_le<std::uint64_t>(in)) * 1e-12;
  stream.live_time = stream.duration;  // duty correction is not in the format
  for (int block = 0; block < 2; ++block) {
    const auto ch = read_le<std::uint8_t>(in);
    if (ch > 1) throw ValidationError("bad channel id in " + path);
    const auto count = read_le<std::uint64_t>(in);
    auto& tags = stream.tags[ch];
    tags.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      tags[i] = static_cast<std::int64_t>(read_le<std::uint64_t>(in));
    }
  }
  if (!in) throw ValidationError("truncated PTAG file: " + path);
  return stream;
}

void TimeTagStream::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "channel,timestamp\n";
  for (int ch = 0; ch < 2; ++ch) {
    for (std::int64_t t : tags[ch]) {
      out << ch << ',' << t << '\n';
    }
  }
}

}  // namespace pairsim
