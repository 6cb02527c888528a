#include "pnr/waveform_file.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "pnr/errors.hpp"

namespace pnr {
namespace {

template <typename T>
void put_le(unsigned char* dst, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  std::memcpy(dst, bytes, sizeof(T));
}

template <typename T>
T get_le(const unsigned char* src) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void encode_header(const WaveformHeader& h, unsigned char* buf) {
  std::memcpy(buf, kWaveformMagic, 5);
  put_le<std::uint64_t>(buf + 5, h.sample_period_fs);
  put_le<std::uint32_t>(buf + 13, h.samples_per_trace);
  put_le<std::uint64_t>(buf + 17, h.trace_count);
  put_le<double>(buf + 25, h.nbar_label);
}

}  // namespace

std::optional<double> WaveformHeader::label() const {
  if (std::isnan(nbar_label)) return std::nullopt;
  return nbar_label;
}

std::uint64_t period_to_femtoseconds(double seconds) {
  const double fs = std::round(seconds * 1e15);
  if (!(fs >= 1.0) || !(fs < 1.8e19)) throw InvalidArgument("sample period not representable in femtoseconds");
  return static_cast<std::uint64_t>(fs);
}

WaveformReader::WaveformReader(const std::filesystem::path& path) : path_(path) {
  in_.open(path, std::ios::binary);
  if (!in_) throw ParseError("cannot open waveform file " + path.string(), 0);
  in_.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in_.tellg());
  in_.seekg(0);

  unsigned char buf[kWaveformHeaderSize];
  if (file_size < kWaveformHeaderSize) {
    throw ParseError(path.string() + ": truncated header, file has " + std::to_string(file_size) + " bytes",
                     file_size);
  }
  in_.read(reinterpret_cast<char*>(buf), kWaveformHeaderSize);
  if (std::memcmp(buf, kWaveformMagic, 5) != 0) throw ParseError(path.string() + ": bad magic, expected PNRW1", 0);
  header_.sample_period_fs = get_le<std::uint64_t>(buf + 5);
  header_.samples_per_trace = get_le<std::uint32_t>(buf + 13);
  header_.trace_count = get_le<std::uint64_t>(buf + 17);
  header_.nbar_label = get_le<double>(buf + 25);
  if (header_.sample_period_fs == 0) throw ParseError(path.string() + ": zero sample period", 5);
  if (header_.samples_per_trace == 0) throw ParseError(path.string() + ": zero samples per trace", 13);
  if (!std::isnan(header_.nbar_label) && !(header_.nbar_label >= 0.0 && std::isfinite(header_.nbar_label)))
    throw ParseError(path.string() + ": invalid mean photon number label", 25);
  if (header_.trace_count > (std::numeric_limits<std::uint64_t>::max() / 4u) / header_.samples_per_trace)
    throw ParseError(path.string() + ": trace count overflows the payload size", 17);

  const std::uint64_t expected = kWaveformHeaderSize + header_.payload_bytes();
  if (file_size < expected)
    throw ParseError(path.string() + ": payload truncated, expected " + std::to_string(expected) + " bytes but file has " +
                         std::to_string(file_size),
                     file_size);
  if (file_size > expected)
    throw ParseError(path.string() + ": " + std::to_string(file_size - expected) + " trailing bytes after payload",
                     expected);
}

TraceSet WaveformReader::read(std::size_t first, std::size_t count, double t0) const {
  if (first > size() || count > size() - first) throw InvalidArgument("waveform read range exceeds trace count");
  TraceSet set;
  set.mean_photon_number_label = header_.label();
  set.source = SetSource::measured;
  const std::size_t spt = header_.samples_per_trace;
  const std::uint64_t offset = kWaveformHeaderSize + static_cast<std::uint64_t>(first) * spt * 4u;
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(offset));
  std::vector<unsigned char> buf(spt * 4);
  set.traces.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in_) throw ParseError(path_.string() + ": read failed", offset + static_cast<std::uint64_t>(r) * spt * 4u);
    Trace tr;
    tr.sample_period = header_.sample_period();
    tr.t0 = t0;
    tr.id = first + r;
    tr.samples.resize(spt);
    for (std::size_t i = 0; i < spt; ++i) tr.samples[i] = static_cast<double>(get_le<float>(buf.data() + 4 * i));
    set.traces.push_back(std::move(tr));
  }
  return set;
}

WaveformWriter::WaveformWriter(const std::filesystem::path& path, double sample_period,
                               std::uint32_t samples_per_trace, std::optional<double> nbar_label)
    : path_(path) {
  if (samples_per_trace == 0) throw InvalidArgument("samples_per_trace must be positive");
  header_.sample_period_fs = period_to_femtoseconds(sample_period);
  header_.samples_per_trace = samples_per_trace;
  header_.trace_count = 0;
  header_.nbar_label = nbar_label ? *nbar_label : std::numeric_limits<double>::quiet_NaN();
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error("cannot create waveform file " + path.string());
  unsigned char buf[kWaveformHeaderSize];
  encode_header(header_, buf);
  out_.write(reinterpret_cast<const char*>(buf), kWaveformHeaderSize);
}

WaveformWriter::~WaveformWriter() {
  try {
    close();
  } catch (...) {
  }
}

void WaveformWriter::append(const Trace& trace) {
  if (closed_) throw InvalidArgument("waveform writer already closed");
  if (trace.size() != header_.samples_per_trace) throw InvalidArgument("trace length does not match the file");
  if (period_to_femtoseconds(trace.sample_period) != header_.sample_period_fs)
    throw InvalidArgument("trace sample period does not match the file");
  std::vector<unsigned char> buf(trace.size() * 4);
  for (std::size_t i = 0; i < trace.size(); ++i) put_le<float>(buf.data() + 4 * i, static_cast<float>(trace.samples[i]));
  out_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  ++count_;
}

void WaveformWriter::append(const TraceSet& set) {
  for (const auto& tr : set.traces) append(tr);
}

void WaveformWriter::close() {
  if (closed_) return;
  closed_ = true;
  header_.trace_count = count_;
  unsigned char buf[kWaveformHeaderSize];
  encode_header(header_, buf);
  out_.seekp(0);
  out_.write(reinterpret_cast<const char*>(buf), kWaveformHeaderSize);
  out_.close();
  if (!out_) throw Error("failed writing waveform file " + path_.string());
}

void write_waveform_file(const std::filesystem::path& path, const TraceSet& set) {
  if (set.empty()) throw InvalidArgument("refusing to write an empty trace set");
  set.validate();
  WaveformWriter w(path, set.traces.front().sample_period, static_cast<std::uint32_t>(set.samples_per_trace()),
                   set.mean_photon_number_label);
  w.append(set);
  w.close();
}

TraceSet read_waveform_file(const std::filesystem::path& path) { return WaveformReader(path).read_all(); }

}  // namespace pnr
