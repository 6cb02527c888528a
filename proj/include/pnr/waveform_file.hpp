#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>

#include "pnr/waveform.hpp"

namespace pnr {

// Little-endian layout:
//   0  char[5]  "PNRW1"
//   5  u64      sample period in femtoseconds
//   13 u32      samples per trace
//   17 u64      trace count
//   25 f64      mean photon number label, NaN when unlabeled
//   33 f32[]    trace_count * samples_per_trace volts, trace-major
inline constexpr char kWaveformMagic[5] = {'P', 'N', 'R', 'W', '1'};
inline constexpr std::size_t kWaveformHeaderSize = 33;

struct WaveformHeader {
  std::uint64_t sample_period_fs = 0;
  std::uint32_t samples_per_trace = 0;
  std::uint64_t trace_count = 0;
  double nbar_label = 0.0;

  double sample_period() const noexcept { return static_cast<double>(sample_period_fs) / 1e15; }
  std::optional<double> label() const;
  std::uint64_t payload_bytes() const noexcept {
    return trace_count * static_cast<std::uint64_t>(samples_per_trace) * 4u;
  }
};

std::uint64_t period_to_femtoseconds(double seconds);

/// Random-access reader; the file layout is validated on open.
class WaveformReader {
public:
  explicit WaveformReader(const std::filesystem::path& path);

  const WaveformHeader& header() const noexcept { return header_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(header_.trace_count); }

  /// Traces [first, first + count); ids are file indices, t0 is `t0`.
  TraceSet read(std::size_t first, std::size_t count, double t0 = 0.0) const;
  TraceSet read_all(double t0 = 0.0) const { return read(0, size(), t0); }

private:
  std::filesystem::path path_;
  WaveformHeader header_;
  mutable std::ifstream in_;
};

/// Streaming writer; the trace count in the header is patched on close().
class WaveformWriter {
public:
  WaveformWriter(const std::filesystem::path& path, double sample_period, std::uint32_t samples_per_trace,
                 std::optional<double> nbar_label);
  ~WaveformWriter();
  WaveformWriter(const WaveformWriter&) = delete;
  WaveformWriter& operator=(const WaveformWriter&) = delete;

  void append(const Trace& trace);
  void append(const TraceSet& set);
  void close();
  std::uint64_t written() const noexcept { return count_; }

private:
  std::filesystem::path path_;
  std::ofstream out_;
  WaveformHeader header_;
  std::uint64_t count_ = 0;
  bool closed_ = false;
};

void write_waveform_file(const std::filesystem::path& path, const TraceSet& set);
TraceSet read_waveform_file(const std::filesystem::path& path);

}  // namespace pnr
