#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "pnr/calibration.hpp"
#include "pnr/errors.hpp"
#include "pnr/report.hpp"
#include "pnr/tables.hpp"
#include "pnr/waveform_file.hpp"

using namespace pnr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "pnr_test_io";
  fs::create_directories(dir);
  return dir / name;
}

TraceSet small_set(std::size_t n, std::size_t len) {
  std::mt19937_64 g(3);
  std::normal_distribution<double> z(0.0, 0.1);
  TraceSet s;
  s.mean_photon_number_label = 1.5;
  for (std::size_t i = 0; i < n; ++i) {
    Trace t;
    t.sample_period = 8e-12;
    t.id = i;
    for (std::size_t k = 0; k < len; ++k) t.samples.push_back(z(g));
    s.traces.push_back(std::move(t));
  }
  return s;
}

std::uint64_t parse_offset(const std::function<void()>& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no ParseError";
  return ~0ull;
}

}  // namespace

TEST(WaveformFile, RoundTripIsExactInSinglePrecision) {
  const auto set = small_set(7, 33);
  const auto p = scratch("rt.pnrw");
  write_waveform_file(p, set);
  EXPECT_EQ(fs::file_size(p), kWaveformHeaderSize + 7 * 33 * 4);
  const auto back = read_waveform_file(p);
  ASSERT_EQ(back.size(), 7u);
  ASSERT_TRUE(back.mean_photon_number_label.has_value());
  EXPECT_EQ(*back.mean_photon_number_label, 1.5);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(back.traces[i].id, i);
    EXPECT_DOUBLE_EQ(back.traces[i].sample_period, 8e-12);
    for (std::size_t k = 0; k < 33; ++k)
      EXPECT_EQ(back.traces[i].samples[k], static_cast<double>(static_cast<float>(set.traces[i].samples[k])));
  }
  // A second write of what was read is byte-identical.
  const auto p2 = scratch("rt2.pnrw");
  write_waveform_file(p2, back);
  std::ifstream a(p, std::ios::binary), b(p2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);

  WaveformReader r(p);
  const auto mid = r.read(3, 2, 1e-9);
  EXPECT_EQ(mid.traces[0].id, 3u);
  EXPECT_DOUBLE_EQ(mid.traces[1].t0, 1e-9);
  EXPECT_THROW(r.read(6, 2), InvalidArgument);
}

TEST(WaveformFile, CorruptionReportsOffset) {
  const auto p = scratch("bad.pnrw");
  write_waveform_file(p, small_set(3, 10));
  std::string bytes;
  {
    std::ifstream in(p, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  };

  write(bytes.substr(0, 20));
  EXPECT_EQ(parse_offset([&] { WaveformReader r(p); }), 20u);

  std::string magic = bytes;
  magic[2] = 'X';
  write(magic);
  EXPECT_EQ(parse_offset([&] { WaveformReader r(p); }), 0u);

  write(bytes.substr(0, bytes.size() - 5));
  EXPECT_GE(parse_offset([&] { WaveformReader r(p); }), kWaveformHeaderSize);

  std::string zero = bytes;
  std::memset(zero.data() + 13, 0, 4);
  write(zero);
  EXPECT_EQ(parse_offset([&] { WaveformReader r(p); }), 13u);

  write(bytes + "xx");
  EXPECT_THROW(WaveformReader r(p), ParseError);

  EXPECT_THROW(WaveformReader r(scratch("missing.pnrw")), ParseError);
}

TEST(WaveformFile, WriterRejectsMismatchedTraces) {
  WaveformWriter w(scratch("w.pnrw"), 8e-12, 4, std::nullopt);
  Trace t;
  t.sample_period = 8e-12;
  t.samples = {1, 2, 3};
  EXPECT_THROW(w.append(t), InvalidArgument);
  t.samples.push_back(4);
  w.append(t);
  w.close();
  EXPECT_EQ(w.written(), 1u);
  const auto back = read_waveform_file(scratch("w.pnrw"));
  EXPECT_FALSE(back.mean_photon_number_label.has_value());
}

TEST(Tables, RoundTrip) {
  std::vector<WeightPoint> pts{{1.25, -3e-12, 4}, {0.1 + 0.2, 1e300, 5}};
  const auto t = weight_table(pts, {{"nbar", "3.5"}});
  std::stringstream ss;
  write_table(ss, t);
  const auto back = read_table(ss);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.metadata.at("nbar"), "3.5");
  EXPECT_EQ(metadata_number(back, "nbar"), 3.5);
  EXPECT_FALSE(metadata_number(back, "absent").has_value());
  const auto p2 = points_from_table(back);
  ASSERT_EQ(p2.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(p2[i].trace_id, pts[i].trace_id);
    EXPECT_NEAR(p2[i].w1, pts[i].w1, 1e-14 * std::abs(pts[i].w1));
    EXPECT_NEAR(p2[i].w2, pts[i].w2, 1e-14 * std::abs(pts[i].w2));
  }
  EXPECT_THROW(back.column("nope"), InvalidArgument);
}

TEST(Tables, ParseErrorsCarryLineOffset) {
  const std::string good = "# trace_id,w1,w2\n1,2,3\n";
  std::stringstream bad_number(good + "2,x,4\n");
  EXPECT_EQ(parse_offset([&] { read_table(bad_number); }), good.size());
  std::stringstream wrong_width(good + "2,4\n");
  EXPECT_EQ(parse_offset([&] { read_table(wrong_width); }), good.size());
  std::stringstream no_header("1,2,3\n");
  EXPECT_EQ(parse_offset([&] { read_table(no_header); }), 0u);
}

TEST(Calibration, Examples) {
  EXPECT_EQ(calibrate_nbar(0.0, 1e6), 0.0);
  EXPECT_NEAR(calibrate_nbar(1e6 * (1 - std::exp(-1.0)), 1e6), 1.0, 1e-12);
  EXPECT_NEAR(calibrate_nbar(98168, 1e5), 4.0, 1e-3);
}

TEST(Calibration, InvertsExpectedRate) {
  for (double n = 0.01; n <= 6.0; n += 0.0137) {
    const double rr = 76e6;
    EXPECT_NEAR(calibrate_nbar(expected_count_rate(n, rr), rr), n, 1e-12 * n);
  }
}

TEST(Calibration, Errors) {
  EXPECT_THROW(calibrate_nbar(5, 5), SaturationError);
  EXPECT_THROW(calibrate_nbar(6, 5), SaturationError);
  EXPECT_THROW(calibrate_nbar(-1, 5), InvalidArgument);
  EXPECT_THROW(calibrate_nbar(1, 0), InvalidArgument);
  EXPECT_THROW(calibrate_nbar(NAN, 5), InvalidArgument);
  EXPECT_THROW(calibrate_nbar(1, INFINITY), InvalidArgument);
}

TEST(Report, DumpIsDeterministicAndFinite) {
  Json j{{"b", 1.0 / 3.0}, {"a", {1, 2, 3}}};
  EXPECT_EQ(dump_report(j), dump_report(Json::parse(dump_report(j))));
  EXPECT_EQ(dump_report(j).back(), '\n');
  EXPECT_LT(dump_report(j).find("\"b\""), dump_report(j).find("\"a\""));  // insertion order kept
  EXPECT_NO_THROW(ensure_finite(j));
  j["nested"] = Json{{"x", {1.0, NAN}}};
  EXPECT_THROW(ensure_finite(j), InvalidArgument);
}

TEST(Report, FileRoundTripAndParseOffset) {
  const auto p = scratch("r.json");
  Json j{{"format", "x"}, {"values", {0.1, 2.5e-12}}};
  write_report(p, j);
  EXPECT_EQ(read_report(p), j);
  {
    std::ofstream out(p, std::ios::trunc);
    out << "{\"a\": [1, 2,";
  }
  EXPECT_THROW(read_report(p), ParseError);
}

TEST(Report, BasisRoundTrip) {
  PcaBasis b;
  b.mean_trace = Eigen::VectorXd::LinSpaced(5, 0.0, 1.0);
  b.components = Eigen::MatrixXd::Identity(5, 2);
  b.explained_variance = {2.0, 1.0};
  b.explained_variance_ratio = {0.5, 0.25};
  b.total_variance = 4.0;
  b.training_count = 10;
  const auto back = basis_from_json(Json::parse(dump_report(basis_to_json(b, true))));
  EXPECT_EQ(back.mean_trace, b.mean_trace);
  EXPECT_EQ(back.components, b.components);
  EXPECT_EQ(back.explained_variance, b.explained_variance);
  EXPECT_EQ(back.training_count, 10u);
  EXPECT_THROW(basis_from_json(basis_to_json(b, false)), InvalidArgument);
}
