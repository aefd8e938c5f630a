// Copyright 2026 The StreamForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "streamforge/bench.hpp"
#include "test_util.hpp"

namespace sf = streamforge;
namespace bench = streamforge::bench;
using bench::KernelId;
using sf::ErrorCode;
using sf::testing::code_of;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST(FlopCount, Formulas) {
  EXPECT_EQ(bench::flop_count(KernelId::mod2am_simple, {2, 2, 2, 0, 0}), 16.0);
  EXPECT_EQ(bench::flop_count(KernelId::mod2as, {3, 3, 0, 4, 0}), 8.0);
  EXPECT_EQ(bench::flop_count(KernelId::mod2f, {0, 0, 0, 0, 8}), 120.0);
  EXPECT_EQ(bench::flop_count("mod2am", {4, 5, 6, 0, 0}), 240.0);
  EXPECT_EQ(code_of([] { (void)bench::flop_count("mod3x", {}); }), ErrorCode::unknown_kernel);
}

TEST(Names, KernelsRoundTrip) {
  for (KernelId k : {KernelId::mod2am_simple, KernelId::mod2am_vec4, KernelId::mod2am_blocked, KernelId::mod2as,
                     KernelId::mod2f}) {
    EXPECT_EQ(bench::parse_kernel(bench::cli_name(k)), k);
  }
  EXPECT_EQ(bench::kernel_name(KernelId::mod2am_vec4), "mod2am");
  EXPECT_EQ(bench::variant_name(KernelId::mod2am_blocked), "blocked");
  EXPECT_EQ(code_of([] { (void)bench::parse_kernel("mod2xx"); }), ErrorCode::unknown_kernel);
  EXPECT_EQ(bench::parse_precision("f32"), bench::Precision::f32);
  EXPECT_EQ(code_of([] { (void)bench::parse_precision("f16"); }), ErrorCode::usage);
}

TEST(Generators, DenseIsDeterministicAndInRange) {
  const auto a = bench::generate_dense<double>(17, 9, 5);
  EXPECT_EQ(a, bench::generate_dense<double>(17, 9, 5));
  EXPECT_NE(a, bench::generate_dense<double>(17, 9, 6));
  for (double x : a.data) {
    EXPECT_GE(x, -1.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(Generators, SparseFullDensity) {
  const auto c = bench::generate_sparse<float>(4, 4, 1.0, 1);
  EXPECT_EQ(c.nelmts(), 16);
  EXPECT_NO_THROW(c.validate());
}

TEST(Generators, SparseOnePerRow) {
  const auto c = bench::generate_sparse<double>(100, 100, 0.01, 3);
  EXPECT_EQ(c.nelmts(), 100);
  for (std::int64_t r = 0; r < 100; ++r) EXPECT_EQ(c.rowp[r + 1] - c.rowp[r], 1);
}

TEST(Generators, SparseIsSortedDistinctAndDeterministic) {
  const auto c = bench::generate_sparse<double>(50, 200, 0.1, 9);
  c.validate();
  for (std::int64_t r = 0; r < 50; ++r) {
    EXPECT_EQ(c.rowp[r + 1] - c.rowp[r], 20);
    for (auto k = c.rowp[r] + 1; k < c.rowp[r + 1]; ++k) EXPECT_LT(c.indx[k - 1], c.indx[k]);
  }
  const auto d = bench::generate_sparse<double>(50, 200, 0.1, 9);
  EXPECT_EQ(c.matvals, d.matvals);
  EXPECT_EQ(c.indx, d.indx);
  EXPECT_EQ(c.rowp, d.rowp);
}

TEST(Generators, InvalidDensity) {
  EXPECT_EQ(code_of([] { (void)bench::generate_sparse<float>(4, 4, 0.0, 1); }), ErrorCode::usage);
  EXPECT_EQ(code_of([] { (void)bench::generate_sparse<float>(4, 4, 1.5, 1); }), ErrorCode::usage);
}

TEST(Generators, SignalAndVector) {
  EXPECT_EQ(bench::generate_signal<float>(32, 4), bench::generate_signal<float>(32, 4));
  EXPECT_EQ(bench::generate_vector<double>(32, 4).size(), 32u);
}

TEST(Checksum, Fnv1a) {
  EXPECT_EQ(bench::fnv1a_hex("", 0), "cbf29ce484222325");
  EXPECT_EQ(bench::fnv1a_hex("a", 1), "af63dc4c8601ec8c");
}

TEST(Measure, GemmRecord) {
  bench::MeasureConfig cfg;
  cfg.kernel = KernelId::mod2am_simple;
  cfg.backend = "interp";
  cfg.size = 64;
  cfg.reps = 5;
  const bench::BenchRecord r = bench::measure(cfg);
  EXPECT_EQ(r.kernel, "mod2am");
  EXPECT_EQ(r.variant, "simple");
  EXPECT_EQ(r.sizes.m, 64);
  EXPECT_EQ(r.sizes.l, 64);
  EXPECT_LE(r.min_s, r.median_s);
  EXPECT_DOUBLE_EQ(r.gflops, 2.0 * 64 * 64 * 64 / r.median_s / 1e9);
  EXPECT_EQ(r.checksum.size(), 16u);
  EXPECT_EQ(bench::measure(cfg).checksum, r.checksum);
}

TEST(Measure, BackendsAgreeOnChecksum) {
  for (KernelId k : {KernelId::mod2am_vec4, KernelId::mod2am_blocked, KernelId::mod2as, KernelId::mod2f}) {
    bench::MeasureConfig cfg;
    cfg.kernel = k;
    cfg.size = 64;
    cfg.reps = 3;
    cfg.density = 0.1;
    cfg.backend = "interp";
    const auto a = bench::measure(cfg);
    cfg.backend = "parallel";
    cfg.workers = 3;
    const auto b = bench::measure(cfg);
    EXPECT_EQ(a.checksum, b.checksum) << bench::cli_name(k);
  }
}

TEST(Measure, NativeBaselines) {
  for (KernelId k : {KernelId::mod2am_simple, KernelId::mod2as, KernelId::mod2f}) {
    bench::MeasureConfig cfg;
    cfg.kernel = k;
    cfg.backend = "native";
    cfg.size = 128;
    cfg.reps = 3;
    cfg.precision = bench::Precision::f32;
    EXPECT_GT(bench::measure(cfg).median_s, 0.0) << bench::cli_name(k);
  }
}

TEST(Measure, FaultInjectionIsAnOracleMismatch) {
  bench::MeasureConfig cfg;
  cfg.kernel = KernelId::mod2as;
  cfg.backend = "parallel";
  cfg.size = 100;
  cfg.inject_fault = true;
  EXPECT_EQ(code_of([&] { (void)bench::measure(cfg); }), ErrorCode::oracle_mismatch);
}

TEST(Measure, ConfigErrors) {
  bench::MeasureConfig cfg;
  cfg.reps = 2;
  EXPECT_EQ(code_of([&] { (void)bench::measure(cfg); }), ErrorCode::usage);
  cfg.reps = 3;
  cfg.backend = "gpu";
  EXPECT_EQ(code_of([&] { (void)bench::measure(cfg); }), ErrorCode::unknown_backend);
  cfg.backend = "interp";
  cfg.kernel = KernelId::mod2f;
  cfg.size = 100;
  EXPECT_EQ(code_of([&] { (void)bench::measure(cfg); }), ErrorCode::dimension);
}

TEST(Sweep, CrossProductRows) {
  bench::SweepConfig cfg;
  cfg.kernels = {KernelId::mod2am_simple};
  cfg.backends = {"interp", "parallel"};
  cfg.sizes = std::vector<std::int64_t>{64, 128};
  cfg.reps = 3;
  std::ostringstream out;
  const auto result = bench::run_sweep(cfg, out);
  EXPECT_EQ(result.exit_code, 0);
  EXPECT_EQ(result.records.size(), 4u);
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], bench::kCsvHeader);
  for (std::size_t i = 1; i < lines.size(); ++i) EXPECT_EQ(split(lines[i], ',').size(), 15u);
}

TEST(Sweep, DefaultSizes) {
  EXPECT_EQ(bench::default_sizes(KernelId::mod2am_simple),
            (std::vector<std::int64_t>{8, 16, 32, 64, 128, 256, 512, 1024}));
  EXPECT_EQ(bench::default_sizes(KernelId::mod2as).size(), 11u);
  EXPECT_EQ(bench::default_sizes(KernelId::mod2f).front(), 64);
  EXPECT_EQ(bench::default_sizes(KernelId::mod2f).back(), 65536);
}

TEST(Sweep, EmptySizeListIsUsageError) {
  bench::SweepConfig cfg;
  cfg.sizes = std::vector<std::int64_t>{};
  std::ostringstream out;
  EXPECT_EQ(code_of([&] { (void)bench::run_sweep(cfg, out); }), ErrorCode::usage);
  EXPECT_TRUE(out.str().empty());
}

TEST(Sweep, FailedCellsAreSkippedAndReported) {
  bench::SweepConfig cfg;
  cfg.kernels = {KernelId::mod2f};
  cfg.backends = {"interp"};
  cfg.sizes = std::vector<std::int64_t>{64, 100, 128};
  cfg.reps = 3;
  std::ostringstream out;
  const auto result = bench::run_sweep(cfg, out);
  EXPECT_EQ(result.records.size(), 2u);
  ASSERT_EQ(result.failures.size(), 1u);
  EXPECT_EQ(result.exit_code, 4);
}

TEST(Csv, RowFormatting) {
  bench::BenchRecord r;
  r.kernel = "mod2f";
  r.variant = "radix2";
  r.backend = "parallel";
  r.precision = "f32";
  r.sizes.fft_n = 1024;
  r.reps = 5;
  r.min_s = 0.25;
  r.median_s = 0.5;
  r.gflops = bench::flop_count("mod2f", r.sizes) / r.median_s / 1e9;
  r.bytes = 8192;
  r.checksum = "0123456789abcdef";
  EXPECT_EQ(bench::to_csv_row(r), "mod2f,radix2,parallel,f32,,,,,1024,5,0.25,0.5,0.0001024,8192,0123456789abcdef");
}

TEST(Csv, GflopsRecomputesFromColumns) {
  bench::SweepConfig cfg;
  cfg.kernels = {KernelId::mod2as, KernelId::mod2f};
  cfg.backends = {"parallel"};
  cfg.sizes = std::vector<std::int64_t>{64, 256};
  cfg.reps = 3;
  cfg.density = 0.05;
  std::ostringstream out;
  ASSERT_EQ(bench::run_sweep(cfg, out).exit_code, 0);
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 5u);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    auto num = [&](std::size_t c) { return f[c].empty() ? 0.0 : std::stod(f[c]); };
    bench::SizeParams s{static_cast<std::int64_t>(num(4)), static_cast<std::int64_t>(num(5)),
                        static_cast<std::int64_t>(num(6)), static_cast<std::int64_t>(num(7)),
                        static_cast<std::int64_t>(num(8))};
    const double want = bench::flop_count(f[0], s) / num(11) / 1e9;
    EXPECT_NEAR(num(12), want, 1e-9 * want);
  }
}
