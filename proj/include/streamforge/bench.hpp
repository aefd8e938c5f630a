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

// Benchmark harness: input generators, whole-kernel timing and CSV records.

#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streamforge/core.hpp"
#include "streamforge/kernels.hpp"

namespace streamforge::bench {

enum class KernelId { mod2am_simple, mod2am_vec4, mod2am_blocked, mod2as, mod2f };
enum class Precision { f32, f64 };

/// CLI spelling, e.g. "mod2am-vec4". Throws unknown_kernel.
KernelId parse_kernel(std::string_view name);
std::string_view cli_name(KernelId k);
/// CSV kernel column: "mod2am", "mod2as" or "mod2f".
std::string_view kernel_name(KernelId k);
/// CSV variant column: "simple", "vec4", "blocked", "spmxv" or "radix2".
std::string_view variant_name(KernelId k);

/// Throws usage.
Precision parse_precision(std::string_view name);
std::string_view precision_name(Precision p);

/// Size columns; zero means "not applicable" and prints as an empty field.
struct SizeParams {
  std::int64_t m = 0;
  std::int64_t n = 0;
  std::int64_t l = 0;
  std::int64_t nnz = 0;
  std::int64_t fft_n = 0;
};

/// GEMM 2mnl, SpMV 2 nnz, FFT 5 n log2(n).
double flop_count(KernelId k, const SizeParams& s);
/// Same, by CSV kernel name ("mod2am", "mod2as", "mod2f"); throws
/// unknown_kernel.
double flop_count(std::string_view kernel, const SizeParams& s);

struct BenchRecord {
  std::string kernel;
  std::string variant;
  std::string backend;
  std::string precision;
  SizeParams sizes;
  int reps = 0;
  double min_s = 0;
  double median_s = 0;
  double gflops = 0;
  std::size_t bytes = 0;
  std::string checksum;  // FNV-1a 64 of the output bytes, 16 hex digits
};

// ---- Generators ---------------------------------------------------------------
// Deterministic for a fixed seed; values uniform in [-1, 1].

template <class T>
DenseMatrix<T> generate_dense(std::int64_t rows, std::int64_t cols, std::uint64_t seed);

/// round(density * ncols) distinct uniformly chosen columns per row, sorted.
/// Throws usage unless 0 < density <= 1.
template <class T>
CsrMatrix<T> generate_sparse(std::int64_t nrows, std::int64_t ncols, double density, std::uint64_t seed);

template <class T>
std::vector<T> generate_vector(std::int64_t n, std::uint64_t seed);

template <class T>
std::vector<std::complex<T>> generate_signal(std::int64_t n, std::uint64_t seed);

std::string fnv1a_hex(const void* data, std::size_t bytes);

// ---- Measurement --------------------------------------------------------------

struct MeasureConfig {
  KernelId kernel = KernelId::mod2am_simple;
  std::string backend = "parallel";  // interp, parallel or native
  Precision precision = Precision::f64;
  std::int64_t size = 64;  // m = n = l, nrows = ncols, or FFT length
  int reps = 5;
  double density = 0.01;
  int workers = 0;  // 0: default_worker_count()
  std::uint64_t seed = 42;
  /// Test hook: perturbs the kernel output so verification must fail.
  bool inject_fault = false;
};

/// Runs the kernel once untimed and checks it against the oracle (throws
/// oracle_mismatch), then times `reps` whole-kernel invocations. Every
/// timed run must reproduce the verified output's checksum.
BenchRecord measure(const MeasureConfig& config);

struct SweepConfig {
  std::vector<KernelId> kernels{KernelId::mod2am_simple};
  std::vector<std::string> backends{"parallel"};
  /// Empty: default_sizes() per kernel.
  std::optional<std::vector<std::int64_t>> sizes;
  Precision precision = Precision::f64;
  int reps = 5;
  double density = 0.01;
  int workers = 0;
  std::uint64_t seed = 42;
  bool inject_fault = false;
  bool table = false;
};

/// GEMM: powers of two 8..1024. SpMV: the same plus 100, 500, 1000.
/// FFT: powers of two 64..65536.
std::vector<std::int64_t> default_sizes(KernelId k);

struct SweepResult {
  std::vector<BenchRecord> records;
  std::vector<std::string> failures;
  int exit_code = 0;  // 0 ok, 3 oracle mismatch, 4 backend error
};

/// Measures every (kernel, backend, size) cell in order, streaming rows to
/// `out` as they complete. Failed cells are skipped, described in
/// `failures` and reflected in exit_code. Throws usage for an invalid
/// configuration.
SweepResult run_sweep(const SweepConfig& config, std::ostream& out);

inline constexpr std::string_view kCsvHeader =
    "kernel,variant,backend,precision,m,n,l,nnz,fft_n,reps,min_s,median_s,gflops,bytes,checksum";

std::string to_csv_row(const BenchRecord& r);
std::string to_table_row(const BenchRecord& r);
std::string table_header();

}  // namespace streamforge::bench
