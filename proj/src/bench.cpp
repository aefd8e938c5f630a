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

#include "streamforge/bench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>

#include "streamforge/backend.hpp"
#include "streamforge/oracles.hpp"

namespace streamforge::bench {

namespace {

struct KernelNames {
  KernelId id;
  std::string_view cli;
  std::string_view kernel;
  std::string_view variant;
};

constexpr KernelNames kKernels[] = {
    {KernelId::mod2am_simple, "mod2am-simple", "mod2am", "simple"},
    {KernelId::mod2am_vec4, "mod2am-vec4", "mod2am", "vec4"},
    {KernelId::mod2am_blocked, "mod2am-blocked", "mod2am", "blocked"},
    {KernelId::mod2as, "mod2as", "mod2as", "spmxv"},
    {KernelId::mod2f, "mod2f", "mod2f", "radix2"},
};

const KernelNames& names(KernelId k) {
  for (const auto& n : kKernels) {
    if (n.id == k) return n;
  }
  throw Error(ErrorCode::unknown_kernel, "unknown kernel id");
}

[[noreturn]] void usage(const std::string& msg) { throw Error(ErrorCode::usage, msg); }

bool is_gemm(KernelId k) {
  return k == KernelId::mod2am_simple || k == KernelId::mod2am_vec4 || k == KernelId::mod2am_blocked;
}

}  // namespace

KernelId parse_kernel(std::string_view name) {
  for (const auto& n : kKernels) {
    if (n.cli == name) return n.id;
  }
  throw Error(ErrorCode::unknown_kernel, "unknown kernel '" + std::string(name) + "'");
}

std::string_view cli_name(KernelId k) { return names(k).cli; }
std::string_view kernel_name(KernelId k) { return names(k).kernel; }
std::string_view variant_name(KernelId k) { return names(k).variant; }

Precision parse_precision(std::string_view name) {
  if (name == "f32") return Precision::f32;
  if (name == "f64") return Precision::f64;
  usage("precision must be f32 or f64, got '" + std::string(name) + "'");
}

std::string_view precision_name(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

double flop_count(KernelId k, const SizeParams& s) { return flop_count(kernel_name(k), s); }

double flop_count(std::string_view kernel, const SizeParams& s) {
  if (kernel == "mod2am") return 2.0 * static_cast<double>(s.m) * static_cast<double>(s.n) * static_cast<double>(s.l);
  if (kernel == "mod2as") return 2.0 * static_cast<double>(s.nnz);
  if (kernel == "mod2f") {
    return s.fft_n <= 1 ? 0.0 : 5.0 * static_cast<double>(s.fft_n) * std::log2(static_cast<double>(s.fft_n));
  }
  throw Error(ErrorCode::unknown_kernel, "no flop count for kernel '" + std::string(kernel) + "'");
}

// ---- Generators -------------------------------------------------------------------

template <class T>
DenseMatrix<T> generate_dense(std::int64_t rows, std::int64_t cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) usage("matrix dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DenseMatrix<T> d(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (auto& v : d.data) v = static_cast<T>(dist(rng));
  return d;
}

template <class T>
CsrMatrix<T> generate_sparse(std::int64_t nrows, std::int64_t ncols, double density, std::uint64_t seed) {
  if (!(density > 0.0 && density <= 1.0)) usage("density must be in (0, 1]");
  if (nrows < 1 || ncols < 1) usage("matrix dimensions must be positive");
  const auto per_row = static_cast<std::int64_t>(std::llround(density * static_cast<double>(ncols)));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CsrMatrix<T> csr;
  csr.nrows = nrows;
  csr.ncols = ncols;
  csr.rowp.reserve(static_cast<std::size_t>(nrows) + 1);
  csr.rowp.push_back(0);
  for (std::int64_t r = 0; r < nrows; ++r) {
    // Selection sampling: each column is kept with probability
    // (still needed) / (still available), which yields exactly per_row
    // distinct columns in ascending order.
    std::int64_t needed = per_row;
    for (std::int64_t c = 0; c < ncols && needed > 0; ++c) {
      if (unit(rng) * static_cast<double>(ncols - c) < static_cast<double>(needed)) {
        csr.indx.push_back(static_cast<std::int32_t>(c));
        csr.matvals.push_back(static_cast<T>(value(rng)));
        --needed;
      }
    }
    csr.rowp.push_back(static_cast<std::int32_t>(csr.matvals.size()));
  }
  return csr;
}

template <class T>
std::vector<T> generate_vector(std::int64_t n, std::uint64_t seed) {
  if (n < 1) usage("vector length must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<T> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return v;
}

template <class T>
std::vector<std::complex<T>> generate_signal(std::int64_t n, std::uint64_t seed) {
  if (n < 1) usage("signal length must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<std::complex<T>> v(static_cast<std::size_t>(n));
  for (auto& z : v) {
    const double re = dist(rng);
    const double im = dist(rng);
    z = {static_cast<T>(re), static_cast<T>(im)};
  }
  return v;
}

std::string fnv1a_hex(const void* data, std::size_t bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t k = 0; k < bytes; ++k) {
    h ^= p[k];
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

// ---- Measurement ------------------------------------------------------------------

namespace {

// One prepared benchmark cell: `run` performs a whole kernel invocation and
// leaves its output in place for `checksum` and `verify`.
struct Workload {
  SizeParams sizes;
  std::function<RunStats()> run;
  std::function<std::string()> checksum;
  std::function<void()> verify;  // throws oracle_mismatch
};

[[noreturn]] void mismatch(std::string_view what, double error, double tolerance) {
  throw Error(ErrorCode::oracle_mismatch, fmt::format("{} differs from its oracle: error {} exceeds tolerance {}",
                                                      what, error, tolerance));
}

template <class T>
Workload gemm_workload(const MeasureConfig& cfg, Backend* backend) {
  const std::int64_t s = cfg.size;
  auto a = std::make_shared<DenseMatrix<T>>(generate_dense<T>(s, s, cfg.seed));
  auto b = std::make_shared<DenseMatrix<T>>(generate_dense<T>(s, s, cfg.seed + 1));
  auto c = std::make_shared<DenseMatrix<T>>();
  const GemmDims dims{s, s, s};
  Workload w;
  w.sizes = {s, s, s, 0, 0};
  w.run = [=, kernel = cfg.kernel, workers = cfg.workers, fault = cfg.inject_fault] {
    RunStats stats;
    if (backend == nullptr) {
      *c = gemm_fast_native(*a, *b, dims, workers);
      stats.bytes_bound = (a->data.size() + b->data.size() + c->data.size()) * sizeof(T);
    } else if (kernel == KernelId::mod2am_simple) {
      *c = mod2am_simple(*a, *b, dims, *backend, &stats);
    } else if (kernel == KernelId::mod2am_vec4) {
      *c = mod2am_vec4(*a, *b, dims, *backend, &stats);
    } else {
      *c = mod2am_blocked(*a, *b, dims, *backend, kDefaultBlock, &stats);
    }
    if (fault) c->data[0] += T(1);
    return stats;
  };
  w.checksum = [c] { return fnv1a_hex(c->data.data(), c->data.size() * sizeof(T)); };
  w.verify = [a, b, c, s] {
    const double err = gemm_error(*c, *a, *b);
    const double tol = reduction_tolerance<T>(s);
    if (!(err <= tol)) mismatch("matrix product", err, tol);
  };
  return w;
}

template <class T>
Workload spmv_workload(const MeasureConfig& cfg, Backend* backend) {
  const std::int64_t s = cfg.size;
  auto csr = std::make_shared<CsrMatrix<T>>(generate_sparse<T>(s, s, cfg.density, cfg.seed));
  auto v = std::make_shared<std::vector<T>>(generate_vector<T>(s, cfg.seed + 1));
  auto out = std::make_shared<std::vector<T>>();
  Workload w;
  w.sizes = {s, s, 0, csr->nelmts(), 0};
  w.run = [=, fault = cfg.inject_fault] {
    RunStats stats;
    if (backend == nullptr) {
      *out = spmv_native(*csr, *v);
      stats.bytes_bound = (csr->matvals.size() + v->size() + out->size()) * sizeof(T) +
                          (csr->indx.size() + csr->rowp.size()) * sizeof(std::int32_t);
    } else {
      *out = mod2as(*csr, *v, *backend, &stats);
    }
    if (fault) (*out)[0] += T(1);
    return stats;
  };
  w.checksum = [out] { return fnv1a_hex(out->data(), out->size() * sizeof(T)); };
  w.verify = [csr, v, out] {
    const double err = spmv_error(*out, *csr, *v);
    const double tol = reduction_tolerance<T>(max_row_length(*csr));
    if (!(err <= tol)) mismatch("sparse matrix-vector product", err, tol);
  };
  return w;
}

template <class T>
Workload fft_workload(const MeasureConfig& cfg, Backend* backend) {
  const std::int64_t s = cfg.size;
  auto x = std::make_shared<std::vector<std::complex<T>>>(generate_signal<T>(s, cfg.seed));
  auto out = std::make_shared<std::vector<std::complex<T>>>();
  Workload w;
  w.sizes = {0, 0, 0, 0, s};
  w.run = [=, fault = cfg.inject_fault] {
    RunStats stats;
    if (backend == nullptr) {
      *out = fft_native(*x, FftDirection::forward);
      stats.bytes_bound = (x->size() + out->size()) * sizeof(std::complex<T>);
    } else {
      *out = mod2f(*x, FftDirection::forward, *backend, &stats);
    }
    if (fault) (*out)[0] += T(1);
    return stats;
  };
  w.checksum = [out] { return fnv1a_hex(out->data(), out->size() * sizeof(std::complex<T>)); };
  w.verify = [x, out] {
    const double err = relative_l2_error(*out, fft_oracle(*x, FftDirection::forward));
    const double tol = fft_tolerance<T>();
    if (!(err <= tol)) mismatch("FFT", err, tol);
  };
  return w;
}

template <class T>
Workload make_workload(const MeasureConfig& cfg, Backend* backend) {
  if (is_gemm(cfg.kernel)) return gemm_workload<T>(cfg, backend);
  if (cfg.kernel == KernelId::mod2as) return spmv_workload<T>(cfg, backend);
  return fft_workload<T>(cfg, backend);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

void check_backend_name(std::string_view backend) {
  if (backend != "interp" && backend != "parallel" && backend != "native") {
    throw Error(ErrorCode::unknown_backend, "unknown backend '" + std::string(backend) + "'");
  }
}

}  // namespace

BenchRecord measure(const MeasureConfig& cfg) {
  if (cfg.reps < 3) usage("reps must be at least 3");
  if (cfg.size < 1) usage("sizes must be positive");
  check_backend_name(cfg.backend);
  std::unique_ptr<Backend> backend;
  if (cfg.backend != "native") backend = make_backend(cfg.backend, cfg.workers);

  Workload w = cfg.precision == Precision::f32 ? make_workload<float>(cfg, backend.get())
                                               : make_workload<double>(cfg, backend.get());

  // Untimed correctness run.
  const RunStats first = w.run();
  w.verify();
  const std::string checksum = w.checksum();

  std::vector<double> times;
  for (int r = 0; r < cfg.reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    w.run();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    times.push_back(dt.count());
    if (w.checksum() != checksum) {
      throw Error(ErrorCode::oracle_mismatch, "timed run output differs from the verified run");
    }
  }

  BenchRecord rec;
  rec.kernel = kernel_name(cfg.kernel);
  rec.variant = variant_name(cfg.kernel);
  rec.backend = cfg.backend;
  rec.precision = precision_name(cfg.precision);
  rec.sizes = w.sizes;
  rec.reps = cfg.reps;
  rec.min_s = *std::min_element(times.begin(), times.end());
  rec.median_s = median_of(times);
  rec.gflops = flop_count(cfg.kernel, rec.sizes) / rec.median_s / 1e9;
  rec.bytes = first.bytes_bound;
  rec.checksum = checksum;
  return rec;
}

std::vector<std::int64_t> default_sizes(KernelId k) {
  std::vector<std::int64_t> sizes;
  if (k == KernelId::mod2f) {
    for (std::int64_t n = 64; n <= 65536; n *= 2) sizes.push_back(n);
    return sizes;
  }
  for (std::int64_t n = 8; n <= 1024; n *= 2) sizes.push_back(n);
  if (k == KernelId::mod2as) {
    sizes.insert(sizes.end(), {100, 500, 1000});
    std::sort(sizes.begin(), sizes.end());
  }
  return sizes;
}

SweepResult run_sweep(const SweepConfig& config, std::ostream& out) {
  if (config.kernels.empty()) usage("no kernels selected");
  if (config.backends.empty()) usage("no backends selected");
  if (config.sizes && config.sizes->empty()) usage("empty size list");
  if (config.reps < 3) usage("reps must be at least 3");
  if (!(config.density > 0.0 && config.density <= 1.0)) usage("density must be in (0, 1]");
  for (const auto& b : config.backends) check_backend_name(b);
  if (config.sizes) {
    for (auto s : *config.sizes) {
      if (s < 1) usage("sizes must be positive");
    }
  }

  out << (config.table ? table_header() : std::string(kCsvHeader)) << '\n' << std::flush;
  SweepResult result;
  bool mismatch_seen = false, error_seen = false;
  for (KernelId k : config.kernels) {
    const std::vector<std::int64_t> sizes = config.sizes ? *config.sizes : default_sizes(k);
    for (const auto& backend : config.backends) {
      for (std::int64_t size : sizes) {
        MeasureConfig m;
        m.kernel = k;
        m.backend = backend;
        m.precision = config.precision;
        m.size = size;
        m.reps = config.reps;
        m.density = config.density;
        m.workers = config.workers;
        m.seed = config.seed;
        m.inject_fault = config.inject_fault;
        const std::string cell = fmt::format("{} backend={} size={}", cli_name(k), backend, size);
        try {
          BenchRecord rec = measure(m);
          out << (config.table ? to_table_row(rec) : to_csv_row(rec)) << '\n' << std::flush;
          result.records.push_back(std::move(rec));
        } catch (const Error& e) {
          (e.code() == ErrorCode::oracle_mismatch ? mismatch_seen : error_seen) = true;
          result.failures.push_back(cell + ": " + e.what());
        } catch (const std::exception& e) {
          error_seen = true;
          result.failures.push_back(cell + ": " + e.what());
        }
      }
    }
  }
  result.exit_code = mismatch_seen ? 3 : error_seen ? 4 : 0;
  return result;
}

namespace {

std::string size_field(std::int64_t v) { return v == 0 ? std::string() : std::to_string(v); }

}  // namespace

std::string to_csv_row(const BenchRecord& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", r.kernel, r.variant, r.backend, r.precision,
                     size_field(r.sizes.m), size_field(r.sizes.n), size_field(r.sizes.l), size_field(r.sizes.nnz),
                     size_field(r.sizes.fft_n), r.reps, r.min_s, r.median_s, r.gflops, r.bytes, r.checksum);
}

std::string table_header() {
  return fmt::format("{:<7} {:<8} {:<9} {:<4} {:>6} {:>6} {:>6} {:>9} {:>6} {:>4} {:>12} {:>12} {:>9} {:>12} {}",
                     "kernel", "variant", "backend", "prec", "m", "n", "l", "nnz", "fft_n", "reps", "min_s",
                     "median_s", "gflops", "bytes", "checksum");
}

std::string to_table_row(const BenchRecord& r) {
  return fmt::format("{:<7} {:<8} {:<9} {:<4} {:>6} {:>6} {:>6} {:>9} {:>6} {:>4} {:>12.6g} {:>12.6g} {:>9.4f} {:>12} {}",
                     r.kernel, r.variant, r.backend, r.precision, size_field(r.sizes.m), size_field(r.sizes.n),
                     size_field(r.sizes.l), size_field(r.sizes.nnz), size_field(r.sizes.fft_n), r.reps, r.min_s,
                     r.median_s, r.gflops, r.bytes, r.checksum);
}

#define SF_INSTANTIATE(T)                                                                          \
  template DenseMatrix<T> generate_dense<T>(std::int64_t, std::int64_t, std::uint64_t);            \
  template CsrMatrix<T> generate_sparse<T>(std::int64_t, std::int64_t, double, std::uint64_t);     \
  template std::vector<T> generate_vector<T>(std::int64_t, std::uint64_t);                         \
  template std::vector<std::complex<T>> generate_signal<T>(std::int64_t, std::uint64_t);

SF_INSTANTIATE(float)
SF_INSTANTIATE(double)

#undef SF_INSTANTIATE

}  // namespace streamforge::bench
