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

// Plain native reference implementations, error metrics and tolerances.
//
// The *_oracle functions accumulate in double whatever the input precision
// and serve as ground truth. The *_native functions compute in the input
// precision and are the hand-written baselines the benchmarks compare the
// stream kernels against.

#pragma once

#include <complex>
#include <vector>

#include "streamforge/core.hpp"
#include "streamforge/kernels.hpp"

namespace streamforge {

template <class T>
DenseMatrix<T> gemm_oracle(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const GemmDims& dims);

/// Cache-blocked, multi-threaded GEMM. Each C entry is summed in T in
/// ascending k. threads == 0 uses default_worker_count().
template <class T>
DenseMatrix<T> gemm_fast_native(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const GemmDims& dims,
                                int threads = 0);

template <class T>
std::vector<T> spmv_oracle(const CsrMatrix<T>& csr, const std::vector<T>& invec);
template <class T>
std::vector<T> spmv_native(const CsrMatrix<T>& csr, const std::vector<T>& invec);

/// Direct O(n^2) DFT in double. The inverse includes the 1/n factor.
template <class T>
std::vector<std::complex<double>> dft_oracle(const std::vector<std::complex<T>>& x, FftDirection direction);

/// Reference spectrum for checking FFT kernels: dft_oracle up to
/// kDirectDftLimit points, beyond that a radix-2 FFT carried out in double
/// (whose own accuracy the tests establish against dft_oracle).
inline constexpr std::size_t kDirectDftLimit = 4096;
template <class T>
std::vector<std::complex<double>> fft_oracle(const std::vector<std::complex<T>>& x, FftDirection direction);

/// Iterative in-place radix-2 FFT in T. Throws dimension for n not a power
/// of two.
template <class T>
std::vector<std::complex<T>> fft_native(const std::vector<std::complex<T>>& x, FftDirection direction);

// ---- Error metrics ----------------------------------------------------------
//
// Matrix products and SpMV are compared elementwise relative to the sum of
// absolute products, max_ij |c_ij - ref_ij| / (|A||B|)_ij. Plain relative
// error is meaningless for entries that cancel to near zero; this is the
// quantity summation error bounds are stated in.

template <class T>
double gemm_error(const DenseMatrix<T>& c, const DenseMatrix<T>& a, const DenseMatrix<T>& b);

template <class T>
double spmv_error(const std::vector<T>& out, const CsrMatrix<T>& csr, const std::vector<T>& invec);

/// ||x - ref||_2 / ||ref||_2, or ||x||_2 when ref is zero.
template <class T>
double relative_l2_error(const std::vector<std::complex<T>>& x, const std::vector<std::complex<double>>& ref);

// ---- Tolerances ---------------------------------------------------------------

inline constexpr double kF32Tolerance = 1e-5;
inline constexpr double kF64TolerancePerTerm = 1e-12;
inline constexpr double kFftF32Tolerance = 1e-5;
inline constexpr double kFftF64Tolerance = 1e-10;

/// Tolerance for a reduction of `length` terms.
template <class T>
constexpr double reduction_tolerance(std::int64_t length) {
  if constexpr (sizeof(T) == 4) {
    return kF32Tolerance;
  } else {
    return kF64TolerancePerTerm * static_cast<double>(length < 1 ? 1 : length);
  }
}

template <class T>
constexpr double fft_tolerance() {
  return sizeof(T) == 4 ? kFftF32Tolerance : kFftF64Tolerance;
}

/// Longest row of a CSR matrix (at least 1).
template <class T>
std::int64_t max_row_length(const CsrMatrix<T>& csr);

}  // namespace streamforge
