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

// The benchmark kernels written as stream programs: dense matrix product
// (mod2am), CSR sparse matrix-vector product (mod2as) and radix-2 FFT
// (mod2f). All are instantiated for float and double.
//
// Every entry point takes the backend to run on and an optional RunStats
// that accumulates elapsed time, bound bytes and elements over all the
// program runs the kernel makes.

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "streamforge/backend.hpp"
#include "streamforge/core.hpp"
#include "streamforge/program.hpp"

namespace streamforge {

/// C(m x n) = A(m x l) * B(l x n).
struct GemmDims {
  std::int64_t m;
  std::int64_t n;
  std::int64_t l;
  friend bool operator==(const GemmDims&, const GemmDims&) = default;
};

/// Throws shape_mismatch unless A is m x l and B is l x n.
template <class T>
void check_gemm_shapes(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const GemmDims& dims);

/// The straightforward product program over grid(m, n) with captures "A"
/// and "B": one element per C entry, k ascending.
Program make_mxm_program(ScalarKind kind, std::int64_t l);

template <class T>
DenseMatrix<T> mod2am_simple(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const GemmDims& dims,
                             Backend& backend, RunStats* stats = nullptr);

/// 4x4 register-block variant. A and B are repacked so one Value holds four
/// row-adjacent scalars; each program instance produces a 4x4 tile of C.
/// Throws dimension unless m, n and l are multiples of 4.
template <class T>
DenseMatrix<T> mod2am_vec4(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const GemmDims& dims,
                           Backend& backend, RunStats* stats = nullptr);

/// Swizzled-block variant. Operands are zero-padded to block multiples and
/// stored block-contiguously; a block microkernel program accumulates each
/// C block over k-blocks while the next (A, B) block pair is staged into the
/// other of two scratch slots.
template <class T>
DenseMatrix<T> mod2am_blocked(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const GemmDims& dims,
                              Backend& backend, int block = kDefaultBlock, RunStats* stats = nullptr);

/// Compressed sparse row matrix. Column indices and row pointers are int32.
template <class T>
struct CsrMatrix {
  std::int64_t nrows = 0;
  std::int64_t ncols = 0;
  std::vector<T> matvals;
  std::vector<std::int32_t> indx;
  std::vector<std::int32_t> rowp;

  std::int64_t nelmts() const noexcept { return static_cast<std::int64_t>(matvals.size()); }
  /// Throws format on any structural violation.
  void validate() const;
  DenseMatrix<T> to_dense() const;
};

/// Drops entries with |d| <= zero_tol; columns ascend within each row.
template <class T>
CsrMatrix<T> csr_from_dense(const DenseMatrix<T>& d, double zero_tol = 0.0);

/// outvec[i] = sum over the row's entries in storage order.
/// Throws format for a malformed matrix and shape_mismatch if
/// invec.size() != ncols.
template <class T>
std::vector<T> mod2as(const CsrMatrix<T>& csr, const std::vector<T>& invec, Backend& backend,
                      RunStats* stats = nullptr);

enum class FftDirection { forward, inverse };

template <class T>
struct FftPlan {
  std::int64_t n = 0;
  int stages = 0;
  std::vector<std::int32_t> permutation;   // bit reversal over log2(n) bits
  std::vector<std::complex<T>> twiddles;   // exp(-2 pi i k / n), k < n/2
};

/// Throws dimension unless n is a power of two (n >= 1).
template <class T>
FftPlan<T> make_fft_plan(std::int64_t n);

/// Forward: X[k] = sum_j x[j] exp(-2 pi i j k / n). Inverse uses conjugate
/// twiddles and scales by 1/n. Decimation in time: one permutation program,
/// then log2(n) butterfly programs over grid(n/2), each writing a fresh
/// buffer.
template <class T>
std::vector<std::complex<T>> mod2f(const std::vector<std::complex<T>>& x, FftDirection direction,
                                   Backend& backend, RunStats* stats = nullptr);
template <class T>
std::vector<std::complex<T>> mod2f(const FftPlan<T>& plan, const std::vector<std::complex<T>>& x,
                                   FftDirection direction, Backend& backend, RunStats* stats = nullptr);

}  // namespace streamforge
