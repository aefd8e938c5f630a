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

#include "streamforge/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "streamforge/backend.hpp"

namespace streamforge {

template <class T>
DenseMatrix<T> gemm_oracle(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const GemmDims& dims) {
  check_gemm_shapes(a, b, dims);
  DenseMatrix<T> c(a.rows, b.cols);
  // i-k-j order keeps B reads sequential; each entry still sums over
  // ascending k.
  std::vector<double> sum(b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) sum[j] += aik * static_cast<double>(b(k, j));
    }
    for (std::size_t j = 0; j < b.cols; ++j) c(i, j) = static_cast<T>(sum[j]);
  }
  return c;
}

namespace {

constexpr std::size_t kKBlock = 128;
constexpr std::size_t kJBlock = 512;

template <class T>
void gemm_rows(const DenseMatrix<T>& a, const DenseMatrix<T>& b, DenseMatrix<T>& c, std::size_t row_begin,
               std::size_t row_end) {
  const std::size_t n = b.cols;
  const std::size_t l = a.cols;
  for (std::size_t jj = 0; jj < n; jj += kJBlock) {
    const std::size_t j_end = std::min(n, jj + kJBlock);
    for (std::size_t kk = 0; kk < l; kk += kKBlock) {
      const std::size_t k_end = std::min(l, kk + kKBlock);
      for (std::size_t i = row_begin; i < row_end; ++i) {
        T* __restrict crow = c.data.data() + i * n;
        const T* arow = a.data.data() + i * l;
        for (std::size_t k = kk; k < k_end; ++k) {
          const T aik = arow[k];
          const T* __restrict brow = b.data.data() + k * n;
          for (std::size_t j = jj; j < j_end; ++j) crow[j] += aik * brow[j];
        }
      }
    }
  }
}

}  // namespace

template <class T>
DenseMatrix<T> gemm_fast_native(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const GemmDims& dims,
                                int threads) {
  check_gemm_shapes(a, b, dims);
  DenseMatrix<T> c(a.rows, b.cols);
  const int workers = std::clamp<int>(threads > 0 ? threads : default_worker_count(), 1,
                                      static_cast<int>(std::min<std::size_t>(a.rows, 4096)));
  const auto ranges = partition(a.rows, workers);
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < ranges.size(); ++w) {
    pool.emplace_back([&, r = ranges[w]] { gemm_rows(a, b, c, r.begin, r.end); });
  }
  gemm_rows(a, b, c, ranges[0].begin, ranges[0].end);
  pool.clear();
  return c;
}

template <class T>
std::vector<T> spmv_oracle(const CsrMatrix<T>& csr, const std::vector<T>& invec) {
  csr.validate();
  if (static_cast<std::int64_t>(invec.size()) != csr.ncols) {
    throw Error(ErrorCode::shape_mismatch, "invec length does not match ncols");
  }
  std::vector<T> out(static_cast<std::size_t>(csr.nrows));
  for (std::int64_t i = 0; i < csr.nrows; ++i) {
    double sum = 0;
    for (std::int32_t j = csr.rowp[i]; j < csr.rowp[i + 1]; ++j) {
      sum += static_cast<double>(csr.matvals[j]) * static_cast<double>(invec[csr.indx[j]]);
    }
    out[i] = static_cast<T>(sum);
  }
  return out;
}

template <class T>
std::vector<T> spmv_native(const CsrMatrix<T>& csr, const std::vector<T>& invec) {
  csr.validate();
  if (static_cast<std::int64_t>(invec.size()) != csr.ncols) {
    throw Error(ErrorCode::shape_mismatch, "invec length does not match ncols");
  }
  std::vector<T> out(static_cast<std::size_t>(csr.nrows));
  for (std::int64_t i = 0; i < csr.nrows; ++i) {
    T sum = 0;
    for (std::int32_t j = csr.rowp[i]; j < csr.rowp[i + 1]; ++j) sum += csr.matvals[j] * invec[csr.indx[j]];
    out[i] = sum;
  }
  return out;
}

template <class T>
std::vector<std::complex<double>> dft_oracle(const std::vector<std::complex<T>>& x, FftDirection direction) {
  const std::size_t n = x.size();
  const double sign = direction == FftDirection::forward ? -1.0 : 1.0;
  // W^(jk) only depends on jk mod n, so one table of n roots suffices and
  // avoids the drift of evaluating large angles.
  std::vector<std::complex<double>> roots(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    roots[k] = {std::cos(angle), std::sin(angle)};
  }
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> sum = 0;
    std::size_t idx = 0;
    for (std::size_t j = 0; j < n; ++j) {
      sum += std::complex<double>(x[j]) * roots[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    out[k] = direction == FftDirection::forward ? sum : sum / static_cast<double>(n);
  }
  return out;
}

template <class T>
std::vector<std::complex<T>> fft_native(const std::vector<std::complex<T>>& x, FftDirection direction) {
  const FftPlan<T> plan = make_fft_plan<T>(static_cast<std::int64_t>(x.size()));
  const std::size_t n = x.size();
  std::vector<std::complex<T>> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[plan.permutation[i]];
  for (std::size_t half = 1; half < n; half *= 2) {
    const std::size_t stride = n / (2 * half);
    for (std::size_t base = 0; base < n; base += 2 * half) {
      for (std::size_t j = 0; j < half; ++j) {
        std::complex<T> w = plan.twiddles[j * stride];
        if (direction == FftDirection::inverse) w = std::conj(w);
        const std::complex<T> u = y[base + j];
        const std::complex<T> v = y[base + j + half];
        const std::complex<T> t(w.real() * v.real() - w.imag() * v.imag(), w.real() * v.imag() + w.imag() * v.real());
        y[base + j] = u + t;
        y[base + j + half] = u - t;
      }
    }
  }
  if (direction == FftDirection::inverse) {
    const T scale = static_cast<T>(1.0 / static_cast<double>(n));
    for (auto& z : y) z *= scale;
  }
  return y;
}

template <class T>
std::vector<std::complex<double>> fft_oracle(const std::vector<std::complex<T>>& x, FftDirection direction) {
  if (x.size() <= kDirectDftLimit) return dft_oracle(x, direction);
  return fft_native(std::vector<std::complex<double>>(x.begin(), x.end()), direction);
}

namespace {

double scaled_difference(double value, double reference, double scale) {
  const double diff = std::abs(value - reference);
  if (diff == 0) return 0;
  if (scale == 0) return std::numeric_limits<double>::infinity();
  return diff / scale;
}

}  // namespace

template <class T>
double gemm_error(const DenseMatrix<T>& c, const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  if (c.rows != a.rows || c.cols != b.cols || a.cols != b.rows) {
    throw Error(ErrorCode::shape_mismatch, "gemm_error: inconsistent shapes");
  }
  double worst = 0;
  std::vector<double> sum(b.cols), abs_sum(b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(abs_sum.begin(), abs_sum.end(), 0.0);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) {
        const double p = aik * static_cast<double>(b(k, j));
        sum[j] += p;
        abs_sum[j] += std::abs(p);
      }
    }
    for (std::size_t j = 0; j < b.cols; ++j) {
      const double value = static_cast<double>(c(i, j));
      if (std::isnan(value)) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, scaled_difference(value, sum[j], abs_sum[j]));
    }
  }
  return worst;
}

template <class T>
double spmv_error(const std::vector<T>& out, const CsrMatrix<T>& csr, const std::vector<T>& invec) {
  if (static_cast<std::int64_t>(out.size()) != csr.nrows) {
    throw Error(ErrorCode::shape_mismatch, "spmv_error: output length does not match nrows");
  }
  double worst = 0;
  for (std::int64_t i = 0; i < csr.nrows; ++i) {
    double sum = 0, abs_sum = 0;
    for (std::int32_t j = csr.rowp[i]; j < csr.rowp[i + 1]; ++j) {
      const double p = static_cast<double>(csr.matvals[j]) * static_cast<double>(invec[csr.indx[j]]);
      sum += p;
      abs_sum += std::abs(p);
    }
    const double value = static_cast<double>(out[i]);
    if (std::isnan(value)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, scaled_difference(value, sum, abs_sum));
  }
  return worst;
}

template <class T>
double relative_l2_error(const std::vector<std::complex<T>>& x, const std::vector<std::complex<double>>& ref) {
  if (x.size() != ref.size()) throw Error(ErrorCode::shape_mismatch, "relative_l2_error: length mismatch");
  double num = 0, den = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    num += std::norm(std::complex<double>(x[k]) - ref[k]);
    den += std::norm(ref[k]);
  }
  if (std::isnan(num)) return std::numeric_limits<double>::infinity();
  return den == 0 ? std::sqrt(num) : std::sqrt(num / den);
}

template <class T>
std::int64_t max_row_length(const CsrMatrix<T>& csr) {
  std::int64_t longest = 1;
  for (std::size_t r = 0; r + 1 < csr.rowp.size(); ++r) longest = std::max<std::int64_t>(longest, csr.rowp[r + 1] - csr.rowp[r]);
  return longest;
}

#define SF_INSTANTIATE(T)                                                                                       \
  template DenseMatrix<T> gemm_oracle<T>(const DenseMatrix<T>&, const DenseMatrix<T>&, const GemmDims&);      \
  template DenseMatrix<T> gemm_fast_native<T>(const DenseMatrix<T>&, const DenseMatrix<T>&, const GemmDims&,  \
                                              int);                                                           \
  template std::vector<T> spmv_oracle<T>(const CsrMatrix<T>&, const std::vector<T>&);                          \
  template std::vector<T> spmv_native<T>(const CsrMatrix<T>&, const std::vector<T>&);                          \
  template std::vector<std::complex<double>> dft_oracle<T>(const std::vector<std::complex<T>>&, FftDirection); \
  template std::vector<std::complex<double>> fft_oracle<T>(const std::vector<std::complex<T>>&, FftDirection); \
  template std::vector<std::complex<T>> fft_native<T>(const std::vector<std::complex<T>>&, FftDirection);      \
  template double gemm_error<T>(const DenseMatrix<T>&, const DenseMatrix<T>&, const DenseMatrix<T>&);          \
  template double spmv_error<T>(const std::vector<T>&, const CsrMatrix<T>&, const std::vector<T>&);            \
  template double relative_l2_error<T>(const std::vector<std::complex<T>>&,                                    \
                                       const std::vector<std::complex<double>>&);                              \
  template std::int64_t max_row_length<T>(const CsrMatrix<T>&);

SF_INSTANTIATE(float)
SF_INSTANTIATE(double)

#undef SF_INSTANTIATE

}  // namespace streamforge
