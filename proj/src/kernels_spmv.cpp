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

#include <cmath>
#include <limits>
#include <string>

#include "kernel_util.hpp"
#include "streamforge/kernels.hpp"

namespace streamforge {

namespace {

[[noreturn]] void format_error(const std::string& msg) { throw Error(ErrorCode::format, "CSR: " + msg); }

Program make_spmxv_program(ScalarKind kind) {
  ProgramBuilder pb;
  Expr i = pb.input(ScalarKind::i32, 1);
  Capture matvals = pb.capture("matvals", kind, 1, 1);
  Capture indx = pb.capture("indx", ScalarKind::i32, 1, 1);
  Capture rowp = pb.capture("rowp", ScalarKind::i32, 1, 1);
  Capture invec = pb.capture("invec", kind, 1, 1);
  Accumulator c = pb.accumulator(detail::zero(pb, kind));
  pb.loop(rowp[i], rowp[i + detail::i32_const(pb, 1)], [&](Expr j) {
    pb.accumulate(c, matvals[j] * invec[indx[j]]);
  });
  pb.output(c.value());
  return pb.build();
}

}  // namespace

template <class T>
void CsrMatrix<T>::validate() const {
  constexpr auto kMax = std::numeric_limits<std::int32_t>::max();
  if (nrows < 1 || ncols < 1 || nrows > kMax || ncols > kMax) format_error("dimensions must be in 1..2^31-1");
  if (nelmts() > kMax) format_error("too many entries for int32 indices");
  if (indx.size() != matvals.size()) format_error("indx and matvals lengths differ");
  if (rowp.size() != static_cast<std::size_t>(nrows) + 1) format_error("rowp must have nrows+1 entries");
  if (rowp.front() != 0) format_error("rowp[0] must be 0");
  if (rowp.back() != nelmts()) format_error("rowp[nrows] must equal nelmts");
  for (std::size_t r = 0; r + 1 < rowp.size(); ++r) {
    if (rowp[r + 1] < rowp[r]) format_error("rowp decreases at row " + std::to_string(r));
  }
  for (std::size_t k = 0; k < indx.size(); ++k) {
    if (indx[k] < 0 || indx[k] >= ncols) format_error("column index out of range at entry " + std::to_string(k));
  }
}

template <class T>
DenseMatrix<T> CsrMatrix<T>::to_dense() const {
  validate();
  DenseMatrix<T> d(static_cast<std::size_t>(nrows), static_cast<std::size_t>(ncols));
  for (std::int64_t r = 0; r < nrows; ++r) {
    for (std::int32_t k = rowp[r]; k < rowp[r + 1]; ++k) d(r, indx[k]) += matvals[k];
  }
  return d;
}

template <class T>
CsrMatrix<T> csr_from_dense(const DenseMatrix<T>& d, double zero_tol) {
  CsrMatrix<T> csr;
  csr.nrows = static_cast<std::int64_t>(d.rows);
  csr.ncols = static_cast<std::int64_t>(d.cols);
  csr.rowp.push_back(0);
  for (std::size_t r = 0; r < d.rows; ++r) {
    for (std::size_t c = 0; c < d.cols; ++c) {
      const T v = d(r, c);
      if (std::abs(static_cast<double>(v)) > zero_tol) {
        csr.matvals.push_back(v);
        csr.indx.push_back(static_cast<std::int32_t>(c));
      }
    }
    csr.rowp.push_back(static_cast<std::int32_t>(csr.matvals.size()));
  }
  return csr;
}

template <class T>
std::vector<T> mod2as(const CsrMatrix<T>& csr, const std::vector<T>& invec, Backend& backend, RunStats* stats) {
  csr.validate();
  if (static_cast<std::int64_t>(invec.size()) != csr.ncols) {
    throw Error(ErrorCode::shape_mismatch, "invec has " + std::to_string(invec.size()) + " entries, matrix has " +
                                               std::to_string(csr.ncols) + " columns");
  }
  const Program spmxv = make_spmxv_program(kind_of_v<T>);
  // Empty arrays cannot be StreamArrays; a matrix without entries still
  // binds one (never read) slot.
  const std::size_t stored = std::max<std::size_t>(1, csr.matvals.size());
  std::vector<T> vals = csr.matvals;
  std::vector<std::int32_t> cols = csr.indx;
  vals.resize(stored);
  cols.resize(stored);
  const StreamArray matvals(Shape(static_cast<std::int64_t>(stored)), 1, std::move(vals));
  const StreamArray indx(Shape(static_cast<std::int64_t>(stored)), 1, std::move(cols));
  const StreamArray rowp(Shape(csr.nrows + 1), 1, csr.rowp);
  const StreamArray in(Shape(csr.ncols), 1, invec);
  RunResult r = backend.run(spmxv, {grid(csr.nrows)},
                            {{"matvals", &matvals}, {"indx", &indx}, {"rowp", &rowp}, {"invec", &in}});
  detail::add_stats(stats, r.stats);
  return std::move(r.outputs[0]).template release<T>();
}

template struct CsrMatrix<float>;
template struct CsrMatrix<double>;
template CsrMatrix<float> csr_from_dense<float>(const DenseMatrix<float>&, double);
template CsrMatrix<double> csr_from_dense<double>(const DenseMatrix<double>&, double);
template std::vector<float> mod2as<float>(const CsrMatrix<float>&, const std::vector<float>&, Backend&, RunStats*);
template std::vector<double> mod2as<double>(const CsrMatrix<double>&, const std::vector<double>&, Backend&,
                                            RunStats*);

}  // namespace streamforge
