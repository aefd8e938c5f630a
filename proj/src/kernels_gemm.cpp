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

#include <array>
#include <future>
#include <string>

#include "kernel_util.hpp"
#include "streamforge/kernels.hpp"

namespace streamforge {

using detail::add_stats;
using detail::i32_const;

template <class T>
void check_gemm_shapes(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const GemmDims& dims) {
  if (dims.m < 1 || dims.n < 1 || dims.l < 1) {
    throw Error(ErrorCode::invalid_shape, "GEMM dimensions must be positive");
  }
  const auto m = static_cast<std::size_t>(dims.m), n = static_cast<std::size_t>(dims.n),
             l = static_cast<std::size_t>(dims.l);
  if (a.rows != m || a.cols != l || b.rows != l || b.cols != n) {
    throw Error(ErrorCode::shape_mismatch,
                "GEMM expects A " + std::to_string(m) + "x" + std::to_string(l) + " and B " + std::to_string(l) +
                    "x" + std::to_string(n) + ", got A " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                    " and B " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
  }
}

Program make_mxm_program(ScalarKind kind, std::int64_t l) {
  ProgramBuilder pb;
  Expr ind = pb.input(ScalarKind::i32, 2);
  Capture a = pb.capture("A", kind, 1, 2);
  Capture b = pb.capture("B", kind, 1, 2);
  Accumulator c = pb.accumulator(detail::zero(pb, kind));
  pb.loop(i32_const(pb, 0), i32_const(pb, l), [&](Expr k) {
    pb.accumulate(c, a[index2(ind[0], k)] * b[index2(k, ind[1])]);
  });
  pb.output(c.value());
  return pb.build();
}

namespace {

// Element (I, J) of grid(m/4, n/4) computes the 4x4 tile of C at rows
// 4I..4I+3, columns 4J..4J+3. A4 is A viewed as (m, l/4) Value4s and B4 is
// B viewed as (l, n/4) Value4s; output r holds tile row r. Each C entry
// still sums its products in ascending k.
Program make_mxm4_program(ScalarKind kind, std::int64_t l) {
  ProgramBuilder pb;
  Expr ind = pb.input(ScalarKind::i32, 2);
  Capture a = pb.capture("A4", kind, 4, 2);
  Capture b = pb.capture("B4", kind, 4, 2);
  Expr four = i32_const(pb, 4);
  Expr row0 = ind[0] * four;
  std::vector<Accumulator> acc;
  for (int r = 0; r < 4; ++r) acc.push_back(pb.accumulator(detail::zero(pb, kind, 4)));
  pb.loop(i32_const(pb, 0), i32_const(pb, l / 4), [&](Expr kb) {
    Expr k0 = kb * four;
    std::vector<Expr> arow, brow;
    for (int r = 0; r < 4; ++r) arow.push_back(a[index2(row0 + i32_const(pb, r), kb)]);
    for (int t = 0; t < 4; ++t) brow.push_back(b[index2(k0 + i32_const(pb, t), ind[1])]);
    for (int r = 0; r < 4; ++r) {
      for (int t = 0; t < 4; ++t) pb.accumulate(acc[r], arow[r][t] * brow[t]);
    }
  });
  for (int r = 0; r < 4; ++r) pb.output(acc[r].value());
  return pb.build();
}

// C block update over one (A, B) block pair: Cnext = Cprev + Ablk * Bblk.
Program make_block_program(ScalarKind kind, int block) {
  ProgramBuilder pb;
  Expr ind = pb.input(ScalarKind::i32, 2);
  Expr cprev = pb.input(kind, 1);
  Capture a = pb.capture("Ablk", kind, 1, 2);
  Capture b = pb.capture("Bblk", kind, 1, 2);
  Accumulator c = pb.accumulator(cprev);
  pb.loop(i32_const(pb, 0), i32_const(pb, block), [&](Expr k) {
    pb.accumulate(c, a[index2(ind[0], k)] * b[index2(k, ind[1])]);
  });
  pb.output(c.value());
  return pb.build();
}

}  // namespace

template <class T>
DenseMatrix<T> mod2am_simple(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const GemmDims& dims,
                             Backend& backend, RunStats* stats) {
  check_gemm_shapes(a, b, dims);
  const Program mxm = make_mxm_program(kind_of_v<T>, dims.l);
  const StreamArray sa(Shape(dims.m, dims.l), 1, a.data);
  const StreamArray sb(Shape(dims.l, dims.n), 1, b.data);
  RunResult r = backend.run(mxm, {grid(dims.m, dims.n)}, {{"A", &sa}, {"B", &sb}});
  add_stats(stats, r.stats);
  return DenseMatrix<T>(a.rows, b.cols, std::move(r.outputs[0]).template release<T>());
}

template <class T>
DenseMatrix<T> mod2am_vec4(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const GemmDims& dims,
                           Backend& backend, RunStats* stats) {
  check_gemm_shapes(a, b, dims);
  if (dims.m % 4 != 0 || dims.n % 4 != 0 || dims.l % 4 != 0) {
    throw Error(ErrorCode::dimension, "mod2am_vec4 needs m, n and l to be multiples of 4");
  }
  const Program mxm4 = make_mxm4_program(kind_of_v<T>, dims.l);
  // Row-major storage already groups four adjacent columns per Value4.
  const StreamArray a4(Shape(dims.m, dims.l / 4), 4, a.data);
  const StreamArray b4(Shape(dims.l, dims.n / 4), 4, b.data);
  RunResult r = backend.run(mxm4, {grid(dims.m / 4, dims.n / 4)}, {{"A4", &a4}, {"B4", &b4}});
  add_stats(stats, r.stats);

  DenseMatrix<T> c(a.rows, b.cols);
  const std::size_t tiles_per_row = b.cols / 4;
  for (int t = 0; t < 4; ++t) {
    const auto tile_rows = r.outputs[t].template scalars<T>();
    for (std::size_t bi = 0; bi < a.rows / 4; ++bi) {
      const T* src = tile_rows.data() + bi * tiles_per_row * 4;
      std::copy(src, src + b.cols, c.data.data() + (bi * 4 + t) * b.cols);
    }
  }
  return c;
}

template <class T>
DenseMatrix<T> mod2am_blocked(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const GemmDims& dims,
                              Backend& backend, int block, RunStats* stats) {
  check_gemm_shapes(a, b, dims);
  if (block < 1) throw Error(ErrorCode::invalid_shape, "block edge must be positive");
  const auto bs = static_cast<std::size_t>(block);
  const SwizzledMatrix<T> sa = swizzle(a, bs);
  const SwizzledMatrix<T> sb = swizzle(b, bs);
  SwizzledMatrix<T> sc(a.rows, b.cols, bs);
  const Program micro = make_block_program(kind_of_v<T>, block);
  const GridArray tile = grid(block, block);
  const Shape tile_shape(block, block);

  struct Pair {
    std::size_t bi, bj, bk;
  };
  std::vector<Pair> schedule;
  for (std::size_t bi = 0; bi < sc.block_rows(); ++bi) {
    for (std::size_t bj = 0; bj < sc.block_cols(); ++bj) {
      for (std::size_t bk = 0; bk < sa.block_cols(); ++bk) schedule.push_back({bi, bj, bk});
    }
  }

  // Two staging slots: while one slot's pair is multiplied, the next pair is
  // copied into the other.
  std::array<StreamArray, 2> slot_a{StreamArray(tile_shape, kind_of_v<T>, 1), StreamArray(tile_shape, kind_of_v<T>, 1)};
  std::array<StreamArray, 2> slot_b = slot_a;
  auto stage = [&](std::size_t s, const Pair& p) {
    const auto ablk = sa.block_data(p.bi, p.bk);
    const auto bblk = sb.block_data(p.bk, p.bj);
    std::copy(ablk.begin(), ablk.end(), slot_a[s].template mutable_scalars<T>().begin());
    std::copy(bblk.begin(), bblk.end(), slot_b[s].template mutable_scalars<T>().begin());
  };

  const StreamArray zeros(tile_shape, kind_of_v<T>, 1);
  StreamArray cblock = zeros;
  stage(0, schedule[0]);
  for (std::size_t p = 0; p < schedule.size(); ++p) {
    const std::size_t s = p % 2;
    std::future<void> next;
    if (p + 1 < schedule.size()) next = std::async(std::launch::async, stage, 1 - s, schedule[p + 1]);
    const Pair& cur = schedule[p];
    RunResult r;
    try {
      r = backend.run(micro, {tile, cur.bk == 0 ? zeros : cblock}, {{"Ablk", &slot_a[s]}, {"Bblk", &slot_b[s]}});
    } catch (...) {
      if (next.valid()) next.wait();
      throw;
    }
    add_stats(stats, r.stats);
    cblock = std::move(r.outputs[0]);
    if (next.valid()) next.get();
    if (cur.bk + 1 == sa.block_cols()) {
      const auto src = cblock.template scalars<T>();
      std::copy(src.begin(), src.end(), sc.mutable_block_data(cur.bi, cur.bj).begin());
    }
  }
  return unswizzle(sc);
}

#define SF_INSTANTIATE(T)                                                                                  \
  template void check_gemm_shapes<T>(const DenseMatrix<T>&, const DenseMatrix<T>&, const GemmDims&);       \
  template DenseMatrix<T> mod2am_simple<T>(const DenseMatrix<T>&, const DenseMatrix<T>&, const GemmDims&, \
                                           Backend&, RunStats*);                                           \
  template DenseMatrix<T> mod2am_vec4<T>(const DenseMatrix<T>&, const DenseMatrix<T>&, const GemmDims&,   \
                                         Backend&, RunStats*);                                             \
  template DenseMatrix<T> mod2am_blocked<T>(const DenseMatrix<T>&, const DenseMatrix<T>&, const GemmDims&, \
                                            Backend&, int, RunStats*);

SF_INSTANTIATE(float)
SF_INSTANTIATE(double)

#undef SF_INSTANTIATE

}  // namespace streamforge
