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

#include "evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <type_traits>

namespace streamforge::detail {

namespace {

using I32 = std::int32_t;

template <class T>
inline T read(const Lanes* regs, const Operand& o, int w) {
  return lanes_of<T>(regs[o.reg])[o.lane + w * o.step];
}

template <class T>
inline T add(T a, T b) {
  if constexpr (std::is_same_v<T, I32>) {
    return static_cast<I32>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
  } else {
    return a + b;
  }
}

template <class T>
inline T sub(T a, T b) {
  if constexpr (std::is_same_v<T, I32>) {
    return static_cast<I32>(static_cast<std::uint32_t>(a) - static_cast<std::uint32_t>(b));
  } else {
    return a - b;
  }
}

template <class T>
inline T mul(T a, T b) {
  if constexpr (std::is_same_v<T, I32>) {
    return static_cast<I32>(static_cast<std::uint32_t>(a) * static_cast<std::uint32_t>(b));
  } else {
    return a * b;
  }
}

[[noreturn, gnu::noinline, gnu::cold]] void throw_division_by_zero() {
  throw Error(ErrorCode::arithmetic, "integer division by zero");
}

template <class T>
inline T div(T a, T b) {
  if constexpr (std::is_same_v<T, I32>) {
    if (b == 0) throw_division_by_zero();
    if (a == std::numeric_limits<I32>::min() && b == -1) return a;
    return a / b;
  } else {
    return a / b;
  }
}

template <class T>
inline T fused(T a, T b, T c) {
  if constexpr (std::is_same_v<T, I32>) {
    return add(mul(a, b), c);
  } else {
    return std::fma(a, b, c);
  }
}

[[noreturn, gnu::noinline, gnu::cold]] void throw_read_error(const BoundCapture& cap,
                                                            std::vector<std::int64_t> index) {
  throw IndexedReadError(*cap.name, std::move(index), {});
}

// All operand lanes are read before the destination is written, so an
// accumulator may appear on both sides of a statement. W is the instruction
// width, fixed per dispatch case so the lane loops unroll.
template <class T, int W, class F>
inline void binary(Lanes* regs, const Instr& in, F f) {
  T out[W];
  for (int w = 0; w < W; ++w) out[w] = f(read<T>(regs, in.a, w), read<T>(regs, in.b, w));
  T* d = lanes_of<T>(regs[in.dst]);
  for (int w = 0; w < W; ++w) d[w] = out[w];
}

template <class T, int W>
inline void op_add(Lanes* regs, const Instr& in) { binary<T, W>(regs, in, add<T>); }
template <class T, int W>
inline void op_sub(Lanes* regs, const Instr& in) { binary<T, W>(regs, in, sub<T>); }
template <class T, int W>
inline void op_mul(Lanes* regs, const Instr& in) { binary<T, W>(regs, in, mul<T>); }
template <class T, int W>
inline void op_div(Lanes* regs, const Instr& in) { binary<T, W>(regs, in, div<T>); }

template <class T, int W>
inline void op_copy(Lanes* regs, const Instr& in) {
  T out[W];
  for (int w = 0; w < W; ++w) out[w] = read<T>(regs, in.a, w);
  T* d = lanes_of<T>(regs[in.dst]);
  for (int w = 0; w < W; ++w) d[w] = out[w];
}

template <class T, int>
inline void op_set_lane(Lanes* regs, const Instr& in) {
  lanes_of<T>(regs[in.dst])[in.aux] = read<T>(regs, in.a, 0);
}

template <class T, int W>
inline void op_fma(Lanes* regs, const Instr& in) {
  T out[W];
  for (int w = 0; w < W; ++w) {
    out[w] = fused(read<T>(regs, in.a, w), read<T>(regs, in.b, w), read<T>(regs, in.c, w));
  }
  T* d = lanes_of<T>(regs[in.dst]);
  for (int w = 0; w < W; ++w) d[w] = out[w];
}

template <class T, int W>
inline void op_acc_add(Lanes* regs, const Instr& in) {
  T out[W];
  T* d = lanes_of<T>(regs[in.dst]);
  for (int w = 0; w < W; ++w) out[w] = add(d[w], read<T>(regs, in.a, w));
  for (int w = 0; w < W; ++w) d[w] = out[w];
}

// acc += a * b with the product rounded before the add, exactly as the
// unfused Accumulate(Arith(mul)) pair would compute it.
template <class T, int W>
inline void op_acc_mul(Lanes* regs, const Instr& in) {
  T out[W];
  T* d = lanes_of<T>(regs[in.dst]);
  for (int w = 0; w < W; ++w) out[w] = add(d[w], mul(read<T>(regs, in.a, w), read<T>(regs, in.b, w)));
  for (int w = 0; w < W; ++w) d[w] = out[w];
}

template <class T, int W>
inline void op_gather1(Lanes* regs, const Instr& in, const BoundCapture* caps, bool trusted) {
  const BoundCapture& cap = caps[in.aux];
  const I32 i = read<I32>(regs, in.a, 0);
  if (!trusted && static_cast<std::uint32_t>(i) >= cap.ext0) [[unlikely]] {
    throw_read_error(cap, {i});
  }
  const T* src = static_cast<const T*>(cap.data) + static_cast<std::size_t>(i) * W;
  T* d = lanes_of<T>(regs[in.dst]);
  for (int w = 0; w < W; ++w) d[w] = src[w];
}

template <class T, int W>
inline void op_gather2(Lanes* regs, const Instr& in, const BoundCapture* caps, bool trusted) {
  const BoundCapture& cap = caps[in.aux];
  const I32 r = read<I32>(regs, in.a, 0);
  const I32 c = read<I32>(regs, in.b, 0);
  if (!trusted && (static_cast<std::uint32_t>(r) >= cap.ext0 || static_cast<std::uint32_t>(c) >= cap.ext1))
      [[unlikely]] {
    throw_read_error(cap, {r, c});
  }
  const T* src = static_cast<const T*>(cap.data) +
                 (static_cast<std::size_t>(r) * cap.ext1 + static_cast<std::size_t>(c)) * W;
  T* d = lanes_of<T>(regs[in.dst]);
  for (int w = 0; w < W; ++w) d[w] = src[w];
}

// ---- Lockstep batches ------------------------------------------------------
//
// The same handlers, with every register widened to kBatch elements. The
// per-element arithmetic is identical to the scalar path, so results are
// bit-identical; only the dispatch cost is shared across the batch.

struct BatchRegs {
  std::byte* base;

  template <class T>
  T* lane(std::uint16_t reg, int c) const {
    return reinterpret_cast<T*>(base + (static_cast<std::size_t>(reg) * 4 + static_cast<std::size_t>(c)) * kBatch * 8);
  }
  template <class T>
  const T* operand(const Operand& o, int w) const {
    return lane<T>(o.reg, o.lane + w * o.step);
  }
};

template <class T, int W, class F>
inline void batch_binary(const BatchRegs& r, const Instr& in, int n, F f) {
  const T* a[W];
  const T* b[W];
  T* d[W];
  for (int w = 0; w < W; ++w) {
    a[w] = r.operand<T>(in.a, w);
    b[w] = r.operand<T>(in.b, w);
    d[w] = r.lane<T>(in.dst, w);
  }
  for (int e = 0; e < n; ++e) {
    T out[W];
    for (int w = 0; w < W; ++w) out[w] = f(a[w][e], b[w][e]);
    for (int w = 0; w < W; ++w) d[w][e] = out[w];
  }
}

template <class T, int W>
inline void batch_add(const BatchRegs& r, const Instr& in, int n) { batch_binary<T, W>(r, in, n, add<T>); }
template <class T, int W>
inline void batch_sub(const BatchRegs& r, const Instr& in, int n) { batch_binary<T, W>(r, in, n, sub<T>); }
template <class T, int W>
inline void batch_mul(const BatchRegs& r, const Instr& in, int n) { batch_binary<T, W>(r, in, n, mul<T>); }
template <class T, int W>
inline void batch_div(const BatchRegs& r, const Instr& in, int n) { batch_binary<T, W>(r, in, n, div<T>); }

// acc_add and acc_mul: the accumulator is the destination and may also be
// an operand.
template <class T, int W>
inline void batch_acc_add(const BatchRegs& r, const Instr& in, int n) {
  batch_binary<T, W>(r, Instr{in.op, in.width, in.key, in.dst, Operand{in.dst, 0, 1}, in.a, {}, 0}, n, add<T>);
}

template <class T, int W>
inline void batch_acc_mul(const BatchRegs& r, const Instr& in, int n) {
  const T* a[W];
  const T* b[W];
  T* d[W];
  for (int w = 0; w < W; ++w) {
    a[w] = r.operand<T>(in.a, w);
    b[w] = r.operand<T>(in.b, w);
    d[w] = r.lane<T>(in.dst, w);
  }
  for (int e = 0; e < n; ++e) {
    T out[W];
    for (int w = 0; w < W; ++w) out[w] = add(d[w][e], mul(a[w][e], b[w][e]));
    for (int w = 0; w < W; ++w) d[w][e] = out[w];
  }
}

template <class T, int W>
inline void batch_copy(const BatchRegs& r, const Instr& in, int n) {
  const T* a[W];
  T* d[W];
  for (int w = 0; w < W; ++w) {
    a[w] = r.operand<T>(in.a, w);
    d[w] = r.lane<T>(in.dst, w);
  }
  for (int e = 0; e < n; ++e) {
    T out[W];
    for (int w = 0; w < W; ++w) out[w] = a[w][e];
    for (int w = 0; w < W; ++w) d[w][e] = out[w];
  }
}

template <class T, int>
inline void batch_set_lane(const BatchRegs& r, const Instr& in, int n) {
  const T* a = r.operand<T>(in.a, 0);
  T* d = r.lane<T>(in.dst, in.aux);
  for (int e = 0; e < n; ++e) d[e] = a[e];
}

template <class T, int W>
inline void batch_fma(const BatchRegs& r, const Instr& in, int n) {
  const T* a[W];
  const T* b[W];
  const T* c[W];
  T* d[W];
  for (int w = 0; w < W; ++w) {
    a[w] = r.operand<T>(in.a, w);
    b[w] = r.operand<T>(in.b, w);
    c[w] = r.operand<T>(in.c, w);
    d[w] = r.lane<T>(in.dst, w);
  }
  for (int e = 0; e < n; ++e) {
    T out[W];
    for (int w = 0; w < W; ++w) out[w] = fused(a[w][e], b[w][e], c[w][e]);
    for (int w = 0; w < W; ++w) d[w][e] = out[w];
  }
}

template <class T, int W>
inline void batch_gather1(const BatchRegs& r, const Instr& in, int n, const BoundCapture* caps, bool trusted) {
  const BoundCapture& cap = caps[in.aux];
  const I32* idx = r.operand<I32>(in.a, 0);
  const T* data = static_cast<const T*>(cap.data);
  T* d[W];
  for (int w = 0; w < W; ++w) d[w] = r.lane<T>(in.dst, w);
  for (int e = 0; e < n; ++e) {
    const I32 i = idx[e];
    if (!trusted && static_cast<std::uint32_t>(i) >= cap.ext0) [[unlikely]] {
      throw_read_error(cap, {i});
    }
    const T* src = data + static_cast<std::size_t>(i) * W;
    for (int w = 0; w < W; ++w) d[w][e] = src[w];
  }
}

template <class T, int W>
inline void batch_gather2(const BatchRegs& r, const Instr& in, int n, const BoundCapture* caps, bool trusted) {
  const BoundCapture& cap = caps[in.aux];
  const I32* rows = r.operand<I32>(in.a, 0);
  const I32* cols = r.operand<I32>(in.b, 0);
  const T* data = static_cast<const T*>(cap.data);
  T* d[W];
  for (int w = 0; w < W; ++w) d[w] = r.lane<T>(in.dst, w);
  for (int e = 0; e < n; ++e) {
    const I32 i = rows[e];
    const I32 j = cols[e];
    if (!trusted && (static_cast<std::uint32_t>(i) >= cap.ext0 || static_cast<std::uint32_t>(j) >= cap.ext1))
        [[unlikely]] {
      throw_read_error(cap, {i, j});
    }
    const T* src = data + (static_cast<std::size_t>(i) * cap.ext1 + static_cast<std::size_t>(j)) * W;
    for (int w = 0; w < W; ++w) d[w][e] = src[w];
  }
}

template <class T>
void batch_load(const BatchRegs& r, std::uint16_t reg, const BoundInput& in, std::size_t begin, int n) {
  const T* src = static_cast<const T*>(in.data) + begin * static_cast<std::size_t>(in.width);
  for (int w = 0; w < in.width; ++w) {
    T* d = r.lane<T>(reg, w);
    for (int e = 0; e < n; ++e) d[e] = src[static_cast<std::size_t>(e) * in.width + w];
  }
}

template <class T>
void batch_store(const BatchRegs& r, std::uint16_t reg, const BoundOutput& out, std::size_t begin, int n) {
  T* dst = static_cast<T*>(out.data) + begin * static_cast<std::size_t>(out.width);
  for (int w = 0; w < out.width; ++w) {
    const T* s = r.lane<T>(reg, w);
    for (int e = 0; e < n; ++e) dst[static_cast<std::size_t>(e) * out.width + w] = s[e];
  }
}

template <class T>
void batch_fill(const BatchRegs& r, std::uint16_t reg, const Value& v) {
  for (int w = 0; w < v.width(); ++w) {
    T* d = r.lane<T>(reg, w);
    for (int e = 0; e < kBatch; ++e) d[e] = v.get<T>(w);
  }
}

template <class T>
void store(const BoundOutput& out, const Lanes& src, std::size_t linear) {
  T* dst = static_cast<T*>(out.data) + linear * out.width;
  const T* s = lanes_of<T>(src);
  for (int w = 0; w < out.width; ++w) dst[w] = s[w];
}

}  // namespace

BoundCall bind_call(const CompiledProgram& p, const CallPlan& plan, std::span<StreamArray> outputs,
                    bool trusted_gathers) {
  BoundCall call{&p, plan.output_shape, {}, {}, {}, trusted_gathers};
  call.inputs.reserve(plan.inputs.size());
  for (const auto& in : plan.inputs) {
    if (in.is_grid()) {
      call.inputs.push_back({nullptr, in.grid().width(), in.shape().rank()});
    } else {
      call.inputs.push_back({in.array().data(), in.array().width(), in.shape().rank()});
    }
  }
  call.captures.reserve(plan.captures.size());
  for (std::size_t k = 0; k < plan.captures.size(); ++k) {
    const StreamArray& a = *plan.captures[k];
    const auto& decl = p.def.captures[k];
    call.captures.push_back({a.data(), static_cast<std::uint32_t>(a.shape().extent(0)),
                             static_cast<std::uint32_t>(a.rank() == 2 ? a.shape().extent(1) : 1),
                             &decl.name, a.rank()});
  }
  for (auto& o : outputs) {
    call.outputs.push_back({const_cast<void*>(o.data()), o.kind(), o.width()});
  }
  return call;
}

Evaluator::Evaluator(const BoundCall& call) : call_(call), regs_(call.program->register_count) {
  for (const auto& [reg, value] : call.program->constants) regs_[reg] = value.lanes();
}

void Evaluator::evaluate(std::size_t linear, std::size_t row, std::size_t col) {
  const CompiledProgram& p = *call_.program;
  for (std::size_t s = 0; s < call_.inputs.size(); ++s) {
    const BoundInput& in = call_.inputs[s];
    Lanes& reg = regs_[p.input_regs[s]];
    if (in.data == nullptr) {
      if (in.rank == 1) {
        reg.i32[0] = static_cast<I32>(linear);
      } else {
        reg.i32[0] = static_cast<I32>(row);
        reg.i32[1] = static_cast<I32>(col);
      }
    } else {
      const std::size_t bytes = scalar_size(p.def.inputs[s].kind) * in.width;
      std::memcpy(&reg, static_cast<const char*>(in.data) + linear * bytes, bytes);
    }
  }
  execute();
}

void Evaluator::store_outputs(std::size_t linear) {
  const CompiledProgram& p = *call_.program;
  for (std::size_t s = 0; s < call_.outputs.size(); ++s) {
    const BoundOutput& out = call_.outputs[s];
    const Lanes& src = regs_[p.output_regs[s]];
    switch (out.kind) {
      case ScalarKind::f32: store<float>(out, src, linear); break;
      case ScalarKind::f64: store<double>(out, src, linear); break;
      case ScalarKind::i32: store<I32>(out, src, linear); break;
    }
  }
}

const Lanes& Evaluator::output(std::size_t slot) const {
  return regs_[call_.program->output_regs.at(slot)];
}

#define SF_WIDTH_CASES(base, kind, T, fn, ...)                   \
  case dispatch_key(with_kind(Op::base, kind), 1): fn<T, 1>(__VA_ARGS__); break; \
  case dispatch_key(with_kind(Op::base, kind), 2): fn<T, 2>(__VA_ARGS__); break; \
  case dispatch_key(with_kind(Op::base, kind), 3): fn<T, 3>(__VA_ARGS__); break; \
  case dispatch_key(with_kind(Op::base, kind), 4): fn<T, 4>(__VA_ARGS__); break;

#define SF_CASES(base, fn, ...)                                   \
  SF_WIDTH_CASES(base, ScalarKind::f32, float, fn, __VA_ARGS__)  \
  SF_WIDTH_CASES(base, ScalarKind::f64, double, fn, __VA_ARGS__) \
  SF_WIDTH_CASES(base, ScalarKind::i32, I32, fn, __VA_ARGS__)

void Evaluator::execute() {
  Lanes* R = regs_.data();
  const BoundCapture* caps = call_.captures.data();
  const bool trusted = call_.trusted_gathers;
  const Instr* code = call_.program->code.data();
  const auto n = static_cast<std::int32_t>(call_.program->code.size());
  for (std::int32_t pc = 0; pc < n; ++pc) {
    const Instr& in = code[pc];
    switch (in.key) {
      SF_CASES(copy, op_copy, R, in)
      SF_CASES(set_lane, op_set_lane, R, in)
      SF_CASES(add, op_add, R, in)
      SF_CASES(sub, op_sub, R, in)
      SF_CASES(mul, op_mul, R, in)
      SF_CASES(div, op_div, R, in)
      SF_CASES(fma, op_fma, R, in)
      SF_CASES(acc_add, op_acc_add, R, in)
      SF_CASES(acc_mul, op_acc_mul, R, in)
      SF_CASES(gather1, op_gather1, R, in, caps, trusted)
      SF_CASES(gather2, op_gather2, R, in, caps, trusted)
      case dispatch_key(Op::loop_begin, 1): {
        const I32 init = read<I32>(R, in.a, 0);
        const I32 bound = read<I32>(R, in.b, 0);
        R[in.dst].i32[0] = init;
        R[in.c.reg].i32[0] = bound;
        if (!(init < bound)) pc = in.aux - 1;
        break;
      }
      case dispatch_key(Op::loop_end, 1): {
        // var < bound held on entry, so the increment cannot overflow.
        const I32 next = ++R[in.dst].i32[0];
        if (next < R[in.c.reg].i32[0]) pc = in.aux - 1;
        break;
      }
      default:
        break;
    }
  }
}

void Evaluator::evaluate_batch(std::size_t begin, std::size_t count) {
  const CompiledProgram& p = *call_.program;
  if (batch_.empty()) {
    batch_.resize(p.register_count * 4 * kBatch * 8);
    const BatchRegs r{batch_.data()};
    for (const auto& [reg, value] : p.constants) {
      switch (value.kind()) {
        case ScalarKind::f32: batch_fill<float>(r, reg, value); break;
        case ScalarKind::f64: batch_fill<double>(r, reg, value); break;
        case ScalarKind::i32: batch_fill<I32>(r, reg, value); break;
      }
    }
  }
  const BatchRegs r{batch_.data()};
  const int n = static_cast<int>(count);
  for (std::size_t s = 0; s < call_.inputs.size(); ++s) {
    const BoundInput& in = call_.inputs[s];
    const std::uint16_t reg = p.input_regs[s];
    if (in.data != nullptr) {
      switch (p.def.inputs[s].kind) {
        case ScalarKind::f32: batch_load<float>(r, reg, in, begin, n); break;
        case ScalarKind::f64: batch_load<double>(r, reg, in, begin, n); break;
        case ScalarKind::i32: batch_load<I32>(r, reg, in, begin, n); break;
      }
    } else if (in.rank == 1) {
      I32* d = r.lane<I32>(reg, 0);
      for (int e = 0; e < n; ++e) d[e] = static_cast<I32>(begin + static_cast<std::size_t>(e));
    } else {
      const std::size_t stride = call_.output_shape.row_stride();
      std::size_t row = begin / stride, col = begin % stride;
      I32* rows = r.lane<I32>(reg, 0);
      I32* cols = r.lane<I32>(reg, 1);
      for (int e = 0; e < n; ++e) {
        rows[e] = static_cast<I32>(row);
        cols[e] = static_cast<I32>(col);
        if (++col == stride) {
          col = 0;
          ++row;
        }
      }
    }
  }
  execute_batch(n);
  for (std::size_t s = 0; s < call_.outputs.size(); ++s) {
    const BoundOutput& out = call_.outputs[s];
    const std::uint16_t reg = p.output_regs[s];
    switch (out.kind) {
      case ScalarKind::f32: batch_store<float>(r, reg, out, begin, n); break;
      case ScalarKind::f64: batch_store<double>(r, reg, out, begin, n); break;
      case ScalarKind::i32: batch_store<I32>(r, reg, out, begin, n); break;
    }
  }
}

void Evaluator::execute_batch(int n) {
  const BatchRegs R{batch_.data()};
  const BoundCapture* caps = call_.captures.data();
  const bool trusted = call_.trusted_gathers;
  const Instr* code = call_.program->code.data();
  const auto size = static_cast<std::int32_t>(call_.program->code.size());
  for (std::int32_t pc = 0; pc < size; ++pc) {
    const Instr& in = code[pc];
    switch (in.key) {
      SF_CASES(copy, batch_copy, R, in, n)
      SF_CASES(set_lane, batch_set_lane, R, in, n)
      SF_CASES(add, batch_add, R, in, n)
      SF_CASES(sub, batch_sub, R, in, n)
      SF_CASES(mul, batch_mul, R, in, n)
      SF_CASES(div, batch_div, R, in, n)
      SF_CASES(fma, batch_fma, R, in, n)
      SF_CASES(acc_add, batch_acc_add, R, in, n)
      SF_CASES(acc_mul, batch_acc_mul, R, in, n)
      SF_CASES(gather1, batch_gather1, R, in, n, caps, trusted)
      SF_CASES(gather2, batch_gather2, R, in, n, caps, trusted)
      // Loop bounds are element invariant, so element 0 speaks for the batch.
      case dispatch_key(Op::loop_begin, 1): {
        const I32 init = R.operand<I32>(in.a, 0)[0];
        const I32 bound = R.operand<I32>(in.b, 0)[0];
        I32* var = R.lane<I32>(in.dst, 0);
        for (int e = 0; e < n; ++e) var[e] = init;
        R.lane<I32>(in.c.reg, 0)[0] = bound;
        if (!(init < bound)) pc = in.aux - 1;
        break;
      }
      case dispatch_key(Op::loop_end, 1): {
        I32* var = R.lane<I32>(in.dst, 0);
        const I32 next = var[0] + 1;
        for (int e = 0; e < n; ++e) var[e] = next;
        if (next < R.lane<I32>(in.c.reg, 0)[0]) pc = in.aux - 1;
        break;
      }
      default:
        break;
    }
  }
}

#undef SF_WIDTH_CASES
#undef SF_CASES

std::vector<std::size_t> element_index(const Shape& shape, std::size_t linear) {
  if (shape.rank() == 1) return {linear};
  return {linear / shape.row_stride(), linear % shape.row_stride()};
}

namespace {

std::optional<Failure> evaluate_each(const BoundCall& call, Evaluator& ev, std::size_t begin, std::size_t end,
                                     std::atomic<std::size_t>* first_failure) {
  const std::size_t stride = call.output_shape.row_stride();
  const bool rank2 = call.output_shape.rank() == 2;
  std::size_t row = rank2 ? begin / stride : begin;
  std::size_t col = rank2 ? begin % stride : 0;
  for (std::size_t e = begin; e < end; ++e) {
    if (first_failure != nullptr && e > first_failure->load(std::memory_order_relaxed)) break;
    std::exception_ptr error;
    try {
      ev.evaluate(e, row, col);
    } catch (const IndexedReadError& err) {
      error = std::make_exception_ptr(err.at_element(element_index(call.output_shape, e)));
    } catch (const Error& err) {
      std::string where;
      for (auto i : element_index(call.output_shape, e)) where += (where.empty() ? "" : ",") + std::to_string(i);
      error = std::make_exception_ptr(Error(err.code(), std::string(err.what()) + " at element (" + where + ")"));
    }
    if (error) {
      if (first_failure != nullptr) {
        std::size_t seen = first_failure->load();
        while (e < seen && !first_failure->compare_exchange_weak(seen, e)) {
        }
      }
      return Failure{e, error};
    }
    ev.store_outputs(e);
    if (rank2) {
      if (++col == stride) {
        col = 0;
        ++row;
      }
    } else {
      ++row;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Failure> evaluate_range(const BoundCall& call, Evaluator& ev, std::size_t begin,
                                      std::size_t end, std::atomic<std::size_t>* first_failure) {
  if (!call.program->uniform_control || end - begin < 2) {
    return evaluate_each(call, ev, begin, end, first_failure);
  }
  for (std::size_t b = begin; b < end; b += kBatch) {
    if (first_failure != nullptr && b > first_failure->load(std::memory_order_relaxed)) break;
    const std::size_t n = std::min<std::size_t>(kBatch, end - b);
    try {
      ev.evaluate_batch(b, n);
      continue;
    } catch (const Error&) {
    }
    // Replay the faulting batch element by element to report the first
    // failing element exactly as sequential evaluation would.
    if (auto failure = evaluate_each(call, ev, b, b + n, first_failure)) return failure;
  }
  return std::nullopt;
}

}  // namespace streamforge::detail
