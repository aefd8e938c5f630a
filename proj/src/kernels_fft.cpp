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

// Radix-2 decimation in time with constant geometry. After the bit-reversal
// stage every butterfly stage reads the pair (x[2e], x[2e+1]) for element e
// of grid(n/2) and writes u + t to slot e and u - t to slot e + n/2 of the
// next buffer, with t = W * v. Stage s (0-based) uses twiddle index
// (e / q) * q with q = n >> (s + 1). The last stage leaves the result in
// natural order.

#include <cmath>
#include <numbers>
#include <string>

#include "kernel_util.hpp"
#include "streamforge/kernels.hpp"

namespace streamforge {

namespace {

using detail::i32_const;

Program make_permute_program(ScalarKind kind) {
  ProgramBuilder pb;
  Expr i = pb.input(ScalarKind::i32, 1);
  Capture x = pb.capture("x", kind, 2, 1);
  Capture perm = pb.capture("perm", ScalarKind::i32, 1, 1);
  pb.output(x[perm[i]]);
  return pb.build();
}

// Two outputs over grid(n/2): the top and bottom halves of the next buffer.
Program make_butterfly_program(ScalarKind kind, std::int64_t q) {
  ProgramBuilder pb;
  Expr e = pb.input(ScalarKind::i32, 1);
  Capture x = pb.capture("x", kind, 2, 1);
  Capture w = pb.capture("w", kind, 2, 1);
  Expr two = i32_const(pb, 2);
  Expr u = x[e * two];
  Expr v = x[e * two + i32_const(pb, 1)];
  Expr qc = i32_const(pb, q);
  Expr tw = w[e / qc * qc];
  Expr t = pack({tw[0] * v[0] - tw[1] * v[1], tw[0] * v[1] + tw[1] * v[0]});
  pb.output(u + t);
  pb.output(u - t);
  return pb.build();
}

Program make_scale_program(ScalarKind kind, double factor) {
  ProgramBuilder pb;
  Expr x = pb.input(kind, 2);
  Value f(kind, 1);
  if (kind == ScalarKind::f32) {
    f = Value::f32(static_cast<float>(factor));
  } else {
    f = Value::f64(factor);
  }
  pb.output(x * pb.constant(f));
  return pb.build();
}

template <class T>
StreamArray to_stream(const std::vector<std::complex<T>>& v) {
  std::vector<T> scalars(v.size() * 2);
  for (std::size_t k = 0; k < v.size(); ++k) {
    scalars[2 * k] = v[k].real();
    scalars[2 * k + 1] = v[k].imag();
  }
  return StreamArray(Shape(static_cast<std::int64_t>(v.size())), 2, std::move(scalars));
}

}  // namespace

template <class T>
FftPlan<T> make_fft_plan(std::int64_t n) {
  if (n < 1 || (n & (n - 1)) != 0 || n > (std::int64_t{1} << 30)) {
    throw Error(ErrorCode::dimension, "FFT length must be a power of two, got " + std::to_string(n));
  }
  FftPlan<T> plan;
  plan.n = n;
  while ((std::int64_t{1} << plan.stages) < n) ++plan.stages;
  plan.permutation.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t r = 0;
    for (int b = 0; b < plan.stages; ++b) r |= ((i >> b) & 1) << (plan.stages - 1 - b);
    plan.permutation[i] = static_cast<std::int32_t>(r);
  }
  plan.twiddles.resize(static_cast<std::size_t>(n / 2));
  for (std::int64_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    plan.twiddles[k] = {static_cast<T>(std::cos(angle)), static_cast<T>(std::sin(angle))};
  }
  return plan;
}

template <class T>
std::vector<std::complex<T>> mod2f(const FftPlan<T>& plan, const std::vector<std::complex<T>>& x,
                                   FftDirection direction, Backend& backend, RunStats* stats) {
  const std::int64_t n = plan.n;
  if (static_cast<std::int64_t>(x.size()) != n) {
    throw Error(ErrorCode::shape_mismatch, "signal length " + std::to_string(x.size()) + " does not match plan length " +
                                               std::to_string(n));
  }
  constexpr ScalarKind kind = kind_of_v<T>;
  const StreamArray perm(Shape(n), 1, plan.permutation);
  StreamArray buffer = to_stream(x);
  {
    RunResult r = backend.run(make_permute_program(kind), {grid(n)}, {{"x", &buffer}, {"perm", &perm}});
    detail::add_stats(stats, r.stats);
    buffer = std::move(r.outputs[0]);
  }

  if (plan.stages > 0) {
    std::vector<std::complex<T>> w = plan.twiddles;
    if (direction == FftDirection::inverse) {
      for (auto& z : w) z = std::conj(z);
    }
    const StreamArray twiddles = to_stream(w);
    const GridArray half = grid(n / 2);
    for (int s = 0; s < plan.stages; ++s) {
      RunResult r = backend.run(make_butterfly_program(kind, n >> (s + 1)), {half},
                                {{"x", &buffer}, {"w", &twiddles}});
      detail::add_stats(stats, r.stats);
      std::vector<T> next = std::move(r.outputs[0]).template release<T>();
      const auto bottom = r.outputs[1].template scalars<T>();
      next.insert(next.end(), bottom.begin(), bottom.end());
      buffer = StreamArray(Shape(n), 2, std::move(next));
    }
  }

  if (direction == FftDirection::inverse) {
    RunResult r = backend.run(make_scale_program(kind, 1.0 / static_cast<double>(n)), {buffer});
    detail::add_stats(stats, r.stats);
    buffer = std::move(r.outputs[0]);
  }

  const auto scalars = buffer.template scalars<T>();
  std::vector<std::complex<T>> out(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {scalars[2 * k], scalars[2 * k + 1]};
  return out;
}

template <class T>
std::vector<std::complex<T>> mod2f(const std::vector<std::complex<T>>& x, FftDirection direction, Backend& backend,
                                   RunStats* stats) {
  return mod2f(make_fft_plan<T>(static_cast<std::int64_t>(x.size())), x, direction, backend, stats);
}

#define SF_INSTANTIATE(T)                                                                                        \
  template FftPlan<T> make_fft_plan<T>(std::int64_t);                                                          \
  template std::vector<std::complex<T>> mod2f<T>(const FftPlan<T>&, const std::vector<std::complex<T>>&,       \
                                                 FftDirection, Backend&, RunStats*);                           \
  template std::vector<std::complex<T>> mod2f<T>(const std::vector<std::complex<T>>&, FftDirection, Backend&, \
                                                 RunStats*);

SF_INSTANTIATE(float)
SF_INSTANTIATE(double)

#undef SF_INSTANTIATE

}  // namespace streamforge
