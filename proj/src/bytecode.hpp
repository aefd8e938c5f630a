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

// Register bytecode that validated programs are lowered to.
//
// Every node owns one register of Lanes. Leaves (constants, inputs, loop
// variables, accumulators) live in fixed registers and emit no code;
// component extraction is folded into operands. Operand lane k of an
// instruction reads lanes[lane + k * step], so step 0 broadcasts one lane.

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "streamforge/program.hpp"

namespace streamforge::detail {

struct Operand {
  std::uint16_t reg = 0;
  std::uint8_t lane = 0;
  std::uint8_t step = 1;
};

// Kind-specialised opcodes come in runs of three: f32, f64, i32.
enum class Op : std::uint8_t {
  copy = 0,
  set_lane = 3,
  add = 6,
  sub = 9,
  mul = 12,
  div = 15,
  fma = 18,
  acc_add = 21,
  acc_mul = 24,
  gather1 = 27,
  gather2 = 30,
  loop_begin = 33,
  loop_end = 34,
};

constexpr Op with_kind(Op base, ScalarKind kind) {
  return static_cast<Op>(static_cast<std::uint8_t>(base) + static_cast<std::uint8_t>(kind));
}

/// Interpreter switch key: opcode and width in one byte.
constexpr std::uint8_t dispatch_key(Op op, int width) {
  return static_cast<std::uint8_t>(static_cast<int>(op) * 4 + (width - 1));
}

struct Instr {
  Op op;
  std::uint8_t width = 1;
  std::uint8_t key = 0;  // dispatch_key(op, width), set when lowering finishes
  std::uint16_t dst = 0;
  Operand a, b, c;
  // gather: capture slot; set_lane: target lane; loop_begin: pc after the
  // loop; loop_end: pc of the first body instruction.
  std::int32_t aux = 0;
};

struct CompiledProgram {
  ProgramDef def;
  std::vector<TypeSig> node_types;
  std::vector<Instr> code;
  std::size_t register_count = 0;
  std::vector<std::pair<std::uint16_t, Value>> constants;
  std::vector<std::uint16_t> input_regs;
  std::vector<std::uint16_t> output_regs;
  /// Every loop's bounds are the same for all elements, so a batch of
  /// elements can step through the code in lockstep.
  bool uniform_control = false;
};

}  // namespace streamforge::detail
