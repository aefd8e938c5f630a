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

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bytecode.hpp"
#include "streamforge/program.hpp"

namespace streamforge::detail {

struct BoundCapture {
  const void* data;
  std::uint32_t ext0;
  std::uint32_t ext1;  // 1 for rank-1 captures
  const std::string* name;
  int rank;
};

struct BoundInput {
  const void* data;  // null for grids
  int width;
  int rank;  // grid rank
};

struct BoundOutput {
  void* data;
  ScalarKind kind;
  int width;
};

/// Everything one program invocation over an output domain needs. Pointers
/// borrow from the arrays the call was bound to.
struct BoundCall {
  const CompiledProgram* program;
  Shape output_shape;
  std::vector<BoundInput> inputs;
  std::vector<BoundCapture> captures;
  std::vector<BoundOutput> outputs;
  bool trusted_gathers = false;
};

/// `outputs` may be empty when the caller only evaluates single elements.
BoundCall bind_call(const CompiledProgram& p, const CallPlan& plan, std::span<StreamArray> outputs,
                    bool trusted_gathers);

/// Elements per lockstep batch.
inline constexpr int kBatch = 32;

/// Per-worker interpreter state. Not thread safe; create one per worker.
class Evaluator {
 public:
  explicit Evaluator(const BoundCall& call);

  /// Loads inputs for the element, runs the body and leaves outputs in their
  /// registers. Throws on gather or arithmetic faults.
  void evaluate(std::size_t linear, std::size_t row, std::size_t col);
  void store_outputs(std::size_t linear);
  const Lanes& output(std::size_t slot) const;

  /// Evaluates `count` <= kBatch consecutive elements in lockstep and stores
  /// their outputs. Only valid for programs with uniform_control. Throws
  /// without storing anything if any element faults.
  void evaluate_batch(std::size_t begin, std::size_t count);

 private:
  void execute();
  void execute_batch(int n);

  const BoundCall& call_;
  std::vector<Lanes> regs_;
  // Batch register file: component c of register r for element e of the
  // batch lives at scalar slot (r * 4 + c) * kBatch + e, in 8-byte slots.
  std::vector<std::byte> batch_;
};

struct Failure {
  std::size_t element;
  std::exception_ptr error;
};

/// Evaluates and stores elements [begin, end) in order, stopping at the first
/// failure. If `first_failure` is given, stops early once an element beyond
/// the smallest failure recorded there is reached, and publishes its own.
std::optional<Failure> evaluate_range(const BoundCall& call, Evaluator& ev, std::size_t begin,
                                      std::size_t end, std::atomic<std::size_t>* first_failure);

/// Multi-index of a linear element in `shape`.
std::vector<std::size_t> element_index(const Shape& shape, std::size_t linear);

}  // namespace streamforge::detail
