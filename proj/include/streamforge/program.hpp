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

// Stream programs: pure per-output-element computations.
//
// A program declares typed input streams, typed outputs and named captured
// arrays. Its body is an ordered statement list over an expression DAG:
// accumulator declarations, accumulations, counted loops with unit step and
// output assignments. One program instance runs per output element; it may
// read its inputs at that element and gather from captures anywhere, but it
// writes nothing except its own outputs. Statement and loop-iteration order
// is textual, which pins floating point summation order.
//
// Programs are usually written with ProgramBuilder:
//
//   ProgramBuilder pb;
//   Expr ind = pb.input(ScalarKind::i32, 2);
//   Capture a = pb.capture("A", ScalarKind::f32, 1, 2);
//   Capture b = pb.capture("B", ScalarKind::f32, 1, 2);
//   Accumulator c = pb.accumulator(pb.constant(Value::f32(0)));
//   pb.loop(pb.constant(Value::i32(0)), pb.constant(Value::i32(l)), [&](Expr k) {
//     pb.accumulate(c, a[index2(ind[0], k)] * b[index2(k, ind[1])]);
//   });
//   pb.output(c.value());
//   Program mxm = pb.build();

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "streamforge/core.hpp"

namespace streamforge {

enum class ArithOp : std::uint8_t { add, sub, mul, div, fma };

struct TypeSig {
  ScalarKind kind;
  int width;
  friend bool operator==(const TypeSig&, const TypeSig&) = default;
};

std::string to_string(const TypeSig& t);

struct CaptureDecl {
  std::string name;
  ScalarKind kind;
  int width;
  int rank;
};

using NodeId = std::uint32_t;

namespace ir {

struct Const {
  Value value;
};
struct InputRef {
  int slot;
};
struct LoopVar {
  int loop;
};
struct AccumRef {
  int accum;
};
/// Bounds-checked read of a captured array. The index is int32 with width
/// equal to the capture rank.
struct Gather {
  std::string capture;
  NodeId index;
};
struct Component {
  NodeId operand;
  int lane;
};
/// Builds a Value from 1..4 scalars of one kind (index2 is a two-part Pack).
struct Pack {
  std::vector<NodeId> parts;
};
/// Operands share a kind; a width-1 operand broadcasts against wider ones.
/// Integer division truncates; division by zero is an evaluation error.
struct Arith {
  ArithOp op;
  std::vector<NodeId> operands;
};

using Node = std::variant<Const, InputRef, LoopVar, AccumRef, Gather, Component, Pack, Arith>;

struct Statement;

struct DeclareAccum {
  int accum;
  NodeId init;
};
/// accum += value
struct Accumulate {
  int accum;
  NodeId value;
};
/// for (var = init; var < bound; ++var) body. init and bound are int32
/// scalars evaluated once on entry and must not read accumulators.
struct Loop {
  int loop;
  NodeId init;
  NodeId bound;
  std::vector<Statement> body;
};
struct Output {
  int slot;
  NodeId value;
};

struct Statement {
  std::variant<DeclareAccum, Accumulate, Loop, Output> op;
};

}  // namespace ir

/// Raw program description. Node operands must refer to nodes with smaller
/// ids, which keeps the graph acyclic.
struct ProgramDef {
  std::vector<TypeSig> inputs;
  std::vector<TypeSig> outputs;
  std::vector<CaptureDecl> captures;
  std::vector<ir::Node> nodes;
  std::vector<ir::Statement> body;
};

namespace detail {
struct CompiledProgram;
}

/// A validated, immutable program. Cheap to copy.
class Program {
 public:
  const ProgramDef& definition() const;
  const std::vector<TypeSig>& inputs() const { return definition().inputs; }
  const std::vector<TypeSig>& outputs() const { return definition().outputs; }
  const std::vector<CaptureDecl>& captures() const { return definition().captures; }

  const detail::CompiledProgram& compiled() const { return *impl_; }

 private:
  friend Program build_program(ProgramDef def);
  explicit Program(std::shared_ptr<const detail::CompiledProgram> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<const detail::CompiledProgram> impl_;
};

/// Type-checks and compiles. Throws type_mismatch, undeclared_capture,
/// malformed_loop (accumulator read in a loop bound) or malformed_program.
Program build_program(ProgramDef def);

/// One input stream of a call: a virtual grid or a borrowed array.
class InputStream {
 public:
  InputStream(const GridArray& g) : source_(g) {}  // NOLINT(google-explicit-constructor)
  InputStream(const StreamArray& a) : source_(&a) {}  // NOLINT(google-explicit-constructor)

  bool is_grid() const noexcept { return std::holds_alternative<GridArray>(source_); }
  const GridArray& grid() const { return std::get<GridArray>(source_); }
  const StreamArray& array() const { return *std::get<const StreamArray*>(source_); }

  const Shape& shape() const;
  TypeSig type() const;

 private:
  std::variant<GridArray, const StreamArray*> source_;
};

/// Name -> array bindings for a call. Arrays are borrowed.
class Captures {
 public:
  Captures() = default;
  Captures(std::initializer_list<std::pair<const std::string, const StreamArray*>> init)
      : bindings_(init) {}

  Captures& bind(std::string name, const StreamArray& array) {
    bindings_[std::move(name)] = &array;
    return *this;
  }
  const StreamArray* find(std::string_view name) const;
  std::size_t size() const noexcept { return bindings_.size(); }

 private:
  std::map<std::string, const StreamArray*, std::less<>> bindings_;
};

/// Result of checking a call against a program's signature.
struct CallPlan {
  Shape output_shape;
  std::vector<InputStream> inputs;
  /// Resolved in program declaration order.
  std::vector<const StreamArray*> captures;
};

/// Throws arity_mismatch, type_mismatch, shape_mismatch or unresolved_capture.
CallPlan validate_call(const Program& p, std::span<const InputStream> inputs, const Captures& captures);

/// Runs one program instance. `element` holds one index per output rank.
std::vector<Value> eval_element(const Program& p, const CallPlan& plan,
                                std::span<const std::size_t> element);

// ---- Builder ---------------------------------------------------------------

class ProgramBuilder;

/// Handle to a node inside a ProgramBuilder.
class Expr {
 public:
  Expr(ProgramBuilder& b, NodeId id) : builder_(&b), id_(id) {}

  NodeId id() const noexcept { return id_; }
  ProgramBuilder& builder() const noexcept { return *builder_; }

  /// Component extraction.
  Expr operator[](int lane) const;

 private:
  ProgramBuilder* builder_;
  NodeId id_;
};

Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
/// a * b + c with a single rounding.
Expr fma(Expr a, Expr b, Expr c);
Expr index2(Expr row, Expr col);
Expr pack(std::initializer_list<Expr> parts);

class Capture {
 public:
  Capture(ProgramBuilder& b, std::string name) : builder_(&b), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }
  Expr operator[](Expr index) const;

 private:
  ProgramBuilder* builder_;
  std::string name_;
};

class Accumulator {
 public:
  Accumulator(ProgramBuilder& b, int id) : builder_(&b), id_(id) {}
  int id() const noexcept { return id_; }
  Expr value() const;

 private:
  ProgramBuilder* builder_;
  int id_;
};

class ProgramBuilder {
 public:
  Expr input(ScalarKind kind, int width);
  Capture capture(std::string name, ScalarKind kind, int width, int rank);
  Expr constant(Value v);
  Expr gather(std::string_view capture, Expr index);
  Expr component(Expr e, int lane);
  Expr arith(ArithOp op, std::vector<Expr> operands);
  Expr pack(std::span<const Expr> parts);

  Accumulator accumulator(Expr init);
  void accumulate(const Accumulator& acc, Expr value);

  /// Emits a counted loop; `body` receives the loop variable.
  template <class F>
  void loop(Expr init, Expr bound, F&& body) {
    const int id = next_loop_++;
    Expr var = add_node(ir::LoopVar{id});
    open_scope();
    body(var);
    close_loop(id, init, bound);
  }

  /// Appends an output whose type is inferred from `value`.
  void output(Expr value);
  /// Appends an output with an explicit declared type.
  void output(Expr value, TypeSig declared);

  Program build() const;

  Expr add_node(ir::Node node);

 private:
  void open_scope();
  void close_loop(int id, Expr init, Expr bound);
  std::vector<ir::Statement>& current();

  ProgramDef def_;
  std::vector<std::vector<ir::Statement>> scopes_ = std::vector<std::vector<ir::Statement>>(1);
  std::vector<std::optional<TypeSig>> declared_outputs_;
  int next_loop_ = 0;
  int next_accum_ = 0;
};

}  // namespace streamforge
