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

#include "streamforge/program.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "bytecode.hpp"
#include "evaluator.hpp"

namespace streamforge {

using detail::CompiledProgram;
using detail::Instr;
using detail::Op;
using detail::Operand;

std::string to_string(const TypeSig& t) {
  return std::string(to_string(t.kind)) + "x" + std::to_string(t.width);
}

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

std::string node_label(NodeId n) { return "node " + std::to_string(n); }

bool valid_sig(const TypeSig& t) { return t.width >= 1 && t.width <= kMaxWidth; }

// ---- Type checking ---------------------------------------------------------

class Checker {
 public:
  explicit Checker(const ProgramDef& def) : def_(def), types_(def.nodes.size()), state_(def.nodes.size(), 0) {
    for (std::size_t k = 0; k < def.captures.size(); ++k) {
      const auto& c = def.captures[k];
      if (!valid_sig({c.kind, c.width}) || c.rank < 1 || c.rank > 2) {
        fail(ErrorCode::malformed_program, "capture '" + c.name + "' needs width 1..4 and rank 1..2");
      }
      if (!capture_index_.emplace(c.name, k).second) {
        fail(ErrorCode::malformed_program, "capture '" + c.name + "' declared twice");
      }
    }
    collect_accums(def.body);
  }

  TypeSig type_of(NodeId n) {
    if (n >= def_.nodes.size()) fail(ErrorCode::malformed_program, node_label(n) + " does not exist");
    if (types_[n]) return *types_[n];
    if (state_[n] == 1) fail(ErrorCode::malformed_program, "accumulator initialised from itself");
    state_[n] = 1;
    const TypeSig t = std::visit([&](const auto& node) { return infer(n, node); }, def_.nodes[n]);
    state_[n] = 2;
    types_[n] = t;
    return t;
  }

  std::size_t capture_slot(const std::string& name) const {
    auto it = capture_index_.find(name);
    if (it == capture_index_.end()) {
      fail(ErrorCode::undeclared_capture, "gather into undeclared capture '" + name + "'");
    }
    return it->second;
  }

  const std::map<int, NodeId>& accum_inits() const { return accum_init_; }

  /// Loop variables and accumulators a node reads, transitively.
  const std::pair<std::set<int>, std::set<int>>& deps(NodeId n) {
    auto it = deps_.find(n);
    if (it != deps_.end()) return it->second;
    std::pair<std::set<int>, std::set<int>> d;
    std::visit(overloaded{
                   [&](const ir::LoopVar& v) { d.first.insert(v.loop); },
                   [&](const ir::AccumRef& a) { d.second.insert(a.accum); },
                   [&](const auto& node) {
                     for (NodeId op : operands(node)) {
                       const auto& sub = deps(op);
                       d.first.insert(sub.first.begin(), sub.first.end());
                       d.second.insert(sub.second.begin(), sub.second.end());
                     }
                   },
               },
               def_.nodes[n]);
    return deps_.emplace(n, std::move(d)).first->second;
  }

  /// True when the node has the same value for every element of a call:
  /// it reads no input stream and no accumulator.
  bool element_invariant(NodeId n) {
    auto it = invariant_.find(n);
    if (it != invariant_.end()) return it->second;
    bool inv = std::visit(overloaded{
                              [](const ir::InputRef&) { return false; },
                              [](const ir::AccumRef&) { return false; },
                              [&](const auto& node) {
                                for (NodeId op : operands(node)) {
                                  if (!element_invariant(op)) return false;
                                }
                                return true;
                              },
                          },
                          def_.nodes[n]);
    return invariant_.emplace(n, inv).first->second;
  }

  static std::vector<NodeId> operands(const ir::Node& node) {
    return std::visit(overloaded{
                          [](const ir::Gather& g) { return std::vector<NodeId>{g.index}; },
                          [](const ir::Component& c) { return std::vector<NodeId>{c.operand}; },
                          [](const ir::Pack& p) { return p.parts; },
                          [](const ir::Arith& a) { return a.operands; },
                          [](const auto&) { return std::vector<NodeId>{}; },
                      },
                      node);
  }

 private:
  void collect_accums(const std::vector<ir::Statement>& stmts) {
    for (const auto& st : stmts) {
      if (const auto* d = std::get_if<ir::DeclareAccum>(&st.op)) {
        if (!accum_init_.emplace(d->accum, d->init).second) {
          fail(ErrorCode::malformed_program, "accumulator " + std::to_string(d->accum) + " declared twice");
        }
      } else if (const auto* l = std::get_if<ir::Loop>(&st.op)) {
        collect_accums(l->body);
      }
    }
  }

  void check_operand_order(NodeId n, NodeId operand) const {
    if (operand >= n) {
      fail(ErrorCode::malformed_program, node_label(n) + " refers forward to " + node_label(operand));
    }
  }

  TypeSig infer(NodeId, const ir::Const& c) { return {c.value.kind(), c.value.width()}; }

  TypeSig infer(NodeId, const ir::InputRef& in) {
    if (in.slot < 0 || static_cast<std::size_t>(in.slot) >= def_.inputs.size()) {
      fail(ErrorCode::malformed_program, "input slot " + std::to_string(in.slot) + " not declared");
    }
    return def_.inputs[in.slot];
  }

  TypeSig infer(NodeId, const ir::LoopVar&) { return {ScalarKind::i32, 1}; }

  TypeSig infer(NodeId, const ir::AccumRef& a) {
    auto it = accum_init_.find(a.accum);
    if (it == accum_init_.end()) {
      fail(ErrorCode::malformed_program, "accumulator " + std::to_string(a.accum) + " never declared");
    }
    return type_of(it->second);
  }

  TypeSig infer(NodeId n, const ir::Gather& g) {
    check_operand_order(n, g.index);
    const auto& decl = def_.captures[capture_slot(g.capture)];
    const TypeSig idx = type_of(g.index);
    if (idx.kind != ScalarKind::i32 || idx.width != decl.rank) {
      fail(ErrorCode::type_mismatch, "gather into rank-" + std::to_string(decl.rank) + " capture '" +
                                         g.capture + "' with index of type " + to_string(idx));
    }
    return {decl.kind, decl.width};
  }

  TypeSig infer(NodeId n, const ir::Component& c) {
    check_operand_order(n, c.operand);
    const TypeSig t = type_of(c.operand);
    if (c.lane < 0 || c.lane >= t.width) {
      fail(ErrorCode::type_mismatch, "component " + std::to_string(c.lane) + " of a " + to_string(t) + " value");
    }
    return {t.kind, 1};
  }

  TypeSig infer(NodeId n, const ir::Pack& p) {
    if (p.parts.empty() || p.parts.size() > kMaxWidth) {
      fail(ErrorCode::type_mismatch, "pack needs 1..4 parts");
    }
    std::optional<ScalarKind> kind;
    for (NodeId part : p.parts) {
      check_operand_order(n, part);
      const TypeSig t = type_of(part);
      if (t.width != 1 || (kind && *kind != t.kind)) {
        fail(ErrorCode::type_mismatch, "pack parts must be scalars of one kind");
      }
      kind = t.kind;
    }
    return {*kind, static_cast<int>(p.parts.size())};
  }

  TypeSig infer(NodeId n, const ir::Arith& a) {
    const std::size_t arity = a.op == ArithOp::fma ? 3 : 2;
    if (a.operands.size() != arity) {
      fail(ErrorCode::malformed_program, node_label(n) + ": wrong operand count");
    }
    std::optional<ScalarKind> kind;
    int width = 1;
    for (NodeId op : a.operands) {
      check_operand_order(n, op);
      const TypeSig t = type_of(op);
      if (kind && *kind != t.kind) {
        fail(ErrorCode::type_mismatch, "mixed-kind arithmetic (" + std::string(to_string(*kind)) + " and " +
                                           std::string(to_string(t.kind)) + ")");
      }
      kind = t.kind;
      if (t.width != 1) {
        if (width != 1 && width != t.width) {
          fail(ErrorCode::type_mismatch, "arithmetic on widths " + std::to_string(width) + " and " +
                                             std::to_string(t.width));
        }
        width = t.width;
      }
    }
    return {*kind, width};
  }

  const ProgramDef& def_;
  std::vector<std::optional<TypeSig>> types_;
  std::vector<char> state_;
  std::map<std::string, std::size_t, std::less<>> capture_index_;
  std::map<int, NodeId> accum_init_;
  std::map<NodeId, std::pair<std::set<int>, std::set<int>>> deps_;
  std::map<NodeId, bool> invariant_;
};

struct Scope {
  std::set<int> loops;
  std::set<int> accums;
};

class StatementChecker {
 public:
  StatementChecker(const ProgramDef& def, Checker& types)
      : def_(def), types_(types), assigned_(def.outputs.size(), false) {}

  void run() {
    if (def_.inputs.empty()) fail(ErrorCode::malformed_program, "a program needs at least one input stream");
    if (def_.outputs.empty()) fail(ErrorCode::malformed_program, "a program needs at least one output");
    for (const auto& t : def_.inputs) {
      if (!valid_sig(t)) fail(ErrorCode::malformed_program, "input width must be in 1..4");
    }
    for (const auto& t : def_.outputs) {
      if (!valid_sig(t)) fail(ErrorCode::malformed_program, "output width must be in 1..4");
    }
    Scope top;
    walk(def_.body, top, 0);
    for (std::size_t s = 0; s < assigned_.size(); ++s) {
      if (!assigned_[s]) fail(ErrorCode::malformed_program, "output " + std::to_string(s) + " never assigned");
    }
  }

 private:
  void check_expr(NodeId n, const Scope& scope) {
    types_.type_of(n);
    const auto& [loops, accums] = types_.deps(n);
    for (int l : loops) {
      if (!scope.loops.count(l)) {
        fail(ErrorCode::malformed_program, "loop variable " + std::to_string(l) + " used outside its loop");
      }
    }
    for (int a : accums) {
      if (!scope.accums.count(a)) {
        fail(ErrorCode::malformed_program, "accumulator " + std::to_string(a) + " read before declaration");
      }
    }
  }

  void check_accum_update(int accum, NodeId value) {
    const TypeSig acc = types_.type_of(types_.accum_inits().at(accum));
    const TypeSig v = types_.type_of(value);
    if (v.kind != acc.kind || (v.width != 1 && v.width != acc.width)) {
      fail(ErrorCode::type_mismatch, "accumulate " + to_string(v) + " into " + to_string(acc) + " accumulator");
    }
  }

  void walk(const std::vector<ir::Statement>& stmts, Scope& scope, int depth) {
    for (const auto& st : stmts) {
      std::visit(overloaded{
                     [&](const ir::DeclareAccum& d) {
                       check_expr(d.init, scope);
                       scope.accums.insert(d.accum);
                     },
                     [&](const ir::Accumulate& a) {
                       if (!scope.accums.count(a.accum)) {
                         fail(ErrorCode::malformed_program,
                              "accumulate into undeclared accumulator " + std::to_string(a.accum));
                       }
                       check_expr(a.value, scope);
                       check_accum_update(a.accum, a.value);
                     },
                     [&](const ir::Loop& l) {
                       if (!loop_ids_.insert(l.loop).second) {
                         fail(ErrorCode::malformed_loop, "loop " + std::to_string(l.loop) + " appears twice");
                       }
                       for (NodeId b : {l.init, l.bound}) {
                         check_expr(b, scope);
                         if (!types_.deps(b).second.empty()) {
                           fail(ErrorCode::malformed_loop, "loop bounds must not read accumulators");
                         }
                         if (types_.type_of(b) != TypeSig{ScalarKind::i32, 1}) {
                           fail(ErrorCode::type_mismatch, "loop bounds must be i32 scalars");
                         }
                       }
                       Scope inner = scope;
                       inner.loops.insert(l.loop);
                       walk(l.body, inner, depth + 1);
                     },
                     [&](const ir::Output& o) {
                       if (depth != 0) fail(ErrorCode::malformed_program, "outputs must be assigned outside loops");
                       if (o.slot < 0 || static_cast<std::size_t>(o.slot) >= def_.outputs.size()) {
                         fail(ErrorCode::malformed_program, "output slot " + std::to_string(o.slot) + " not declared");
                       }
                       if (assigned_[o.slot]) {
                         fail(ErrorCode::malformed_program, "output " + std::to_string(o.slot) + " assigned twice");
                       }
                       assigned_[o.slot] = true;
                       check_expr(o.value, scope);
                       const TypeSig t = types_.type_of(o.value);
                       if (t != def_.outputs[o.slot]) {
                         fail(ErrorCode::type_mismatch, "output " + std::to_string(o.slot) + " declared " +
                                                            to_string(def_.outputs[o.slot]) + " but assigned " +
                                                            to_string(t));
                       }
                     },
                 },
                 st.op);
    }
  }

  const ProgramDef& def_;
  Checker& types_;
  std::vector<bool> assigned_;
  std::set<int> loop_ids_;
};

// ---- Lowering --------------------------------------------------------------

class Lowering {
 public:
  Lowering(CompiledProgram& out, Checker& types) : out_(out), def_(out.def), types_(types) {}

  void run() {
    const std::size_t n = def_.nodes.size();
    out_.node_types.resize(n);
    for (NodeId k = 0; k < n; ++k) out_.node_types[k] = types_.type_of(k);
    node_reg_.assign(n, 0);
    stamp_.assign(n, 0);
    scope_of_.assign(n, 0);
    scope_live_.push_back(true);
    hoisted_.assign(n, false);
    hoistable_.assign(n, false);

    for (std::size_t s = 0; s < def_.inputs.size(); ++s) out_.input_regs.push_back(alloc());
    for (std::size_t s = 0; s < def_.outputs.size(); ++s) out_.output_regs.push_back(alloc());
    for (const auto& [accum, init] : types_.accum_inits()) accum_reg_[accum] = alloc();
    for (NodeId k = 0; k < n; ++k) assign_register(k);

    target_ = &body_;
    lower(def_.body);

    out_.code = prologue_;
    const auto shift = static_cast<std::int32_t>(prologue_.size());
    for (Instr in : body_) {
      if (in.op == Op::loop_begin || in.op == Op::loop_end) in.aux += shift;
      out_.code.push_back(in);
    }
    for (Instr& in : out_.code) in.key = detail::dispatch_key(in.op, in.width);
    out_.register_count = next_reg_;
  }

 private:
  std::uint16_t alloc() {
    if (next_reg_ >= std::numeric_limits<std::uint16_t>::max()) {
      fail(ErrorCode::malformed_program, "program too large (register file exhausted)");
    }
    return static_cast<std::uint16_t>(next_reg_++);
  }

  std::uint16_t loop_var_reg(int loop) {
    auto it = loop_var_reg_.find(loop);
    if (it != loop_var_reg_.end()) return it->second;
    return loop_var_reg_[loop] = alloc();
  }

  void assign_register(NodeId k) {
    std::visit(overloaded{
                   [&](const ir::Const& c) {
                     node_reg_[k] = alloc();
                     out_.constants.emplace_back(node_reg_[k], c.value);
                   },
                   [&](const ir::InputRef& in) { node_reg_[k] = out_.input_regs[in.slot]; },
                   [&](const ir::LoopVar& v) { node_reg_[k] = loop_var_reg(v.loop); },
                   [&](const ir::AccumRef& a) { node_reg_[k] = accum_reg_.at(a.accum); },
                   [&](const ir::Component& c) { hoistable_[k] = invariant(c.operand); },
                   [&](const ir::Pack& p) {
                     node_reg_[k] = alloc();
                     hoistable_[k] = std::all_of(p.parts.begin(), p.parts.end(),
                                                 [&](NodeId part) { return invariant(part); });
                   },
                   [&](const ir::Arith& a) {
                     node_reg_[k] = alloc();
                     const bool may_fault = a.op == ArithOp::div && out_.node_types[k].kind == ScalarKind::i32;
                     hoistable_[k] = !may_fault && std::all_of(a.operands.begin(), a.operands.end(),
                                                               [&](NodeId op) { return invariant(op); });
                   },
                   [&](const ir::Gather&) { node_reg_[k] = alloc(); },
               },
               def_.nodes[k]);
  }

  // Values fixed for the whole element that cannot fault: computed once in
  // the prologue.
  bool invariant(NodeId k) const {
    const auto& node = def_.nodes[k];
    return std::holds_alternative<ir::Const>(node) || std::holds_alternative<ir::InputRef>(node) ||
           hoistable_[k];
  }

  Operand operand(NodeId k) const {
    if (const auto* c = std::get_if<ir::Component>(&def_.nodes[k])) {
      const Operand o = operand(c->operand);
      return {o.reg, static_cast<std::uint8_t>(o.lane + c->lane * o.step), 0};
    }
    const std::uint8_t step = out_.node_types[k].width == 1 ? 0 : 1;
    return {node_reg_[k], 0, step};
  }

  void emit(Instr in) { target_->push_back(in); }

  void ensure(NodeId k) {
    const auto& node = def_.nodes[k];
    if (std::holds_alternative<ir::Const>(node) || std::holds_alternative<ir::InputRef>(node) ||
        std::holds_alternative<ir::LoopVar>(node) || std::holds_alternative<ir::AccumRef>(node)) {
      return;
    }
    if (const auto* c = std::get_if<ir::Component>(&node)) {
      ensure(c->operand);
      return;
    }
    if (hoistable_[k]) {
      if (hoisted_[k]) return;
      hoisted_[k] = true;
      auto* saved = target_;
      target_ = &prologue_;
      compute(k);
      target_ = saved;
      return;
    }
    // A computed value stays valid for the rest of the statement. Values that
    // read no accumulator also stay valid for the rest of the loop body they
    // were computed in, including nested loops.
    if (stamp_[k] == statement_) return;
    if (stamp_[k] != 0 && scope_live_[scope_of_[k]] && types_.deps(k).second.empty()) return;
    stamp_[k] = statement_;
    scope_of_[k] = scope_;
    compute(k);
  }

  void compute(NodeId k) {
    const TypeSig t = out_.node_types[k];
    const auto w = static_cast<std::uint8_t>(t.width);
    std::visit(overloaded{
                   [&](const ir::Gather& g) {
                     const std::size_t slot = types_.capture_slot(g.capture);
                     const auto& decl = def_.captures[slot];
                     Instr in{};
                     in.width = w;
                     in.dst = node_reg_[k];
                     in.aux = static_cast<std::int32_t>(slot);
                     if (decl.rank == 1) {
                       ensure(g.index);
                       in.op = with_kind(Op::gather1, decl.kind);
                       in.a = operand(g.index);
                     } else if (const auto* p = std::get_if<ir::Pack>(&def_.nodes[g.index])) {
                       ensure(p->parts[0]);
                       ensure(p->parts[1]);
                       in.op = with_kind(Op::gather2, decl.kind);
                       in.a = operand(p->parts[0]);
                       in.b = operand(p->parts[1]);
                     } else {
                       ensure(g.index);
                       const Operand o = operand(g.index);
                       in.op = with_kind(Op::gather2, decl.kind);
                       in.a = {o.reg, o.lane, 0};
                       in.b = {o.reg, static_cast<std::uint8_t>(o.lane + o.step), 0};
                     }
                     emit(in);
                   },
                   [&](const ir::Pack& p) {
                     for (std::size_t i = 0; i < p.parts.size(); ++i) {
                       ensure(p.parts[i]);
                       Instr in{};
                       in.op = with_kind(Op::set_lane, t.kind);
                       in.dst = node_reg_[k];
                       in.a = operand(p.parts[i]);
                       in.aux = static_cast<std::int32_t>(i);
                       emit(in);
                     }
                   },
                   [&](const ir::Arith& a) {
                     for (NodeId op : a.operands) ensure(op);
                     static constexpr Op kOps[] = {Op::add, Op::sub, Op::mul, Op::div, Op::fma};
                     Instr in{};
                     in.op = with_kind(kOps[static_cast<int>(a.op)], t.kind);
                     in.width = w;
                     in.dst = node_reg_[k];
                     in.a = operand(a.operands[0]);
                     in.b = operand(a.operands[1]);
                     if (a.operands.size() == 3) in.c = operand(a.operands[2]);
                     emit(in);
                   },
                   [](const auto&) {},
               },
               def_.nodes[k]);
  }

  void lower(const std::vector<ir::Statement>& stmts) {
    for (const auto& st : stmts) {
      ++statement_;
      std::visit(overloaded{
                     [&](const ir::DeclareAccum& d) {
                       ensure(d.init);
                       const TypeSig t = out_.node_types[d.init];
                       Instr in{};
                       in.op = with_kind(Op::copy, t.kind);
                       in.width = static_cast<std::uint8_t>(t.width);
                       in.dst = accum_reg_.at(d.accum);
                       in.a = operand(d.init);
                       emit(in);
                     },
                     [&](const ir::Accumulate& a) {
                       const TypeSig acc = out_.node_types[types_.accum_inits().at(a.accum)];
                       Instr in{};
                       in.width = static_cast<std::uint8_t>(acc.width);
                       in.dst = accum_reg_.at(a.accum);
                       const auto* prod = std::get_if<ir::Arith>(&def_.nodes[a.value]);
                       if (prod != nullptr && prod->op == ArithOp::mul && !hoistable_[a.value]) {
                         ensure(prod->operands[0]);
                         ensure(prod->operands[1]);
                         in.op = with_kind(Op::acc_mul, acc.kind);
                         in.a = operand(prod->operands[0]);
                         in.b = operand(prod->operands[1]);
                       } else {
                         ensure(a.value);
                         in.op = with_kind(Op::acc_add, acc.kind);
                         in.a = operand(a.value);
                       }
                       emit(in);
                     },
                     [&](const ir::Loop& l) {
                       ensure(l.init);
                       ensure(l.bound);
                       const std::uint16_t var = loop_var_reg(l.loop);
                       const std::uint16_t bound = alloc();
                       Instr begin{};
                       begin.op = Op::loop_begin;
                       begin.dst = var;
                       begin.a = operand(l.init);
                       begin.b = operand(l.bound);
                       begin.c.reg = bound;
                       const std::size_t begin_pc = body_.size();
                       emit(begin);
                       const std::uint32_t outer = scope_;
                       scope_ = static_cast<std::uint32_t>(scope_live_.size());
                       scope_live_.push_back(true);
                       lower(l.body);
                       scope_live_[scope_] = false;
                       scope_ = outer;
                       Instr end{};
                       end.op = Op::loop_end;
                       end.dst = var;
                       end.c.reg = bound;
                       end.aux = static_cast<std::int32_t>(begin_pc + 1);
                       emit(end);
                       body_[begin_pc].aux = static_cast<std::int32_t>(body_.size());
                     },
                     [&](const ir::Output& o) {
                       ensure(o.value);
                       const TypeSig t = out_.node_types[o.value];
                       Instr in{};
                       in.op = with_kind(Op::copy, t.kind);
                       in.width = static_cast<std::uint8_t>(t.width);
                       in.dst = out_.output_regs[o.slot];
                       in.a = operand(o.value);
                       emit(in);
                     },
                 },
                 st.op);
    }
  }

  CompiledProgram& out_;
  const ProgramDef& def_;
  Checker& types_;
  std::size_t next_reg_ = 0;
  std::vector<std::uint16_t> node_reg_;
  std::vector<std::uint32_t> stamp_;     // statement that last computed the node
  std::vector<std::uint32_t> scope_of_;  // loop body it was computed in
  std::vector<bool> scope_live_;
  std::uint32_t scope_ = 0;
  std::vector<bool> hoisted_;
  std::vector<bool> hoistable_;
  std::map<int, std::uint16_t> accum_reg_;
  std::map<int, std::uint16_t> loop_var_reg_;
  std::vector<Instr> prologue_;
  std::vector<Instr> body_;
  std::vector<Instr>* target_ = nullptr;
  std::uint32_t statement_ = 0;
};

}  // namespace

const ProgramDef& Program::definition() const { return impl_->def; }

namespace {

bool uniform_loops(const std::vector<ir::Statement>& stmts, Checker& types) {
  for (const auto& st : stmts) {
    if (const auto* l = std::get_if<ir::Loop>(&st.op)) {
      if (!types.element_invariant(l->init) || !types.element_invariant(l->bound) ||
          !uniform_loops(l->body, types)) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

Program build_program(ProgramDef def) {
  auto compiled = std::make_shared<CompiledProgram>();
  compiled->def = std::move(def);
  Checker types(compiled->def);
  for (NodeId k = 0; k < compiled->def.nodes.size(); ++k) types.type_of(k);
  StatementChecker(compiled->def, types).run();
  Lowering(*compiled, types).run();
  compiled->uniform_control = uniform_loops(compiled->def.body, types);
  return Program(std::move(compiled));
}

// ---- Calls -----------------------------------------------------------------

const Shape& InputStream::shape() const { return is_grid() ? grid().shape() : array().shape(); }

TypeSig InputStream::type() const {
  if (is_grid()) return {ScalarKind::i32, grid().width()};
  return {array().kind(), array().width()};
}

const StreamArray* Captures::find(std::string_view name) const {
  auto it = bindings_.find(name);
  return it == bindings_.end() ? nullptr : it->second;
}

CallPlan validate_call(const Program& p, std::span<const InputStream> inputs, const Captures& captures) {
  if (inputs.size() != p.inputs().size()) {
    fail(ErrorCode::arity_mismatch, "program takes " + std::to_string(p.inputs().size()) +
                                        " input stream(s), called with " + std::to_string(inputs.size()));
  }
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    if (inputs[s].type() != p.inputs()[s]) {
      fail(ErrorCode::type_mismatch, "input " + std::to_string(s) + " expects " + to_string(p.inputs()[s]) +
                                         ", got " + to_string(inputs[s].type()));
    }
    if (!(inputs[s].shape() == inputs[0].shape())) {
      fail(ErrorCode::shape_mismatch, "input shapes differ: " + inputs[0].shape().to_string() + " vs " +
                                          inputs[s].shape().to_string());
    }
  }
  CallPlan plan{inputs[0].shape(), {inputs.begin(), inputs.end()}, {}};
  for (const auto& decl : p.captures()) {
    const StreamArray* a = captures.find(decl.name);
    if (a == nullptr) fail(ErrorCode::unresolved_capture, "capture '" + decl.name + "' not bound");
    if (a->kind() != decl.kind || a->width() != decl.width || a->rank() != decl.rank) {
      fail(ErrorCode::type_mismatch, "capture '" + decl.name + "' expects rank-" + std::to_string(decl.rank) +
                                         " " + to_string(TypeSig{decl.kind, decl.width}) + " array");
    }
    plan.captures.push_back(a);
  }
  return plan;
}

std::vector<Value> eval_element(const Program& p, const CallPlan& plan, std::span<const std::size_t> element) {
  const Shape& shape = plan.output_shape;
  if (element.size() != static_cast<std::size_t>(shape.rank())) {
    fail(ErrorCode::out_of_range, "element index rank does not match output shape " + shape.to_string());
  }
  for (int d = 0; d < shape.rank(); ++d) {
    if (element[d] >= shape.extent(d)) {
      fail(ErrorCode::out_of_range, "element index outside output shape " + shape.to_string());
    }
  }
  const std::size_t row = element[0];
  const std::size_t col = shape.rank() == 2 ? element[1] : 0;
  const std::size_t linear = shape.rank() == 2 ? row * shape.row_stride() + col : row;

  const detail::BoundCall call = detail::bind_call(p.compiled(), plan, {}, false);
  detail::Evaluator ev(call);
  try {
    ev.evaluate(linear, row, col);
  } catch (const IndexedReadError& err) {
    throw err.at_element({element.begin(), element.end()});
  }
  std::vector<Value> out;
  for (std::size_t s = 0; s < p.outputs().size(); ++s) {
    Value v(p.outputs()[s].kind, p.outputs()[s].width);
    v.mutable_lanes() = ev.output(s);
    out.push_back(v);
  }
  return out;
}

// ---- Builder ---------------------------------------------------------------

namespace {

ProgramBuilder& same_builder(std::initializer_list<Expr> exprs) {
  ProgramBuilder& b = exprs.begin()->builder();
  for (const Expr& e : exprs) {
    if (&e.builder() != &b) fail(ErrorCode::malformed_program, "expressions from different builders mixed");
  }
  return b;
}

}  // namespace

Expr Expr::operator[](int lane) const { return builder_->component(*this, lane); }

Expr operator+(Expr a, Expr b) { return same_builder({a, b}).arith(ArithOp::add, {a, b}); }
Expr operator-(Expr a, Expr b) { return same_builder({a, b}).arith(ArithOp::sub, {a, b}); }
Expr operator*(Expr a, Expr b) { return same_builder({a, b}).arith(ArithOp::mul, {a, b}); }
Expr operator/(Expr a, Expr b) { return same_builder({a, b}).arith(ArithOp::div, {a, b}); }
Expr fma(Expr a, Expr b, Expr c) { return same_builder({a, b, c}).arith(ArithOp::fma, {a, b, c}); }

Expr index2(Expr row, Expr col) {
  const Expr parts[] = {row, col};
  return same_builder({row, col}).pack(parts);
}

Expr pack(std::initializer_list<Expr> parts) {
  if (parts.size() == 0) fail(ErrorCode::type_mismatch, "pack needs 1..4 parts");
  return same_builder(parts).pack(std::span<const Expr>(parts.begin(), parts.size()));
}

Expr Capture::operator[](Expr index) const { return builder_->gather(name_, index); }

Expr Accumulator::value() const { return builder_->add_node(ir::AccumRef{id_}); }

Expr ProgramBuilder::add_node(ir::Node node) {
  def_.nodes.push_back(std::move(node));
  return Expr(*this, static_cast<NodeId>(def_.nodes.size() - 1));
}

Expr ProgramBuilder::input(ScalarKind kind, int width) {
  def_.inputs.push_back({kind, width});
  return add_node(ir::InputRef{static_cast<int>(def_.inputs.size() - 1)});
}

Capture ProgramBuilder::capture(std::string name, ScalarKind kind, int width, int rank) {
  def_.captures.push_back({name, kind, width, rank});
  return Capture(*this, std::move(name));
}

Expr ProgramBuilder::constant(Value v) { return add_node(ir::Const{v}); }

Expr ProgramBuilder::gather(std::string_view capture, Expr index) {
  return add_node(ir::Gather{std::string(capture), index.id()});
}

Expr ProgramBuilder::component(Expr e, int lane) { return add_node(ir::Component{e.id(), lane}); }

Expr ProgramBuilder::arith(ArithOp op, std::vector<Expr> operands) {
  ir::Arith a{op, {}};
  for (const Expr& e : operands) a.operands.push_back(e.id());
  return add_node(std::move(a));
}

Expr ProgramBuilder::pack(std::span<const Expr> parts) {
  ir::Pack p;
  for (const Expr& e : parts) p.parts.push_back(e.id());
  return add_node(std::move(p));
}

Accumulator ProgramBuilder::accumulator(Expr init) {
  const int id = next_accum_++;
  current().push_back({ir::DeclareAccum{id, init.id()}});
  return Accumulator(*this, id);
}

void ProgramBuilder::accumulate(const Accumulator& acc, Expr value) {
  current().push_back({ir::Accumulate{acc.id(), value.id()}});
}

void ProgramBuilder::output(Expr value) {
  current().push_back({ir::Output{static_cast<int>(declared_outputs_.size()), value.id()}});
  declared_outputs_.emplace_back();
}

void ProgramBuilder::output(Expr value, TypeSig declared) {
  current().push_back({ir::Output{static_cast<int>(declared_outputs_.size()), value.id()}});
  declared_outputs_.emplace_back(declared);
}

void ProgramBuilder::open_scope() { scopes_.emplace_back(); }

void ProgramBuilder::close_loop(int id, Expr init, Expr bound) {
  ir::Loop loop{id, init.id(), bound.id(), std::move(scopes_.back())};
  scopes_.pop_back();
  current().push_back({std::move(loop)});
}

std::vector<ir::Statement>& ProgramBuilder::current() { return scopes_.back(); }

Program ProgramBuilder::build() const {
  ProgramDef def = def_;
  def.body = scopes_.front();
  def.outputs.clear();
  // Output statements may sit inside loops in a malformed body; find each
  // slot's value wherever it is so inference can run, and let validation
  // report the misplacement.
  std::map<int, NodeId> values;
  std::vector<const std::vector<ir::Statement>*> pending{&def.body};
  while (!pending.empty()) {
    const auto* stmts = pending.back();
    pending.pop_back();
    for (const auto& st : *stmts) {
      if (const auto* o = std::get_if<ir::Output>(&st.op)) values[o->slot] = o->value;
      if (const auto* l = std::get_if<ir::Loop>(&st.op)) pending.push_back(&l->body);
    }
  }
  Checker types(def);
  for (std::size_t s = 0; s < declared_outputs_.size(); ++s) {
    def.outputs.push_back(declared_outputs_[s] ? *declared_outputs_[s] : types.type_of(values.at(static_cast<int>(s))));
  }
  return build_program(std::move(def));
}

}  // namespace streamforge
