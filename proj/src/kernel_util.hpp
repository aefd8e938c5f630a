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

#include <cstdint>

#include "streamforge/backend.hpp"

namespace streamforge::detail {

inline void add_stats(RunStats* total, const RunStats& run) {
  if (total == nullptr) return;
  total->elapsed_s += run.elapsed_s;
  total->bytes_bound += run.bytes_bound;
  total->elements += run.elements;
}

inline Expr i32_const(ProgramBuilder& pb, std::int64_t v) {
  if (v < INT32_MIN || v > INT32_MAX) throw Error(ErrorCode::dimension, "size exceeds the int32 index range");
  return pb.constant(Value::i32(static_cast<std::int32_t>(v)));
}

inline Expr zero(ProgramBuilder& pb, ScalarKind kind, int width = 1) { return pb.constant(Value(kind, width)); }

}  // namespace streamforge::detail
