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
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace streamforge {

enum class ErrorCode {
  invalid_shape,
  out_of_range,
  type_mismatch,
  undeclared_capture,
  malformed_program,
  malformed_loop,
  arity_mismatch,
  shape_mismatch,
  unresolved_capture,
  indexed_read,
  arithmetic,
  loop,
  format,
  dimension,
  unknown_backend,
  unknown_kernel,
  oracle_mismatch,
  usage,
};

std::string_view to_string(ErrorCode code);

/// Base exception for everything the library throws on a contract violation.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// A gather read outside the bounds of a captured array. Carries the
/// offending index and the output element whose evaluation hit it.
class IndexedReadError : public Error {
 public:
  IndexedReadError(std::string capture, std::vector<std::int64_t> index,
                   std::vector<std::size_t> element);

  const std::string& capture() const noexcept { return capture_; }
  const std::vector<std::int64_t>& index() const noexcept { return index_; }
  const std::vector<std::size_t>& element() const noexcept { return element_; }

  /// Returns a copy with the failing output element filled in.
  IndexedReadError at_element(std::vector<std::size_t> element) const;

 private:
  std::string capture_;
  std::vector<std::int64_t> index_;
  std::vector<std::size_t> element_;
};

}  // namespace streamforge
