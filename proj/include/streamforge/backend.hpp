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

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streamforge/program.hpp"

namespace streamforge {

namespace detail {
struct BoundCall;
}

struct RunStats {
  double elapsed_s = 0;
  /// Input, capture and output bytes of the call.
  std::size_t bytes_bound = 0;
  std::size_t elements = 0;
};

struct RunResult {
  std::vector<StreamArray> outputs;
  RunStats stats;
};

/// Executes programs over their output domain.
///
/// run() is timed as a whole: call validation, binding (inputs and captures
/// are copied into backend-owned buffers), output allocation, evaluation and
/// materialisation of the result arrays. On failure it throws the error of
/// the lexicographically smallest failing element.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string_view id() const = 0;
  virtual int worker_count() const = 0;

  RunResult run(const Program& p, std::span<const InputStream> inputs, const Captures& captures = {});
  RunResult run(const Program& p, std::initializer_list<InputStream> inputs, const Captures& captures = {}) {
    return run(p, std::span<const InputStream>(inputs.begin(), inputs.size()), captures);
  }

 protected:
  virtual bool trusted_gathers() const { return false; }
  virtual void execute(const detail::BoundCall& call) = 0;
};

/// Sequential reference interpreter.
class InterpreterBackend final : public Backend {
 public:
  std::string_view id() const override { return "interp"; }
  int worker_count() const override { return 1; }

 protected:
  void execute(const detail::BoundCall& call) override;
};

struct ParallelOptions {
  int workers = 0;  // 0: default_worker_count()
  /// 0 splits the domain into one balanced range per worker. Otherwise the
  /// domain is cut into chunks of `grain` elements dealt round-robin.
  std::size_t grain = 0;
  /// Shuffles the chunk order before dealing; for scheduling tests.
  std::optional<std::uint64_t> shuffle_seed;
  /// Skips gather bounds checks. Out-of-range reads are then undefined.
  bool trusted_gathers = false;
};

class ParallelBackend final : public Backend {
 public:
  explicit ParallelBackend(ParallelOptions options = {});

  std::string_view id() const override { return "parallel"; }
  int worker_count() const override { return options_.workers; }
  const ParallelOptions& options() const noexcept { return options_; }

 protected:
  bool trusted_gathers() const override { return options_.trusted_gathers; }
  void execute(const detail::BoundCall& call) override;

 private:
  ParallelOptions options_;
};

struct ElementRange {
  std::size_t begin;
  std::size_t end;
  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const ElementRange&, const ElementRange&) = default;
};

/// Splits the lexicographic element order of `shape` into `workers`
/// contiguous ranges whose sizes differ by at most one. Larger ranges come
/// first. Throws invalid_shape if workers < 1.
std::vector<ElementRange> partition(const Shape& shape, int workers);
std::vector<ElementRange> partition(std::size_t elements, int workers);

/// STREAMFORGE_WORKERS if set to a positive integer, else the hardware
/// concurrency (at least 1).
int default_worker_count();

/// "interp" or "parallel"; throws unknown_backend otherwise.
std::unique_ptr<Backend> make_backend(std::string_view id, int workers = 0);

}  // namespace streamforge
