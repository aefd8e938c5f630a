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

#include "streamforge/backend.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "evaluator.hpp"

namespace streamforge {

RunResult Backend::run(const Program& p, std::span<const InputStream> inputs, const Captures& captures) {
  const auto start = std::chrono::steady_clock::now();
  const CallPlan checked = validate_call(p, inputs, captures);

  // Binding: the backend works on its own copies, as a device backend would
  // after transferring its arguments.
  RunStats stats;
  std::vector<StreamArray> owned;
  owned.reserve(inputs.size() + checked.captures.size());
  CallPlan plan{checked.output_shape, {}, {}};
  for (const auto& in : checked.inputs) {
    if (in.is_grid()) {
      plan.inputs.push_back(in);
    } else {
      stats.bytes_bound += in.array().byte_size();
      plan.inputs.emplace_back(owned.emplace_back(in.array()));
    }
  }
  for (const StreamArray* c : checked.captures) {
    stats.bytes_bound += c->byte_size();
    plan.captures.push_back(&owned.emplace_back(*c));
  }

  RunResult result;
  for (const auto& sig : p.outputs()) {
    result.outputs.emplace_back(plan.output_shape, sig.kind, sig.width);
    stats.bytes_bound += result.outputs.back().byte_size();
  }
  const detail::BoundCall call = detail::bind_call(p.compiled(), plan, result.outputs, trusted_gathers());
  execute(call);

  stats.elements = plan.output_shape.element_count();
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  stats.elapsed_s = std::max(elapsed.count(), std::numeric_limits<double>::min());
  result.stats = stats;
  return result;
}

void InterpreterBackend::execute(const detail::BoundCall& call) {
  detail::Evaluator ev(call);
  auto failure = detail::evaluate_range(call, ev, 0, call.output_shape.element_count(), nullptr);
  if (failure) std::rethrow_exception(failure->error);
}

ParallelBackend::ParallelBackend(ParallelOptions options) : options_(std::move(options)) {
  if (options_.workers <= 0) options_.workers = default_worker_count();
}

void ParallelBackend::execute(const detail::BoundCall& call) {
  const std::size_t n = call.output_shape.element_count();
  const int workers = static_cast<int>(std::clamp<std::size_t>(n, 1, static_cast<std::size_t>(options_.workers)));

  std::vector<std::vector<ElementRange>> assigned(workers);
  if (options_.grain == 0) {
    const auto ranges = partition(n, workers);
    for (int w = 0; w < workers; ++w) assigned[w].push_back(ranges[w]);
  } else {
    const std::size_t chunks = (n + options_.grain - 1) / options_.grain;
    std::vector<std::size_t> order(chunks);
    std::iota(order.begin(), order.end(), 0);
    if (options_.shuffle_seed) {
      std::mt19937_64 rng(*options_.shuffle_seed);
      std::shuffle(order.begin(), order.end(), rng);
    }
    for (std::size_t k = 0; k < chunks; ++k) {
      const std::size_t begin = order[k] * options_.grain;
      assigned[k % workers].push_back({begin, std::min(n, begin + options_.grain)});
    }
  }

  std::atomic<std::size_t> first_failure{std::numeric_limits<std::size_t>::max()};
  std::vector<std::optional<detail::Failure>> failures(workers);
  std::vector<std::exception_ptr> crashes(workers);
  auto work = [&](int w) {
    try {
      detail::Evaluator ev(call);
      for (const ElementRange& r : assigned[w]) {
        auto f = detail::evaluate_range(call, ev, r.begin, r.end, &first_failure);
        if (f && (!failures[w] || f->element < failures[w]->element)) failures[w] = std::move(f);
      }
    } catch (...) {
      crashes[w] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) threads.emplace_back(work, w);
    work(0);
  }
  for (const auto& crash : crashes) {
    if (crash) std::rethrow_exception(crash);
  }
  const detail::Failure* first = nullptr;
  for (const auto& f : failures) {
    if (f && (first == nullptr || f->element < first->element)) first = &*f;
  }
  if (first != nullptr) std::rethrow_exception(first->error);
}

std::vector<ElementRange> partition(std::size_t elements, int workers) {
  if (workers < 1) throw Error(ErrorCode::invalid_shape, "worker count must be at least 1");
  const std::size_t w = static_cast<std::size_t>(workers);
  const std::size_t base = elements / w;
  const std::size_t extra = elements % w;
  std::vector<ElementRange> ranges;
  ranges.reserve(w);
  std::size_t begin = 0;
  for (std::size_t k = 0; k < w; ++k) {
    const std::size_t size = base + (k < extra ? 1 : 0);
    ranges.push_back({begin, begin + size});
    begin += size;
  }
  return ranges;
}

std::vector<ElementRange> partition(const Shape& shape, int workers) {
  return partition(shape.element_count(), workers);
}

int default_worker_count() {
  if (const char* env = std::getenv("STREAMFORGE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 4096) return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::unique_ptr<Backend> make_backend(std::string_view id, int workers) {
  if (id == "interp") return std::make_unique<InterpreterBackend>();
  if (id == "parallel") {
    ParallelOptions options;
    options.workers = workers;
    return std::make_unique<ParallelBackend>(options);
  }
  throw Error(ErrorCode::unknown_backend, "unknown backend '" + std::string(id) + "'");
}

}  // namespace streamforge
