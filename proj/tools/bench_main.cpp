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

// bench: sweeps kernels over sizes and backends and prints one CSV record
// per cell.
//
//   bench --kernel mod2am-simple,mod2as --backend interp,parallel \
//         --sizes 64,128 --precision f64 --reps 5 --out results.csv
//
// Exit status: 0 success, 2 usage error, 3 oracle mismatch, 4 backend error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "streamforge/bench.hpp"

namespace sf = streamforge;

namespace {

constexpr int kExitUsage = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stream kernel benchmark harness"};
  std::vector<std::string> kernels{"mod2am-simple"};
  std::vector<std::string> backends{"parallel"};
  std::vector<std::int64_t> sizes;
  std::string precision = "f64";
  std::string out_path;
  sf::bench::SweepConfig config;
  bool csv = false;

  app.add_option("--kernel", kernels, "mod2am-simple|mod2am-vec4|mod2am-blocked|mod2as|mod2f")
      ->delimiter(',');
  app.add_option("--backend", backends, "interp|parallel|native")->delimiter(',');
  auto* sizes_opt = app.add_option("--sizes", sizes, "comma-separated problem sizes")
                        ->delimiter(',')
                        ->allow_extra_args(false);
  app.add_option("--precision", precision, "f32|f64");
  app.add_option("--reps", config.reps, "timed repetitions per cell (>= 3)");
  app.add_option("--density", config.density, "sparse matrix density in (0, 1]");
  app.add_option("--workers", config.workers, "parallel workers (default: STREAMFORGE_WORKERS or all cores)");
  app.add_option("--seed", config.seed, "RNG seed");
  app.add_option("--out", out_path, "write records to FILE instead of stdout");
  auto* csv_flag = app.add_flag("--csv", csv, "CSV output (default)");
  app.add_flag("--table", config.table, "aligned table output")->excludes(csv_flag);
  app.add_flag("--inject-fault", config.inject_fault, "perturb kernel output (harness self-test)")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    config.kernels.clear();
    for (const auto& k : kernels) config.kernels.push_back(sf::bench::parse_kernel(k));
    config.backends = backends;
    config.precision = sf::bench::parse_precision(precision);
    if (sizes_opt->count() > 0) config.sizes = sizes;

    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path);
      if (!file) {
        std::cerr << "bench: cannot open " << out_path << "\n";
        return kExitUsage;
      }
    }
    std::ostream& out = out_path.empty() ? std::cout : file;
    const sf::bench::SweepResult result = sf::bench::run_sweep(config, out);
    for (const auto& f : result.failures) std::cerr << "bench: " << f << "\n";
    return result.exit_code;
  } catch (const sf::Error& e) {
    std::cerr << "bench: " << e.what() << "\n";
    return kExitUsage;
  }
}
