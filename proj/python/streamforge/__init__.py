# Copyright 2026 The StreamForge Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Stream-program kernels, native oracles and the benchmark harness."""

from streamforge._core import (
    CSV_HEADER,
    Error,
    default_worker_count,
    dft_oracle,
    flop_count,
    gemm_oracle,
    measure,
    mod2am,
    mod2as,
    mod2f,
    partition,
)

__all__ = [
    "CSV_HEADER",
    "Error",
    "default_worker_count",
    "dft_oracle",
    "flop_count",
    "gemm_oracle",
    "measure",
    "mod2am",
    "mod2as",
    "mod2f",
    "partition",
]
