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


// Python module streamforge._core: kernels, oracles and the bench harness
// over NumPy arrays.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "streamforge/bench.hpp"
#include "streamforge/kernels.hpp"
#include "streamforge/oracles.hpp"

namespace py = pybind11;
namespace sf = streamforge;

namespace {

template <class T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <class T>
sf::DenseMatrix<T> to_dense(const Array<T>& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
  const auto r = static_cast<std::size_t>(a.shape(0)), c = static_cast<std::size_t>(a.shape(1));
  return sf::DenseMatrix<T>(r, c, std::vector<T>(a.data(), a.data() + r * c));
}

template <class T>
py::array_t<T> from_dense(sf::DenseMatrix<T>&& m) {
  py::array_t<T> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

template <class T>
py::array_t<T> from_vector(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

template <class T>
std::vector<T> to_vector(const Array<T>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return std::vector<T>(a.data(), a.data() + a.size());
}

bool is_single(const py::array& a) { return a.dtype().is(py::dtype::of<float>()); }
bool is_single_complex(const py::array& a) { return a.dtype().is(py::dtype::of<std::complex<float>>()); }

template <class T>
py::array_t<T> gemm(const py::array& pa, const py::array& pb, const std::string& variant, const std::string& backend,
                    int workers, int block) {
  const auto a = to_dense<T>(pa.cast<Array<T>>());
  const auto b = to_dense<T>(pb.cast<Array<T>>());
  const sf::GemmDims dims{static_cast<std::int64_t>(a.rows), static_cast<std::int64_t>(b.cols),
                          static_cast<std::int64_t>(a.cols)};
  sf::DenseMatrix<T> c;
  {
    py::gil_scoped_release release;
    if (backend == "native") {
      c = sf::gemm_fast_native(a, b, dims, workers);
    } else {
      auto be = sf::make_backend(backend, workers);
      if (variant == "simple") {
        c = sf::mod2am_simple(a, b, dims, *be);
      } else if (variant == "vec4") {
        c = sf::mod2am_vec4(a, b, dims, *be);
      } else if (variant == "blocked") {
        c = sf::mod2am_blocked(a, b, dims, *be, block);
      } else {
        throw sf::Error(sf::ErrorCode::unknown_kernel, "unknown GEMM variant '" + variant + "'");
      }
    }
  }
  return from_dense(std::move(c));
}

template <class T>
sf::CsrMatrix<T> make_csr(const py::array& matvals, const py::array& indx, const py::array& rowp,
                          std::int64_t ncols) {
  sf::CsrMatrix<T> csr;
  csr.matvals = to_vector<T>(matvals.cast<Array<T>>());
  csr.indx = to_vector<std::int32_t>(indx.cast<Array<std::int32_t>>());
  csr.rowp = to_vector<std::int32_t>(rowp.cast<Array<std::int32_t>>());
  csr.nrows = static_cast<std::int64_t>(csr.rowp.size()) - 1;
  csr.ncols = ncols;
  return csr;
}

template <class T>
py::array_t<T> spmv(const py::array& matvals, const py::array& indx, const py::array& rowp, std::int64_t ncols,
                    const py::array& invec, const std::string& backend, int workers) {
  const auto csr = make_csr<T>(matvals, indx, rowp, ncols);
  const auto v = to_vector<T>(invec.cast<Array<T>>());
  std::vector<T> out;
  {
    py::gil_scoped_release release;
    if (backend == "native") {
      csr.validate();
      out = sf::spmv_native(csr, v);
    } else {
      auto be = sf::make_backend(backend, workers);
      out = sf::mod2as(csr, v, *be);
    }
  }
  return from_vector(out);
}

template <class T>
py::array_t<std::complex<T>> fft(const py::array& px, bool inverse, const std::string& backend, int workers) {
  const auto x = to_vector<std::complex<T>>(px.cast<Array<std::complex<T>>>());
  const auto dir = inverse ? sf::FftDirection::inverse : sf::FftDirection::forward;
  std::vector<std::complex<T>> y;
  {
    py::gil_scoped_release release;
    if (backend == "native") {
      y = sf::fft_native(x, dir);
    } else {
      auto be = sf::make_backend(backend, workers);
      y = sf::mod2f(x, dir, *be);
    }
  }
  return from_vector(y);
}

py::dict record_to_dict(const sf::bench::BenchRecord& r) {
  py::dict d;
  d["kernel"] = r.kernel;
  d["variant"] = r.variant;
  d["backend"] = r.backend;
  d["precision"] = r.precision;
  d["m"] = r.sizes.m;
  d["n"] = r.sizes.n;
  d["l"] = r.sizes.l;
  d["nnz"] = r.sizes.nnz;
  d["fft_n"] = r.sizes.fft_n;
  d["reps"] = r.reps;
  d["min_s"] = r.min_s;
  d["median_s"] = r.median_s;
  d["gflops"] = r.gflops;
  d["bytes"] = r.bytes;
  d["checksum"] = r.checksum;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stream-program kernels (GEMM, CSR SpMV, radix-2 FFT), native oracles and the bench harness.";

  // streamforge.Error carries the library error code name in `.code`.
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&] { return py::object(py::exception<sf::Error>(m, "Error", PyExc_RuntimeError)); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const sf::Error& e) {
      const py::object& type = error_type.get_stored();
      py::object exc = type(e.what());
      exc.attr("code") = std::string(sf::to_string(e.code()));
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  m.def(
      "mod2am",
      [](const py::array& a, const py::array& b, const std::string& variant, const std::string& backend, int workers,
         int block) {
        return is_single(a) ? py::array(gemm<float>(a, b, variant, backend, workers, block))
                            : py::array(gemm<double>(a, b, variant, backend, workers, block));
      },
      py::arg("a"), py::arg("b"), py::arg("variant") = "simple", py::arg("backend") = "parallel",
      py::arg("workers") = 0, py::arg("block") = static_cast<int>(sf::kDefaultBlock),
      "C = A @ B with the simple, vec4 or blocked stream kernel. float32 input stays float32, anything else is "
      "computed in float64. backend='native' runs the cache-blocked native baseline.");

  m.def(
      "mod2as",
      [](const py::array& matvals, const py::array& indx, const py::array& rowp, std::int64_t ncols,
         const py::array& invec, const std::string& backend, int workers) {
        return is_single(matvals) ? py::array(spmv<float>(matvals, indx, rowp, ncols, invec, backend, workers))
                                  : py::array(spmv<double>(matvals, indx, rowp, ncols, invec, backend, workers));
      },
      py::arg("matvals"), py::arg("indx"), py::arg("rowp"), py::arg("ncols"), py::arg("invec"),
      py::arg("backend") = "parallel", py::arg("workers") = 0, "CSR matrix-vector product.");

  m.def(
      "mod2f",
      [](const py::array& x, bool inverse, const std::string& backend, int workers) {
        return is_single_complex(x) ? py::array(fft<float>(x, inverse, backend, workers))
                                    : py::array(fft<double>(x, inverse, backend, workers));
      },
      py::arg("x"), py::arg("inverse") = false, py::arg("backend") = "parallel", py::arg("workers") = 0,
      "Radix-2 FFT of a power-of-two length complex vector. The inverse includes the 1/n factor.");

  m.def(
      "gemm_oracle",
      [](const Array<double>& a, const Array<double>& b) {
        const auto da = to_dense(a), db = to_dense(b);
        return from_dense(sf::gemm_oracle(da, db, {static_cast<std::int64_t>(da.rows),
                                                   static_cast<std::int64_t>(db.cols),
                                                   static_cast<std::int64_t>(da.cols)}));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "dft_oracle",
      [](const Array<std::complex<double>>& x, bool inverse) {
        return from_vector(
            sf::dft_oracle(to_vector(x), inverse ? sf::FftDirection::inverse : sf::FftDirection::forward));
      },
      py::arg("x"), py::arg("inverse") = false, "Direct O(n^2) DFT in float64.");

  m.def(
      "partition",
      [](std::size_t elements, int workers) {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (const auto& r : sf::partition(elements, workers)) out.emplace_back(r.begin, r.end);
        return out;
      },
      py::arg("elements"), py::arg("workers"), "Balanced [begin, end) ranges, one per worker.");

  m.def("default_worker_count", &sf::default_worker_count);

  m.def(
      "flop_count",
      [](const std::string& kernel, std::int64_t m, std::int64_t n, std::int64_t l, std::int64_t nnz,
         std::int64_t fft_n) { return sf::bench::flop_count(kernel, {m, n, l, nnz, fft_n}); },
      py::arg("kernel"), py::arg("m") = 0, py::arg("n") = 0, py::arg("l") = 0, py::arg("nnz") = 0,
      py::arg("fft_n") = 0);

  m.def(
      "measure",
      [](const std::string& kernel, const std::string& backend, std::int64_t size, const std::string& precision,
         int reps, double density, int workers, std::uint64_t seed) {
        sf::bench::MeasureConfig cfg;
        cfg.kernel = sf::bench::parse_kernel(kernel);
        cfg.backend = backend;
        cfg.size = size;
        cfg.precision = sf::bench::parse_precision(precision);
        cfg.reps = reps;
        cfg.density = density;
        cfg.workers = workers;
        cfg.seed = seed;
        sf::bench::BenchRecord r;
        {
          py::gil_scoped_release release;
          r = sf::bench::measure(cfg);
        }
        return record_to_dict(r);
      },
      py::arg("kernel"), py::arg("backend") = "parallel", py::arg("size") = 64, py::arg("precision") = "f64",
      py::arg("reps") = 5, py::arg("density") = 0.01, py::arg("workers") = 0, py::arg("seed") = 42,
      "Verifies one kernel configuration against its oracle, then times it. Returns the record as a dict.");

  m.attr("CSV_HEADER") = std::string(sf::bench::kCsvHeader);
}
