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


#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "streamforge/kernels.hpp"
#include "streamforge/oracles.hpp"
#include "test_util.hpp"

namespace sf = streamforge;
using sf::ErrorCode;
using sf::FftDirection;
using sf::testing::code_of;

namespace {

template <class T>
sf::DenseMatrix<T> random_dense(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  sf::DenseMatrix<T> m(r, c);
  for (auto& x : m.data) x = static_cast<T>(u(rng));
  return m;
}

template <class T>
std::vector<std::complex<T>> random_signal(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<std::complex<T>> x(n);
  for (auto& z : x) z = {static_cast<T>(u(rng)), static_cast<T>(u(rng))};
  return x;
}

sf::DenseMatrix<double> m2(std::vector<double> v) { return sf::DenseMatrix<double>(2, 2, std::move(v)); }

sf::CsrMatrix<double> worked_csr() {
  sf::CsrMatrix<double> c;
  c.nrows = 3;
  c.ncols = 3;
  c.matvals = {1, 2, 3, 4};
  c.indx = {0, 2, 1, 2};
  c.rowp = {0, 2, 3, 4};
  return c;
}

class KernelsTest : public ::testing::Test {
 protected:
  sf::InterpreterBackend interp;
  sf::ParallelBackend par{sf::ParallelOptions{3, 0, std::nullopt, false}};
};

}  // namespace

// ---- GEMM -----------------------------------------------------------------------

TEST_F(KernelsTest, SimpleIdentityTimesB) {
  std::mt19937_64 rng(1);
  const auto b = random_dense<double>(3, 3, rng);
  EXPECT_EQ(sf::mod2am_simple(sf::DenseMatrix<double>::identity(3), b, {3, 3, 3}, interp), b);
}

TEST_F(KernelsTest, SimpleHandProduct) {
  EXPECT_EQ(sf::mod2am_simple(m2({1, 2, 3, 4}), m2({5, 6, 7, 8}), {2, 2, 2}, par), m2({19, 22, 43, 50}));
}

TEST_F(KernelsTest, SimpleZeroA) {
  std::mt19937_64 rng(2);
  const auto b = random_dense<float>(5, 4, rng);
  EXPECT_EQ(sf::mod2am_simple(sf::DenseMatrix<float>(3, 5), b, {3, 4, 5}, par), sf::DenseMatrix<float>(3, 4));
}

TEST_F(KernelsTest, GemmShapeErrors) {
  const sf::DenseMatrix<double> a(2, 3), b(2, 2);
  EXPECT_EQ(code_of([&] { (void)sf::mod2am_simple(a, b, {2, 2, 3}, interp); }), ErrorCode::shape_mismatch);
  EXPECT_EQ(code_of([&] { (void)sf::mod2am_blocked(a, b, {2, 2, 3}, interp); }), ErrorCode::shape_mismatch);
  EXPECT_EQ(code_of([&] { (void)sf::mod2am_simple(a, b, {0, 2, 3}, interp); }), ErrorCode::invalid_shape);
}

TEST_F(KernelsTest, Vec4IdentityIsExact) {
  std::mt19937_64 rng(3);
  const auto b = random_dense<float>(4, 4, rng);
  EXPECT_EQ(sf::mod2am_vec4(sf::DenseMatrix<float>::identity(4), b, {4, 4, 4}, interp), b);
}

TEST_F(KernelsTest, Vec4RandomEightCubedMatchesOracle) {
  std::mt19937_64 rng(4);
  const auto a = random_dense<float>(8, 8, rng);
  const auto b = random_dense<float>(8, 8, rng);
  const auto c = sf::mod2am_vec4(a, b, {8, 8, 8}, par);
  EXPECT_LE(sf::gemm_error(c, a, b), sf::reduction_tolerance<float>(8));
}

TEST_F(KernelsTest, Vec4RejectsNonMultiplesOfFour) {
  const sf::DenseMatrix<float> a(6, 4), b(4, 4);
  EXPECT_EQ(code_of([&] { (void)sf::mod2am_vec4(a, b, {6, 4, 4}, interp); }), ErrorCode::dimension);
}

TEST_F(KernelsTest, BlockedIdentityIsExact) {
  const auto id = sf::DenseMatrix<double>::identity(64);
  EXPECT_EQ(sf::mod2am_blocked(id, id, {64, 64, 64}, par), id);
}

TEST_F(KernelsTest, BlockedPaddedHundredCubedF32) {
  std::mt19937_64 rng(5);
  const auto a = random_dense<float>(100, 100, rng);
  const auto b = random_dense<float>(100, 100, rng);
  const auto c = sf::mod2am_blocked(a, b, {100, 100, 100}, par);
  EXPECT_LE(sf::gemm_error(c, a, b), sf::reduction_tolerance<float>(100));
}

TEST_F(KernelsTest, Blocked256CubedF64) {
  std::mt19937_64 rng(6);
  const auto a = random_dense<double>(256, 256, rng);
  const auto b = random_dense<double>(256, 256, rng);
  const auto c = sf::mod2am_blocked(a, b, {256, 256, 256}, par);
  EXPECT_LE(sf::gemm_error(c, a, b), sf::reduction_tolerance<double>(256));
}

TEST_F(KernelsTest, BlockedSmallBlockEdges) {
  std::mt19937_64 rng(7);
  const auto a = random_dense<double>(13, 9, rng);
  const auto b = random_dense<double>(9, 11, rng);
  const auto simple = sf::mod2am_simple(a, b, {13, 11, 9}, interp);
  for (int block : {1, 4, 5, 16}) {
    EXPECT_EQ(sf::mod2am_blocked(a, b, {13, 11, 9}, par, block), simple) << "block " << block;
  }
}

TEST_F(KernelsTest, VariantsAgreeOnRandomDims) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 12; ++trial) {
    auto dim = [&] { return 4 * std::uniform_int_distribution<std::int64_t>(1, 24)(rng); };
    const sf::GemmDims d{dim(), dim(), dim()};
    const auto m = static_cast<std::size_t>(d.m), n = static_cast<std::size_t>(d.n),
               l = static_cast<std::size_t>(d.l);
    if (trial % 2 == 0) {
      const auto a = random_dense<float>(m, l, rng);
      const auto b = random_dense<float>(l, n, rng);
      const auto s = sf::mod2am_simple(a, b, d, par);
      EXPECT_LE(sf::gemm_error(sf::mod2am_vec4(a, b, d, par), a, b), sf::kF32Tolerance);
      EXPECT_LE(sf::gemm_error(sf::mod2am_blocked(a, b, d, par), a, b), sf::kF32Tolerance);
      EXPECT_LE(sf::gemm_error(s, a, b), sf::kF32Tolerance);
    } else {
      const auto a = random_dense<double>(m, l, rng);
      const auto b = random_dense<double>(l, n, rng);
      const double tol = sf::reduction_tolerance<double>(d.l);
      EXPECT_LE(sf::gemm_error(sf::mod2am_simple(a, b, d, par), a, b), tol);
      EXPECT_LE(sf::gemm_error(sf::mod2am_vec4(a, b, d, par), a, b), tol);
      EXPECT_LE(sf::gemm_error(sf::mod2am_blocked(a, b, d, par), a, b), tol);
    }
  }
}

TEST_F(KernelsTest, GemmBackendEquivalence) {
  std::mt19937_64 rng(9);
  const auto a = random_dense<float>(20, 12, rng);
  const auto b = random_dense<float>(12, 16, rng);
  const sf::GemmDims d{20, 16, 12};
  for (int w : {1, 2, 4, sf::default_worker_count()}) {
    sf::ParallelBackend p(sf::ParallelOptions{w, 0, std::nullopt, false});
    EXPECT_EQ(sf::mod2am_simple(a, b, d, p), sf::mod2am_simple(a, b, d, interp));
    EXPECT_EQ(sf::mod2am_vec4(a, b, d, p), sf::mod2am_vec4(a, b, d, interp));
    EXPECT_EQ(sf::mod2am_blocked(a, b, d, p, 8), sf::mod2am_blocked(a, b, d, interp, 8));
  }
}

TEST_F(KernelsTest, GemmStatsAccumulate) {
  const auto id = sf::DenseMatrix<double>::identity(8);
  sf::RunStats stats;
  (void)sf::mod2am_blocked(id, id, {8, 8, 8}, interp, 4, &stats);
  EXPECT_GT(stats.elapsed_s, 0.0);
  // 2x2 output blocks, each updated by 2 block pairs of 16 elements.
  EXPECT_EQ(stats.elements, 2u * 2u * 2u * 16u);
}

// ---- SpMV -----------------------------------------------------------------------

TEST_F(KernelsTest, SpmvIdentity) {
  const auto csr = sf::csr_from_dense(sf::DenseMatrix<double>::identity(5));
  const std::vector<double> v{1.5, -2, 3, 0.25, 9};
  EXPECT_EQ(sf::mod2as(csr, v, par), v);
}

TEST_F(KernelsTest, SpmvWorkedExample) {
  EXPECT_EQ(sf::mod2as(worked_csr(), std::vector<double>{1, 1, 1}, interp), (std::vector<double>{3, 3, 4}));
}

TEST_F(KernelsTest, SpmvEmptyRowsAreZero) {
  sf::CsrMatrix<float> c;
  c.nrows = 3;
  c.ncols = 2;
  c.matvals = {2};
  c.indx = {1};
  c.rowp = {0, 0, 1, 1};
  EXPECT_EQ(sf::mod2as(c, std::vector<float>{5, 7}, par), (std::vector<float>{0, 14, 0}));
  const auto empty = sf::csr_from_dense(sf::DenseMatrix<float>(4, 4));
  EXPECT_EQ(sf::mod2as(empty, std::vector<float>(4, 1.0f), par), std::vector<float>(4, 0.0f));
}

TEST_F(KernelsTest, SpmvFormatErrors) {
  auto bad = worked_csr();
  bad.rowp = {0, 3, 2, 4};
  EXPECT_EQ(code_of([&] { (void)sf::mod2as(bad, std::vector<double>(3), interp); }), ErrorCode::format);
  bad = worked_csr();
  bad.indx[1] = 3;
  EXPECT_EQ(code_of([&] { (void)sf::mod2as(bad, std::vector<double>(3), interp); }), ErrorCode::format);
  bad = worked_csr();
  bad.rowp.back() = 3;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::format);
  bad = worked_csr();
  bad.rowp.front() = 1;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::format);
  EXPECT_EQ(code_of([&] { (void)sf::mod2as(worked_csr(), std::vector<double>(4), interp); }),
            ErrorCode::shape_mismatch);
}

TEST_F(KernelsTest, SpmvMatchesDenseGemvOnRandomSparsity) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
    const auto c = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
    const double keep = std::uniform_real_distribution<double>(0, 1)(rng);
    auto d = random_dense<double>(r, c, rng);
    for (auto& x : d.data) {
      if (std::uniform_real_distribution<double>(0, 1)(rng) > keep) x = 0;
    }
    const auto v = random_dense<double>(c, 1, rng);
    const auto csr = sf::csr_from_dense(d);
    const auto out = sf::mod2as(csr, v.data, par);
    ASSERT_EQ(out.size(), r);
    EXPECT_LE(sf::gemm_error(sf::DenseMatrix<double>(r, 1, out), d, v),
              sf::reduction_tolerance<double>(sf::max_row_length(csr)));
    EXPECT_LE(sf::spmv_error(out, csr, v.data), sf::reduction_tolerance<double>(sf::max_row_length(csr)));
  }
}

TEST_F(KernelsTest, SpmvBackendEquivalence) {
  std::mt19937_64 rng(11);
  auto d = random_dense<float>(40, 30, rng);
  for (std::size_t k = 0; k < d.data.size(); k += 3) d.data[k] = 0;
  const auto csr = sf::csr_from_dense(d);
  const auto v = random_dense<float>(30, 1, rng).data;
  const auto ref = sf::mod2as(csr, v, interp);
  for (int w : {1, 2, 4}) {
    sf::ParallelBackend p(sf::ParallelOptions{w, 1, 3, false});
    EXPECT_EQ(sf::mod2as(csr, v, p), ref);
  }
}

TEST(CsrFromDense, ZeroMatrix) {
  const auto c = sf::csr_from_dense(sf::DenseMatrix<double>(3, 4));
  EXPECT_EQ(c.nelmts(), 0);
  EXPECT_EQ(c.rowp, (std::vector<std::int32_t>{0, 0, 0, 0}));
  EXPECT_NO_THROW(c.validate());
}

TEST(CsrFromDense, Identity) {
  const auto c = sf::csr_from_dense(sf::DenseMatrix<float>::identity(3));
  EXPECT_EQ(c.matvals, (std::vector<float>{1, 1, 1}));
  EXPECT_EQ(c.indx, (std::vector<std::int32_t>{0, 1, 2}));
  EXPECT_EQ(c.rowp, (std::vector<std::int32_t>{0, 1, 2, 3}));
}

TEST(CsrFromDense, WorkedExampleRoundTrips) {
  const auto c = worked_csr();
  const auto back = sf::csr_from_dense(c.to_dense());
  EXPECT_EQ(back.matvals, c.matvals);
  EXPECT_EQ(back.indx, c.indx);
  EXPECT_EQ(back.rowp, c.rowp);
}

TEST(CsrFromDense, ZeroToleranceDropsSmallEntries) {
  const sf::DenseMatrix<double> d(1, 4, {0.5, -1e-9, 2e-3, -3});
  const auto c = sf::csr_from_dense(d, 1e-3);
  EXPECT_EQ(c.matvals, (std::vector<double>{0.5, 2e-3, -3}));
  EXPECT_EQ(c.indx, (std::vector<std::int32_t>{0, 2, 3}));
}

// ---- FFT ------------------------------------------------------------------------

TEST(FftPlan, Properties) {
  for (std::int64_t n : {1, 2, 8, 1024}) {
    const auto plan = sf::make_fft_plan<float>(n);
    EXPECT_EQ(plan.n, n);
    EXPECT_EQ(1LL << plan.stages, n);
    ASSERT_EQ(plan.permutation.size(), static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) EXPECT_EQ(plan.permutation[plan.permutation[k]], k);
    ASSERT_EQ(plan.twiddles.size(), static_cast<std::size_t>(n / 2));
    for (std::size_t k = 0; k < plan.twiddles.size(); ++k) {
      EXPECT_NEAR(std::abs(plan.twiddles[k]), 1.0, 1e-6);
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      EXPECT_NEAR(plan.twiddles[k].real(), std::cos(ang), 1e-6);
      EXPECT_NEAR(plan.twiddles[k].imag(), std::sin(ang), 1e-6);
    }
  }
  EXPECT_EQ(sf::make_fft_plan<double>(8).permutation, (std::vector<std::int32_t>{0, 4, 2, 6, 1, 5, 3, 7}));
}

TEST(FftPlan, RejectsNonPowersOfTwo) {
  EXPECT_EQ(code_of([] { (void)sf::make_fft_plan<float>(12); }), ErrorCode::dimension);
  EXPECT_EQ(code_of([] { (void)sf::make_fft_plan<float>(0); }), ErrorCode::dimension);
}

TEST_F(KernelsTest, FftSinglePoint) {
  const std::vector<std::complex<float>> x{{2.5f, -1.0f}};
  EXPECT_EQ(sf::mod2f(x, FftDirection::forward, interp), x);
  EXPECT_EQ(sf::mod2f(x, FftDirection::inverse, interp), x);
}

TEST_F(KernelsTest, FftImpulseAndConstant) {
  using C = std::complex<double>;
  EXPECT_EQ(sf::mod2f(std::vector<C>{1, 0, 0, 0}, FftDirection::forward, par), (std::vector<C>{1, 1, 1, 1}));
  EXPECT_EQ(sf::mod2f(std::vector<C>{1, 1, 1, 1}, FftDirection::forward, par), (std::vector<C>{4, 0, 0, 0}));
}

TEST_F(KernelsTest, FftRejectsNonPowerOfTwo) {
  EXPECT_EQ(code_of([&] { (void)sf::mod2f(std::vector<std::complex<float>>(6), FftDirection::forward, interp); }),
            ErrorCode::dimension);
}

TEST_F(KernelsTest, FftRandom1024MatchesDft) {
  std::mt19937_64 rng(12);
  const auto x = random_signal<float>(1024, rng);
  const auto y = sf::mod2f(x, FftDirection::forward, par);
  EXPECT_LE(sf::relative_l2_error(y, sf::dft_oracle(x, FftDirection::forward)), sf::kFftF32Tolerance);
  const auto xd = random_signal<double>(1024, rng);
  const auto yd = sf::mod2f(xd, FftDirection::forward, par);
  EXPECT_LE(sf::relative_l2_error(yd, sf::dft_oracle(xd, FftDirection::forward)), sf::kFftF64Tolerance);
}

TEST_F(KernelsTest, FftInverseMatchesInverseDft) {
  std::mt19937_64 rng(13);
  const auto x = random_signal<double>(256, rng);
  const auto y = sf::mod2f(x, FftDirection::inverse, par);
  EXPECT_LE(sf::relative_l2_error(y, sf::dft_oracle(x, FftDirection::inverse)), sf::kFftF64Tolerance);
}

TEST_F(KernelsTest, FftLinearity) {
  std::mt19937_64 rng(14);
  for (std::size_t n : {16u, 512u}) {
    const auto x = random_signal<float>(n, rng);
    const auto y = random_signal<float>(n, rng);
    const std::complex<float> a(0.75f, -0.5f), b(-1.25f, 0.25f);
    std::vector<std::complex<float>> mix(n);
    for (std::size_t k = 0; k < n; ++k) mix[k] = a * x[k] + b * y[k];
    const auto fx = sf::mod2f(x, FftDirection::forward, par);
    const auto fy = sf::mod2f(y, FftDirection::forward, par);
    const auto fmix = sf::mod2f(mix, FftDirection::forward, par);
    std::vector<std::complex<double>> combo(n);
    for (std::size_t k = 0; k < n; ++k) {
      combo[k] = std::complex<double>(a) * std::complex<double>(fx[k]) + std::complex<double>(b) * std::complex<double>(fy[k]);
    }
    EXPECT_LE(sf::relative_l2_error(fmix, combo), 1e-4);
  }
}

TEST_F(KernelsTest, FftRoundTripUpTo65536) {
  std::mt19937_64 rng(15);
  for (std::size_t n : {2u, 64u, 4096u, 65536u}) {
    const auto x = random_signal<float>(n, rng);
    const auto back = sf::mod2f(sf::mod2f(x, FftDirection::forward, par), FftDirection::inverse, par);
    std::vector<std::complex<double>> ref(x.begin(), x.end());
    EXPECT_LE(sf::relative_l2_error(back, ref), 1e-5) << "n=" << n;
  }
}

TEST_F(KernelsTest, FftParseval) {
  std::mt19937_64 rng(16);
  const auto x = random_signal<float>(2048, rng);
  const auto y = sf::mod2f(x, FftDirection::forward, par);
  double ex = 0, ey = 0;
  for (const auto& z : x) ex += std::norm(std::complex<double>(z));
  for (const auto& z : y) ey += std::norm(std::complex<double>(z));
  EXPECT_NEAR(ey / 2048.0, ex, 1e-4 * ex);
}

TEST_F(KernelsTest, FftBackendEquivalence) {
  std::mt19937_64 rng(17);
  const auto x = random_signal<double>(128, rng);
  const auto plan = sf::make_fft_plan<double>(128);
  const auto ref = sf::mod2f(plan, x, FftDirection::forward, interp);
  for (int w : {1, 2, 4}) {
    sf::ParallelBackend p(sf::ParallelOptions{w, 5, 9, false});
    EXPECT_EQ(sf::mod2f(plan, x, FftDirection::forward, p), ref);
  }
}
