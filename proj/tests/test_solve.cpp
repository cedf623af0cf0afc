// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <limits>

#include "test_util.hpp"

using namespace mshift;
using mshift::testing::bitwise_equal;
using mshift::testing::random_complex;
using mshift::testing::random_real;

namespace {

ControllerHessForm scalar_form(double a, double b, double c) {
  ControllerHessForm f;
  f.Ahat = RealMatrix(1, 1, a);
  f.Bhat = RealMatrix(1, 1, b);
  f.Chat = RealMatrix(1, 1, c);
  f.m = 1;
  return f;
}

SolverConfig config(mshift::index nb, mshift::index batch, WorkerPool* pool = nullptr) {
  SolverConfig c;
  c.nb = nb;
  c.batch = batch;
  c.pool = pool;
  return c;
}

}  // namespace

TEST(TransferFunction, ScalarResolvent) {
  const ControllerHessForm f = scalar_form(-0.75, 2.0, 3.0);
  const std::vector<cplx> shifts{cplx(2.0, 0.0), cplx(0.5, -1.25)};
  const auto tf = eval_transfer_function(f, shifts);
  for (std::size_t l = 0; l < shifts.size(); ++l) {
    const cplx expect = 3.0 * 2.0 / (shifts[l] + 0.75);
    EXPECT_LE(std::abs(tf.G(0, static_cast<mshift::index>(l)) - expect), 4 * eps * std::abs(expect));
  }
}

TEST(TransferFunction, MatchesLuOracle) {
  const SystemBundle s = random_stable_system(50, 2, 3, 41);
  const ControllerHessForm f = mshift::testing::reduce(s, 16);
  const auto shifts = mshift::testing::imaginary_shifts(7);
  for (const cplx sg : shifts) ASSERT_LE(reference::condition_number(s.A, sg), 1e4);
  const auto tf = eval_transfer_function(f, shifts, config(8, 3));
  EXPECT_LE(mshift::testing::tf_error(s, tf), 1e-10);
}

TEST(TransferFunction, BlockingAndBatchInvariance) {
  const SystemBundle s = random_stable_system(50, 2, 3, 42);
  const ControllerHessForm f = mshift::testing::reduce(s, 16);
  const auto shifts = mshift::testing::imaginary_shifts(7);
  const auto base = eval_transfer_function(f, shifts, config(8, 1));
  for (mshift::index nb : {8, 32})
    for (mshift::index batch : {1, 7}) {
      const auto tf = eval_transfer_function(f, shifts, config(nb, batch));
      EXPECT_LE(reference::relative_error(tf.G, base.G), 1e-12) << "nb=" << nb << " s=" << batch;
    }
}

TEST(TransferFunction, EmptyShiftList) {
  const SystemBundle s = random_stable_system(10, 1, 1, 43);
  const auto tf = eval_transfer_function(mshift::testing::reduce(s), {});
  EXPECT_EQ(tf.G.cols(), 0);
  EXPECT_TRUE(tf.status.empty());
}

TEST(TransferFunction, EigenvalueShiftIsIsolated) {
  // Triangular Ahat with known eigenvalues on the diagonal.
  NormalStream rng(44);
  ControllerHessForm f;
  f.Ahat = random_real(rng, 12, 12);
  for (mshift::index j = 0; j < 12; ++j) {
    for (mshift::index i = j + 1; i < 12; ++i) f.Ahat(i, j) = 0.0;
    f.Ahat(j, j) = -1.0 - static_cast<double>(j);
  }
  f.Bhat = RealMatrix(12, 1);
  f.Bhat(0, 0) = 1.0;
  f.Chat = random_real(rng, 2, 12);
  f.m = 1;
  std::vector<cplx> shifts = mshift::testing::imaginary_shifts(4);
  const auto clean = eval_transfer_function(f, shifts, config(4, 5));
  shifts.insert(shifts.begin() + 2, cplx(-3.0, 0.0));
  const auto hit = eval_transfer_function(f, shifts, config(4, 5));
  EXPECT_FALSE(hit.status[2].ok());
  EXPECT_TRUE(std::isnan(hit.G(0, 2).real()));
  for (std::size_t l = 0, k = 0; l < shifts.size(); ++l) {
    if (l == 2) continue;
    EXPECT_TRUE(hit.status[l].ok());
    EXPECT_TRUE(bitwise_equal(hit.slice(static_cast<mshift::index>(l), 1), clean.slice(static_cast<mshift::index>(k), 1)));
    ++k;
  }
}

TEST(ReducedSolve, UpperTriangularBackSubstitution) {
  NormalStream rng(45);
  ControllerHessForm f;
  f.Ahat = random_real(rng, 6, 6);
  for (mshift::index j = 0; j < 6; ++j) {
    for (mshift::index i = j + 1; i < 6; ++i) f.Ahat(i, j) = 0.0;
    f.Ahat(j, j) += 5.0;
  }
  f.Bhat = random_real(rng, 6, 2);
  for (mshift::index i = 1; i < 6; ++i) f.Bhat(i, 0) = 0.0;
  for (mshift::index i = 2; i < 6; ++i) f.Bhat(i, 1) = 0.0;
  f.Chat = random_real(rng, 1, 6);
  f.m = 2;
  ComplexMatrix e1(2, 1);
  e1(0, 0) = 1.0;
  const std::vector<cplx> shift{cplx(0.25, 0.5)};
  const auto x = solve_shifted_reduced(f, shift, e1.view());
  ComplexMatrix r = to_complex(f.Ahat);
  for (mshift::index i = 0; i < 6; ++i) r(i, i) -= shift[0];
  ComplexMatrix rhs(6, 1);
  for (mshift::index i = 0; i < 6; ++i) rhs(i, 0) = f.Bhat(i, 0);
  EXPECT_LE(reference::relative_error(x.X, trsm_upper(r, rhs)), 1e-13);
}

TEST(ReducedSolve, MatchesLuOracle) {
  const SystemBundle s = random_stable_system(40, 3, 2, 46);
  const ControllerHessForm f = mshift::testing::reduce(s, 8);
  NormalStream rng(47);
  const ComplexMatrix coeffs = random_complex(rng, 3, 5);
  const std::vector<cplx> shifts{cplx(0.1, 1.0), cplx(-0.2, 2.0), cplx(0.0, 0.3), cplx(1.0, 0.0), cplx(0.5, -4.0)};
  const auto sol = solve_shifted_reduced(f, shifts, coeffs.view(), config(6, 2));
  for (mshift::index l = 0; l < 5; ++l) {
    const ComplexMatrix rhs = multiply(to_complex(f.Bhat), ComplexMatrix(coeffs.block(0, l, 3, 1)));
    const ComplexMatrix ref = reference::lu_solve_shifted(f.Ahat, shifts[static_cast<std::size_t>(l)], rhs);
    EXPECT_LE(reference::relative_error(sol.X.block(0, l, 40, 1), ref), 1e-10);
  }
}

TEST(ReducedSolve, ZeroShiftIsPlainSolve) {
  const SystemBundle s = random_stable_system(20, 2, 1, 48);
  const ControllerHessForm f = mshift::testing::reduce(s, 4);
  ComplexMatrix coeffs(2, 1);
  coeffs(1, 0) = 1.0;
  const std::vector<cplx> zero{cplx{}};
  const auto sol = solve_shifted_reduced(f, zero, coeffs.view(), config(4, 1));
  const ComplexMatrix rhs = multiply(to_complex(f.Bhat), coeffs);
  EXPECT_LE(reference::relative_error(sol.X, reference::lu_solve_shifted(f.Ahat, 0.0, rhs)), 1e-12);
}

TEST(TransposedSolve, Scalar) {
  const ControllerHessForm f = scalar_form(1.5, 1.0, 1.0);
  ComplexMatrix c(1, 1, cplx(2.0, 1.0));
  const std::vector<cplx> shift{cplx(0.5, 0.5)};
  const auto sol = solve_shifted_transposed(f, shift, c.view());
  const cplx expect = cplx(2.0, 1.0) / (1.5 - shift[0]);
  EXPECT_LE(std::abs(sol.X(0, 0) - expect), 4 * eps * std::abs(expect));
}

TEST(TransposedSolve, MatchesLuOracle) {
  const SystemBundle s = random_stable_system(40, 3, 2, 49);
  const ControllerHessForm f = mshift::testing::reduce(s, 8);
  NormalStream rng(50);
  const ComplexMatrix c = random_complex(rng, 40, 5);
  const std::vector<cplx> shifts{cplx(0.1, 1.0), cplx(-0.2, 2.0), cplx(0.0, 0.3), cplx(1.0, 0.0), cplx(0.5, -4.0)};
  const auto sol = solve_shifted_transposed(f, shifts, c.view(), config(5, 3));
  for (mshift::index l = 0; l < 5; ++l) {
    const ComplexMatrix ref =
        reference::lu_solve_shifted(f.Ahat, shifts[static_cast<std::size_t>(l)], ComplexMatrix(c.block(0, l, 40, 1)), true);
    EXPECT_LE(reference::relative_error(sol.X.block(0, l, 40, 1), ref), 1e-10);
  }
}

TEST(TransposedSolve, RecoversConstructedSolution) {
  const SystemBundle s = random_stable_system(40, 3, 2, 51);
  const ControllerHessForm f = mshift::testing::reduce(s, 8);
  NormalStream rng(52);
  const ComplexMatrix v = random_complex(rng, 40, 3);
  const std::vector<cplx> shifts{cplx(0.0, 0.5), cplx(0.3, -2.0), cplx(-0.1, 7.0)};
  ComplexMatrix c(40, 3);
  for (mshift::index l = 0; l < 3; ++l)
    for (mshift::index i = 0; i < 40; ++i) {
      cplx acc = -shifts[static_cast<std::size_t>(l)] * v(i, l);
      for (mshift::index k = 0; k < 40; ++k) acc += f.Ahat(k, i) * v(k, l);
      c(i, l) = acc;
    }
  const auto sol = solve_shifted_transposed(f, shifts, c.view(), config(7, 2));
  EXPECT_LE(reference::relative_error(sol.X, v), 1e-10);
  for (mshift::index l = 0; l < 3; ++l) {
    std::vector<cplx> x(40), rhs(40);
    for (mshift::index i = 0; i < 40; ++i) {
      x[static_cast<std::size_t>(i)] = sol.X(i, l);
      rhs[static_cast<std::size_t>(i)] = c(i, l);
    }
    EXPECT_LE(residual_certificate(f.Ahat, shifts[static_cast<std::size_t>(l)], x, rhs, true), 1e-14);
  }
}

TEST(Pseudospectrum, ScalarIsAbsoluteValue) {
  const ControllerHessForm f = scalar_form(-1.0, 2.0, 0.5);
  const std::vector<cplx> grid{cplx(0.0, 1.0), cplx(2.0, -3.0)};
  const auto v = structured_pseudospectrum_grid(f, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_NEAR(v[k], std::abs(1.0 / (grid[k] + 1.0)), 1e-15);
}

TEST(Pseudospectrum, FarFieldApproachesCB) {
  const SystemBundle s = random_stable_system(16, 2, 3, 53);
  const ControllerHessForm f = mshift::testing::reduce(s, 4);
  const double z = 1e8 * frobenius_norm(s.A);
  const std::vector<cplx> grid{cplx(0.0, z)};
  const double cb = largest_singular_value(to_complex(multiply(s.C, s.B)).view());
  const auto v = structured_pseudospectrum_grid(f, grid);
  EXPECT_NEAR(v[0] * z / cb, 1.0, 1e-6);
}

TEST(Pseudospectrum, NormalMatrixMatchesSvdOracle) {
  // A = U diag(lambda) U^T with orthogonal U from a Householder reflector.
  NormalStream rng(54);
  const RealMatrix u0 = random_real(rng, 5, 1);
  std::vector<double> x(5);
  for (mshift::index i = 0; i < 5; ++i) x[static_cast<std::size_t>(i)] = u0(i, 0);
  const auto h = householder_vector(std::span<const double>(x));
  const RealMatrix u = form_householder(h.reflector);
  RealMatrix d(5, 5);
  for (mshift::index i = 0; i < 5; ++i) d(i, i) = -1.0 - 0.5 * static_cast<double>(i);
  SystemBundle s;
  s.A = multiply(multiply(u, d), u, Op::none, Op::trans);
  s.B = random_real(rng, 5, 2);
  s.C = random_real(rng, 2, 5);
  const ControllerHessForm f = mshift::testing::reduce(s, 2);
  const std::vector<cplx> grid{cplx(0.0, 0.5), cplx(-0.2, 2.0), cplx(1.0, 0.0)};
  const auto v = structured_pseudospectrum_grid(f, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const ComplexMatrix g = reference::transfer_function(s.A, s.B, s.C, grid[k]);
    Eigen::MatrixXcd ge(2, 2);
    for (mshift::index j = 0; j < 2; ++j)
      for (mshift::index i = 0; i < 2; ++i) ge(i, j) = g(i, j);
    const double svd = Eigen::JacobiSVD<Eigen::MatrixXcd>(ge).singularValues()(0);
    EXPECT_NEAR(v[k] / svd, 1.0, 1e-12);
  }
}

TEST(Pseudospectrum, EigenvalueGivesInfinity) {
  const ControllerHessForm f = scalar_form(-2.0, 1.0, 1.0);
  const std::vector<cplx> grid{cplx(-2.0, 0.0), cplx(1.0, 0.0)};
  const auto v = structured_pseudospectrum_grid(f, grid);
  EXPECT_TRUE(std::isinf(v[0]));
  EXPECT_FALSE(std::isinf(v[1]));
}

TEST(LargestSingularValue, KnownMatrix) {
  ComplexMatrix g(2, 3);
  g(0, 0) = 3.0;
  g(1, 1) = cplx(0.0, 4.0);
  EXPECT_NEAR(largest_singular_value(g.view()), 4.0, 1e-14);
}
