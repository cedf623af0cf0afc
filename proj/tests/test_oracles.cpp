// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace mshift;
using mshift::testing::random_complex;
using mshift::testing::random_real;

TEST(LuOracle, IdentityAndDiagonal) {
  NormalStream rng(71);
  const ComplexMatrix rhs = random_complex(rng, 3, 2);
  EXPECT_TRUE(reference::lu_solve_shifted(RealMatrix::identity(3), 0.0, rhs) == rhs);
  RealMatrix d(3, 3);
  d(0, 0) = 1.0;
  d(1, 1) = 2.0;
  d(2, 2) = 3.0;
  ComplexMatrix e2(3, 1);
  e2(1, 0) = 1.0;
  const ComplexMatrix x = reference::lu_solve_shifted(d, 0.0, e2);
  EXPECT_EQ(x(0, 0), cplx{});
  EXPECT_EQ(x(1, 0), cplx(0.5));
  EXPECT_EQ(x(2, 0), cplx{});
}

TEST(LuOracle, ResidualBound) {
  NormalStream rng(72);
  const RealMatrix a = random_real(rng, 6, 6);
  const ComplexMatrix rhs = random_complex(rng, 6, 1);
  const cplx sigma(0.3, -0.7);
  const ComplexMatrix x = reference::lu_solve_shifted(a, sigma, rhs);
  ComplexMatrix shifted = to_complex(a);
  for (mshift::index i = 0; i < 6; ++i) shifted(i, i) -= sigma;
  const ComplexMatrix r = subtract(multiply(shifted, x), rhs);
  const double kappa = reference::condition_number(a, sigma);
  EXPECT_LE(frobenius_norm(r), 64 * 6 * eps * kappa * frobenius_norm(rhs));
}

TEST(LuOracle, SingularThrows) {
  EXPECT_THROW(reference::lu_solve_shifted(RealMatrix(2, 2), 0.0, ComplexMatrix(2, 1, cplx(1.0))), SingularError);
}

TEST(HessenbergOracle, FullBandIsIdentity) {
  NormalStream rng(73);
  const RealMatrix a = random_real(rng, 5, 5);
  const auto r = reference::reference_mhessenberg(a, 4);
  EXPECT_TRUE(r.H == a);
  EXPECT_TRUE(r.Q == RealMatrix::identity(5));
}

TEST(HessenbergOracle, HessenbergInputKeepsMagnitudes) {
  NormalStream rng(74);
  RealMatrix a = random_real(rng, 6, 6);
  for (mshift::index j = 0; j < 6; ++j)
    for (mshift::index i = j + 2; i < 6; ++i) a(i, j) = 0.0;
  const auto r = reference::reference_mhessenberg(a, 1);
  for (mshift::index j = 0; j < 6; ++j)
    for (mshift::index i = 0; i < 6; ++i) EXPECT_NEAR(std::abs(r.H(i, j)), std::abs(a(i, j)), 1e-14);
}

TEST(HessenbergOracle, PatternAndSimilarity) {
  NormalStream rng(75);
  const RealMatrix a = random_real(rng, 8, 8);
  const auto r = reference::reference_mhessenberg(a, 2);
  for (mshift::index j = 0; j < 8; ++j)
    for (mshift::index i = j + 3; i < 8; ++i) EXPECT_EQ(r.H(i, j), 0.0);
  const RealMatrix qaq = multiply(multiply(r.Q, a, Op::trans), r.Q);
  EXPECT_LE(frobenius_norm(subtract(qaq, r.H)), 64 * 8 * eps * frobenius_norm(a));
}

TEST(RqOracle, TriangularInputNeedsNoRotation) {
  ComplexMatrix z(2, 4);
  z(0, 2) = 1.0;
  z(0, 3) = 2.0;
  z(1, 3) = 3.0;
  const auto r = reference::reference_rq(z);
  EXPECT_TRUE(r.P == ComplexMatrix::identity(4));
  EXPECT_TRUE(r.R == z);
}

TEST(RqOracle, SingleRotation) {
  ComplexMatrix z(1, 2);
  z(0, 0) = 3.0;
  z(0, 1) = 4.0;
  const auto r = reference::reference_rq(z);
  EXPECT_EQ(r.R(0, 0), cplx{});
  EXPECT_NEAR(std::abs(r.R(0, 1)), 5.0, 1e-15);
}

TEST(RqOracle, Reconstruction) {
  NormalStream rng(76);
  const ComplexMatrix z = random_complex(rng, 4, 7);
  const auto r = reference::reference_rq(z);
  EXPECT_LE(frobenius_norm(subtract(multiply(r.R, r.P), z)), 1e-13 * frobenius_norm(z));
  EXPECT_LE(frobenius_norm(subtract(multiply(r.P, r.P, Op::adjoint), ComplexMatrix::identity(7))), 1e-13);
}

TEST(OracleReport, TracksWorstCase) {
  reference::OracleReport rep;
  rep.record(1e-14, "a");
  rep.record(3e-12, "b");
  rep.record(2e-13, "c");
  EXPECT_EQ(rep.worst_case_id, "b");
  EXPECT_EQ(rep.max_relative_error, 3e-12);
  EXPECT_EQ(rep.residuals.size(), 3u);
}
