// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "test_util.hpp"

using namespace mshift;
using mshift::testing::random_complex;

namespace {

double pencil_residual(const ComplexMatrix& e, const ComplexMatrix& f, const PencilEigen& eig, std::size_t i) {
  const mshift::index r = e.rows();
  const ComplexMatrix v(eig.right.block(0, static_cast<mshift::index>(i), r, 1));
  const ComplexMatrix ev = multiply(e, v);
  const ComplexMatrix fv = multiply(f, v);
  double res = 0.0;
  for (mshift::index k = 0; k < r; ++k) res += std::norm(ev(k, 0) - eig.values[i] * fv(k, 0));
  return std::sqrt(res) / (frobenius_norm(e) + std::abs(eig.values[i]) * frobenius_norm(f));
}

double right_tangential_error(const SystemBundle& s, const IrkaResult& res) {
  const InterpolationData& u = res.state.used;
  double worst = 0.0;
  for (std::size_t i = 0; i < u.shifts.size(); ++i) {
    const ComplexMatrix b(u.b.block(0, static_cast<mshift::index>(i), s.m(), 1));
    const ComplexMatrix full = multiply(reference::transfer_function(s.A, s.B, s.C, u.shifts[i]), b);
    const ComplexMatrix red = multiply(eval_reduced_model(res.model, u.shifts[i]), b);
    worst = std::max(worst, reference::relative_error(red, full));
  }
  return worst;
}

bool conjugate_closed(std::vector<cplx> z) {
  std::vector<cplx> c = z;
  for (cplx& v : c) v = std::conj(v);
  return relative_hausdorff(z, c) <= 1e-13;
}

}  // namespace

TEST(SmallEig, DiagonalPencil) {
  ComplexMatrix e(3, 3);
  e(0, 0) = 1.0;
  e(1, 1) = cplx(-2.0, 1.0);
  e(2, 2) = 4.0;
  const PencilEigen eig = small_eig_pencil(e.view(), ComplexMatrix::identity(3).view());
  std::vector<cplx> vals = eig.values;
  const std::vector<cplx> expect{1.0, cplx(-2.0, 1.0), 4.0};
  EXPECT_LE(relative_hausdorff(vals, expect), 1e-15);
}

TEST(SmallEig, TwoByTwoQuadraticFormula) {
  ComplexMatrix e(2, 2);
  e(0, 0) = 1.0;
  e(0, 1) = 2.0;
  e(1, 0) = -3.0;
  e(1, 1) = 0.5;
  const PencilEigen eig = small_eig_pencil(e.view(), ComplexMatrix::identity(2).view());
  const cplx tr = 1.5, det = 0.5 + 6.0;
  const cplx disc = std::sqrt(tr * tr - 4.0 * det);
  const std::vector<cplx> expect{(tr + disc) / 2.0, (tr - disc) / 2.0};
  EXPECT_LE(relative_hausdorff(eig.values, expect), 1e-12);
}

TEST(SmallEig, RandomPencilResidualAndBiorthogonality) {
  NormalStream rng(61);
  const ComplexMatrix e = random_complex(rng, 8, 8);
  const ComplexMatrix f = random_complex(rng, 8, 8);
  const PencilEigen eig = small_eig_pencil(e.view(), f.view());
  for (std::size_t i = 0; i < 8; ++i) EXPECT_LE(pencil_residual(e, f, eig, i), 1e-10);
  const ComplexMatrix yfx = multiply(multiply(eig.left, f), eig.right);
  EXPECT_LE(frobenius_norm(subtract(yfx, ComplexMatrix::identity(8))), 1e-10);
}

TEST(SmallEig, SingularFThrows) {
  ComplexMatrix f(2, 2);
  f(0, 0) = 1.0;
  EXPECT_THROW(small_eig_pencil(ComplexMatrix::identity(2).view(), f.view()), EigenError);
}

TEST(Irka, FullOrderRejected) {
  const SystemBundle s = random_stable_system(6, 1, 1, 62);
  EXPECT_THROW(irka_iterate(mshift::testing::reduce(s), 6), DimensionError);
}

TEST(Irka, SisoTrajectoryMatchesOriginalCoordinates) {
  const SystemBundle s = random_stable_system(30, 1, 1, 63);
  const ControllerHessForm f = mshift::testing::reduce(s, 8);
  IrkaOptions opt;
  opt.maxiter = 10;
  opt.fixed_iterations = true;
  opt.solver.nb = 4;
  opt.solver.batch = 3;
  const InterpolationData d0 = default_interpolation_data(f, 4);
  const IrkaResult res = irka_iterate(f, 4, opt, d0);
  const auto ref = reference::reference_irka(s.A, s.B, s.C, d0.shifts, d0.b, d0.c, 10);
  ASSERT_EQ(res.state.history.size(), ref.history.size());
  for (std::size_t k = 0; k < ref.history.size(); ++k) {
    EXPECT_LE(relative_hausdorff(res.state.history[k], ref.history[k]), 1e-8) << "iteration " << k + 1;
    EXPECT_TRUE(conjugate_closed(res.state.history[k]));
  }
}

TEST(Irka, MimoTangentialInterpolation) {
  const SystemBundle s = random_stable_system(30, 2, 2, 64);
  const ControllerHessForm f = mshift::testing::reduce(s, 8);
  IrkaOptions opt;
  opt.maxiter = 100;
  opt.solver.nb = 8;
  const IrkaResult res = irka_iterate(f, 4, opt);
  EXPECT_LE(right_tangential_error(s, res), 1e-6);
  // left directions: c_i^T G_r(sigma_i) = c_i^T G(sigma_i)
  const InterpolationData& u = res.state.used;
  for (std::size_t i = 0; i < u.shifts.size(); ++i) {
    const ComplexMatrix c(u.c.block(0, static_cast<mshift::index>(i), s.p(), 1));
    const ComplexMatrix full = multiply(c, reference::transfer_function(s.A, s.B, s.C, u.shifts[i]), Op::trans);
    const ComplexMatrix red = multiply(c, eval_reduced_model(res.model, u.shifts[i]), Op::trans);
    EXPECT_LE(reference::relative_error(red, full), 1e-6);
  }
}

TEST(Irka, BasesStayOrthonormal) {
  const SystemBundle s = random_stable_system(24, 2, 1, 65);
  IrkaOptions opt;
  opt.maxiter = 3;
  opt.fixed_iterations = true;
  const IrkaResult res = irka_iterate(mshift::testing::reduce(s, 4), 5, opt);
  EXPECT_EQ(res.state.iteration, 3);
  for (const ComplexMatrix* b : {&res.state.V, &res.state.W}) {
    const ComplexMatrix g = multiply(*b, *b, Op::adjoint);
    EXPECT_LE(frobenius_norm(subtract(g, ComplexMatrix::identity(5))), 1e-12);
  }
}

TEST(Irka, ConvergesOnSmallSystem) {
  const SystemBundle s = random_stable_system(20, 1, 1, 66);
  IrkaOptions opt;
  opt.maxiter = 200;
  const IrkaResult res = irka_iterate(mshift::testing::reduce(s, 4), 2, opt);
  EXPECT_TRUE(res.state.converged);
  EXPECT_LT(res.state.shift_change.back(), opt.tol);
  EXPECT_EQ(res.state.history.size(), static_cast<std::size_t>(res.state.iteration));
}

TEST(Irka, CollidingShiftIsPerturbed) {
  // Diagonal system: the starting shift 2 makes Ahat - 2 I singular.
  ControllerHessForm f;
  f.Ahat = RealMatrix(4, 4);
  for (mshift::index i = 0; i < 4; ++i) f.Ahat(i, i) = 2.0 * static_cast<double>(i + 1) * (i == 0 ? 1.0 : -1.0);
  f.Ahat(1, 0) = 1.0;
  f.Ahat(2, 1) = 1.0;
  f.Ahat(3, 2) = 1.0;
  f.Bhat = RealMatrix(4, 1);
  f.Bhat(0, 0) = 1.0;
  f.Chat = RealMatrix(1, 4, 1.0);
  f.m = 1;
  InterpolationData d;
  d.shifts = {cplx(2.0), cplx(5.0)};
  d.b = ComplexMatrix(1, 2, cplx(1.0));
  d.c = ComplexMatrix(1, 2, cplx(1.0));
  IrkaOptions opt;
  opt.maxiter = 1;
  const IrkaResult res = irka_iterate(f, 2, opt, d);
  ASSERT_FALSE(res.state.perturbations.empty());
  EXPECT_EQ(res.state.perturbations[0].shift, 0);
  EXPECT_EQ(res.state.perturbations[0].from, cplx(2.0));
  EXPECT_NE(res.state.perturbations[0].to, cplx(2.0));
}

TEST(Hausdorff, Basics) {
  const std::vector<cplx> a{1.0, cplx(0.0, 2.0)};
  const std::vector<cplx> b{cplx(0.0, 2.0), 1.0};
  EXPECT_EQ(relative_hausdorff(a, b), 0.0);
  const std::vector<cplx> c{1.0, cplx(0.0, 2.2)};
  EXPECT_NEAR(relative_hausdorff(a, c), 0.2 / 2.2, 1e-15);
}
