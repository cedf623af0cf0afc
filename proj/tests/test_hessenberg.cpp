// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace mshift;
using mshift::testing::bitwise_equal;
using mshift::testing::random_real;

namespace {

bool is_m_hessenberg(const RealMatrix& a, mshift::index m) {
  for (mshift::index j = 0; j < a.cols(); ++j)
    for (mshift::index i = j + m + 1; i < a.rows(); ++i)
      if (a(i, j) != 0.0) return false;
  return true;
}

double similarity_residual(const RealMatrix& a, const RealMatrix& q, const RealMatrix& ahat) {
  const RealMatrix qaq = multiply(multiply(q, a, Op::trans), q);
  return frobenius_norm(subtract(qaq, ahat));
}

}  // namespace

TEST(MHessenberg, FullBandLeavesMatrixUnchanged) {
  NormalStream rng(21);
  const RealMatrix a = random_real(rng, 6, 6);
  const MHessResult r = mhessenberg_reduce(a, 5);
  EXPECT_TRUE(r.Ahat == a);
  EXPECT_TRUE(r.panels.empty());
}

TEST(MHessenberg, AgreesWithUnblockedReference) {
  NormalStream rng(22);
  const RealMatrix a = random_real(rng, 8, 8);
  ReductionOptions o;
  o.block_size = 3;
  const MHessResult r = mhessenberg_reduce(a, 2, o);
  const auto ref = reference::reference_mhessenberg(a, 2);
  ASSERT_TRUE(is_m_hessenberg(r.Ahat, 2));
  ASSERT_TRUE(is_m_hessenberg(ref.H, 2));
  // Both use the same sign convention, so the entries agree up to rounding.
  EXPECT_LE(max_abs_diff(r.Ahat, ref.H), 64 * 8 * eps * frobenius_norm(a));
  EXPECT_LE(similarity_residual(a, ref.Q, ref.H), 64 * 8 * eps * frobenius_norm(a));
}

TEST(MHessenberg, BlockSizeDoesNotChangeResultBeyondRounding) {
  NormalStream rng(23);
  const mshift::index n = 20;
  const RealMatrix a = random_real(rng, n, n);
  ReductionOptions one, full;
  one.block_size = 1;
  full.block_size = n;
  const RealMatrix a1 = mhessenberg_reduce(a, 3, one).Ahat;
  const RealMatrix an = mhessenberg_reduce(a, 3, full).Ahat;
  EXPECT_LE(max_abs_diff(a1, an), 128 * n * eps * frobenius_norm(a));
}

TEST(ProcessPanel, OneMiniBlockGivesOneRightUpdate) {
  NormalStream rng(24);
  RealMatrix a = random_real(rng, 10, 10);
  const RealMatrix src = a;
  const PanelResult p = process_panel(a.view(), src.view(), 0, 2, 2);
  EXPECT_EQ(p.trace.right_updates, (std::vector<mshift::index>{2}));
}

TEST(ProcessPanel, UpdateEventsForWidthFourAndBandTwo) {
  NormalStream rng(25);
  RealMatrix a = random_real(rng, 12, 12);
  const RealMatrix src = a;
  const PanelResult p = process_panel(a.view(), src.view(), 0, 4, 2);
  EXPECT_EQ(p.trace.right_updates, (std::vector<mshift::index>{2, 4}));
  EXPECT_EQ(p.trace.left_updates, (std::vector<mshift::index>{2, 3, 4}));
  const RealMatrix q = form_q(p.reflector);
  const RealMatrix qtq = multiply(q, q, Op::trans);
  EXPECT_LE(frobenius_norm(subtract(qtq, RealMatrix::identity(12))), 64 * 4 * eps);
}

TEST(MHessenberg, OverlappedMatchesSequentialBitwise) {
  NormalStream rng(26);
  const RealMatrix a = random_real(rng, 64, 64);
  WorkerPool p1(2), p2(3);
  ReductionOptions seq, ovl;
  seq.block_size = ovl.block_size = 8;
  ovl.strategy = Strategy::overlapped;
  ovl.panel_pool = &p1;
  ovl.update_pool = &p2;
  std::vector<Handoff> log;
  ovl.handoffs = &log;
  const RealMatrix s = mhessenberg_reduce(a, 4, seq).Ahat;
  const RealMatrix o = mhessenberg_reduce(a, 4, ovl).Ahat;
  EXPECT_TRUE(bitwise_equal(s, o));
  EXPECT_FALSE(log.empty());
}

TEST(MHessenberg, SingleWorkerPoolsMatchSequential) {
  NormalStream rng(27);
  const RealMatrix a = random_real(rng, 30, 30);
  WorkerPool p1(1), p2(1);
  ReductionOptions seq, pooled;
  seq.block_size = pooled.block_size = 5;
  pooled.panel_pool = &p1;
  pooled.update_pool = &p2;
  EXPECT_TRUE(bitwise_equal(mhessenberg_reduce(a, 2, seq).Ahat, mhessenberg_reduce(a, 2, pooled).Ahat));
}

TEST(MHessenberg, HandoffsCoverPanelAndThinStrip) {
  NormalStream rng(28);
  const mshift::index n = 24, m = 2, b = 4;
  const RealMatrix a = random_real(rng, n, n);
  ReductionOptions o;
  o.block_size = b;
  o.strategy = Strategy::overlapped;
  std::vector<Handoff> log;
  o.handoffs = &log;
  (void)mhessenberg_reduce(a, m, o);
  // After panel i (columns z .. z+b-1), only the b rows below the band of the
  // panel, right of it, go back to the panel side before panel i+1.
  bool found = false;
  for (const Handoff& h : log) {
    if (h.direction != Handoff::Direction::to_panel || h.panel != 0 || h.rows != b || h.col0 != b) continue;
    EXPECT_EQ(h.row0, m);
    EXPECT_EQ(h.cols, n - b);
    found = true;
  }
  EXPECT_TRUE(found);
}

TEST(ControllerHessenberg, PatternAndSimilarity) {
  const SystemBundle s = random_stable_system(30, 3, 2, 5);
  ReductionOptions o;
  o.block_size = 4;
  o.accumulate_q = true;
  const ControllerHessForm f = reduce_controller_hessenberg(s.A, s.B, s.C, o);
  ASSERT_TRUE(has_controller_hessenberg_pattern(f));
  const RealMatrix& q = *f.Q;
  const double an = frobenius_norm(s.A);
  EXPECT_LE(frobenius_norm(subtract(multiply(q, q, Op::trans), RealMatrix::identity(30))), 64 * 30 * eps);
  EXPECT_LE(similarity_residual(s.A, q, f.Ahat), 64 * 30 * eps * an);
  EXPECT_LE(max_abs_diff(multiply(q, s.B, Op::trans), f.Bhat), 1e-12);
  EXPECT_LE(max_abs_diff(multiply(s.C, q), f.Chat), 1e-12);
}

TEST(ControllerHessenberg, SmallSystemKeepsTransferFunction) {
  NormalStream rng(29);
  SystemBundle s;
  s.A = random_real(rng, 3, 3);
  s.B = RealMatrix(3, 1);
  s.B(0, 0) = 1.0;
  s.C = random_real(rng, 2, 3);
  const ControllerHessForm f = mshift::testing::reduce(s, 2);
  ASSERT_TRUE(has_controller_hessenberg_pattern(f));
  const cplx sigma(2.0, 1.0);
  const ComplexMatrix g = reference::transfer_function(s.A, s.B, s.C, sigma);
  const ComplexMatrix gh = reference::transfer_function(f.Ahat, f.Bhat, f.Chat, sigma);
  EXPECT_LE(reference::relative_error(gh, g), 1e-12);
}

TEST(ControllerHessenberg, FixedPointUpToSigns) {
  NormalStream rng(30);
  SystemBundle s;
  s.A = random_real(rng, 8, 8);
  for (mshift::index j = 0; j < 8; ++j)
    for (mshift::index i = j + 2; i < 8; ++i) s.A(i, j) = 0.0;
  s.B = random_real(rng, 8, 1);
  for (mshift::index i = 1; i < 8; ++i) s.B(i, 0) = 0.0;
  s.C = random_real(rng, 1, 8);
  const ControllerHessForm f = mshift::testing::reduce(s, 3);
  for (mshift::index j = 0; j < 8; ++j)
    for (mshift::index i = 0; i < 8; ++i) EXPECT_NEAR(std::abs(f.Ahat(i, j)), std::abs(s.A(i, j)), 1e-14);
  const cplx sigma(0.0, 1.5);
  EXPECT_LE(reference::relative_error(reference::transfer_function(f.Ahat, f.Bhat, f.Chat, sigma),
                                      reference::transfer_function(s.A, s.B, s.C, sigma)),
            1e-13);
}

TEST(ControllerHessenberg, FullRankBGivesNonzeroDiagonal) {
  const SystemBundle s = random_stable_system(12, 4, 1, 31);
  const ControllerHessForm f = mshift::testing::reduce(s);
  for (mshift::index i = 0; i < 4; ++i) EXPECT_GT(std::abs(f.Bhat(i, i)), 1e-8);
}

TEST(ControllerHessenberg, RejectsWideInput) {
  const SystemBundle s = random_stable_system(4, 4, 1, 32);
  EXPECT_THROW(mshift::testing::reduce(s), DimensionError);
}
