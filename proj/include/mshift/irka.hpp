// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <mshift/core.hpp>
#include <mshift/dense.hpp>
#include <mshift/hessenberg.hpp>
#include <mshift/shifted_solve.hpp>
#include <mshift/small_eig.hpp>

namespace mshift {

/// Shifts with right (m) and left (p) tangent directions, one column per shift.
struct InterpolationData {
  std::vector<cplx> shifts;
  ComplexMatrix b;  // m x r
  ComplexMatrix c;  // p x r
};

struct ReducedModel {
  ComplexMatrix Ar;  // r x r
  ComplexMatrix Br;  // r x m
  ComplexMatrix Cr;  // p x r
};

struct ShiftPerturbation {
  index iteration;
  index shift;
  cplx from;
  cplx to;
};

struct IrkaState {
  index r = 0;
  index iteration = 0;
  InterpolationData current;  // shifts for the next iteration
  InterpolationData used;     // shifts the final bases were built from
  ComplexMatrix V;            // n x r, orthonormal columns
  ComplexMatrix W;            // n x r, orthonormal columns
  std::vector<std::vector<cplx>> history;  // shifts produced by iteration k (k = 1..)
  std::vector<double> shift_change;        // relative Hausdorff distance per iteration
  std::vector<ShiftPerturbation> perturbations;
  bool converged = false;
};

struct IrkaOptions {
  index maxiter = 30;
  double tol = 1e-6;
  bool fixed_iterations = false;  // run exactly maxiter iterations
  SolverConfig solver;
};

struct IrkaResult {
  ReducedModel model;
  IrkaState state;
};

/// max over both sets of the distance to the nearest point of the other, over max |x|.
inline double relative_hausdorff(std::span<const cplx> a, std::span<const cplx> b) {
  double d = 0.0;
  double scale = 0.0;
  auto one_way = [&](std::span<const cplx> x, std::span<const cplx> y) {
    for (cplx u : x) {
      double best = std::numeric_limits<double>::infinity();
      for (cplx v : y) best = std::min(best, std::abs(u - v));
      d = std::max(d, best);
      scale = std::max(scale, std::abs(u));
    }
  };
  one_way(a, b);
  one_way(b, a);
  return scale == 0.0 ? d : d / scale;
}

/**
 * @brief Orthonormalizes the columns of x in place by classical Gram-Schmidt
 * with one reorthogonalization pass. Throws EigenError if a column is lost.
 */
inline void orthonormalize_cgs2(ComplexMatrix& x) {
  const index n = x.rows();
  const index k = x.cols();
  std::vector<cplx> h(static_cast<std::size_t>(k));
  for (index j = 0; j < k; ++j) {
    const double before = frobenius_norm(x.block(0, j, n, 1));
    for (int pass = 0; pass < 2; ++pass) {
      for (index i = 0; i < j; ++i) {
        cplx acc{};
        for (index r = 0; r < n; ++r) acc += std::conj(x(r, i)) * x(r, j);
        h[static_cast<std::size_t>(i)] = acc;
      }
      for (index i = 0; i < j; ++i)
        for (index r = 0; r < n; ++r) x(r, j) -= x(r, i) * h[static_cast<std::size_t>(i)];
    }
    const double nrm = frobenius_norm(x.block(0, j, n, 1));
    if (!(nrm > 1e3 * eps * before) || nrm == 0.0) throw EigenError("orthonormalize: basis lost rank");
    for (index r = 0; r < n; ++r) x(r, j) /= nrm;
  }
}

namespace detail {

// Unit norm, largest-magnitude entry real positive.
inline void normalize_direction(MatrixView<cplx> v) {
  const double nrm = frobenius_norm(v);
  if (nrm == 0.0) return;
  index big = 0;
  for (index i = 1; i < v.rows; ++i)
    if (std::abs(v(i, 0)) > std::abs(v(big, 0))) big = i;
  const cplx phase = std::conj(v(big, 0)) / std::abs(v(big, 0)) / nrm;
  for (index i = 0; i < v.rows; ++i) v(i, 0) *= phase;
  v(big, 0) = std::abs(v(big, 0));
}

/**
 * Sorts shifts by (re, im) and makes the set closed under conjugation:
 * nearly real shifts become real with real directions; the rest are paired
 * with their nearest conjugate partner, the upper-half-plane member first.
 */
inline InterpolationData conjugate_closed(InterpolationData in) {
  const auto r = static_cast<index>(in.shifts.size());
  for (index j = 0; j < r; ++j) {
    normalize_direction(in.b.block(0, j, in.b.rows(), 1));
    normalize_direction(in.c.block(0, j, in.c.rows(), 1));
  }
  double scale = 0.0;
  for (cplx s : in.shifts) scale = std::max(scale, std::abs(s));
  const double real_tol = 1e-10 * std::max(scale, 1.0);

  std::vector<index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](index a, index b) {
    const cplx x = in.shifts[static_cast<std::size_t>(a)];
    const cplx y = in.shifts[static_cast<std::size_t>(b)];
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() > y.imag();
  });

  InterpolationData out;
  out.b = ComplexMatrix(in.b.rows(), r);
  out.c = ComplexMatrix(in.c.rows(), r);
  std::vector<char> used(static_cast<std::size_t>(r), 0);
  index next = 0;
  auto emit = [&](index src, bool conjugate, bool make_real) {
    cplx s = in.shifts[static_cast<std::size_t>(src)];
    if (make_real) s = s.real();
    if (conjugate) s = std::conj(s);
    out.shifts.push_back(s);
    for (index i = 0; i < in.b.rows(); ++i) {
      cplx v = in.b(i, src);
      out.b(i, next) = make_real ? cplx(v.real()) : (conjugate ? std::conj(v) : v);
    }
    for (index i = 0; i < in.c.rows(); ++i) {
      cplx v = in.c(i, src);
      out.c(i, next) = make_real ? cplx(v.real()) : (conjugate ? std::conj(v) : v);
    }
    ++next;
  };
  for (index oi = 0; oi < r; ++oi) {
    const index i = order[static_cast<std::size_t>(oi)];
    if (used[static_cast<std::size_t>(i)] != 0) continue;
    used[static_cast<std::size_t>(i)] = 1;
    const cplx s = in.shifts[static_cast<std::size_t>(i)];
    if (std::abs(s.imag()) <= real_tol) {
      emit(i, false, true);
      continue;
    }
    index partner = -1;
    double best = std::numeric_limits<double>::infinity();
    for (index j = 0; j < r; ++j) {
      if (used[static_cast<std::size_t>(j)] != 0) continue;
      const double d = std::abs(in.shifts[static_cast<std::size_t>(j)] - std::conj(s));
      if (d < best) {
        best = d;
        partner = j;
      }
    }
    if (partner < 0 || best > 1e-6 * std::max(scale, 1.0)) {
      emit(i, false, false);
      continue;
    }
    used[static_cast<std::size_t>(partner)] = 1;
    const index upper = s.imag() > 0.0 ? i : partner;
    emit(upper, false, false);
    emit(upper, true, false);
  }
  for (index j = 0; j < r; ++j) {
    normalize_direction(out.b.block(0, j, out.b.rows(), 1));
    normalize_direction(out.c.block(0, j, out.c.rows(), 1));
  }
  return out;
}

}  // namespace detail

/// Log-spaced real shifts in [1e-4 ||Ahat||_F, ||Ahat||_F], identity-column directions.
inline InterpolationData default_interpolation_data(const ControllerHessForm& f, index r) {
  InterpolationData d;
  const double nrm = frobenius_norm(f.Ahat);
  const double lo = std::log10(std::max(nrm, 1e-300) * 1e-4);
  const double hi = std::log10(std::max(nrm, 1e-300));
  d.b = ComplexMatrix(f.m, r);
  d.c = ComplexMatrix(f.p(), r);
  for (index i = 0; i < r; ++i) {
    const double t = r == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(r - 1);
    d.shifts.push_back(std::pow(10.0, lo + t * (hi - lo)));
    d.b(i % f.m, i) = 1.0;
    d.c(i % f.p(), i) = 1.0;
  }
  return d;
}

/// G_r(z) = Cr (z I - Ar)^{-1} Br, by LU on the r x r system.
inline ComplexMatrix eval_reduced_model(const ReducedModel& model, cplx z) {
  Eigen::MatrixXcd a = -detail::to_eigen(model.Ar.view());
  a.diagonal().array() += z;
  const Eigen::MatrixXcd x = a.partialPivLu().solve(detail::to_eigen(model.Br.view()));
  return detail::from_eigen(detail::to_eigen(model.Cr.view()) * x);
}

/**
 * @brief IRKA in controller-Hessenberg coordinates.
 *
 * Each iteration solves r reduced shifted systems for V, r transposed ones
 * for W, orthonormalizes both, and takes the mirrored eigenvalues of the
 * projected pencil (W^T Ahat V, W^T V) as the next shifts. Directions come
 * from the pole-residue form of the projected model.
 */
inline IrkaResult irka_iterate(const ControllerHessForm& f, index r, const IrkaOptions& opt = {},
                               std::optional<InterpolationData> start = std::nullopt) {
  const index n = f.n();
  const index m = f.m;
  const index p = f.p();
  require_dims(r >= 1 && r < n, "irka_iterate: need 1 <= r < n");
  require_dims(opt.maxiter >= 1, "irka_iterate: maxiter must be positive");
  InterpolationData cur = start ? *start : default_interpolation_data(f, r);
  require_dims(static_cast<index>(cur.shifts.size()) == r && cur.b.rows() == m && cur.b.cols() == r &&
                   cur.c.rows() == p && cur.c.cols() == r,
               "irka_iterate: initial data must hold r shifts with m- and p-directions");

  IrkaResult res;
  IrkaState& st = res.state;
  st.r = r;
  const double anorm = frobenius_norm(f.Ahat);
  const ComplexMatrix bh = to_complex(f.Bhat);
  const ComplexMatrix ch = to_complex(f.Chat);

  for (index it = 1; it <= opt.maxiter; ++it) {
    // Right-hand sides for W: Chat^T c_i.
    auto solve_both = [&](InterpolationData& d) {
      for (int attempt = 0;; ++attempt) {
        ComplexMatrix crhs(n, r);
        gemm(Op::trans, Op::none, cplx(1.0), ch.view(), d.c.view(), cplx(0.0), crhs.view());
        ShiftedSolution v = solve_shifted_reduced(f, d.shifts, d.b.view(), opt.solver);
        ShiftedSolution w = solve_shifted_transposed(f, d.shifts, crhs.view(), opt.solver);
        bool clean = true;
        for (index i = 0; i < r; ++i) {
          if (v.status[static_cast<std::size_t>(i)].ok() && w.status[static_cast<std::size_t>(i)].ok()) continue;
          clean = false;
          const cplx from = d.shifts[static_cast<std::size_t>(i)];
          d.shifts[static_cast<std::size_t>(i)] += 1e-8 * std::max(anorm, 1.0);
          st.perturbations.push_back({it, i, from, d.shifts[static_cast<std::size_t>(i)]});
        }
        if (clean) return std::pair{std::move(v.X), std::move(w.X)};
        if (attempt >= 3) throw EigenError("irka_iterate: shifts keep hitting the spectrum");
      }
    };
    auto [vx, wx] = solve_both(cur);
    orthonormalize_cgs2(vx);
    orthonormalize_cgs2(wx);

    ComplexMatrix av(n, r);
    gemm(Op::none, Op::none, cplx(1.0), to_complex(f.Ahat).view(), vx.view(), cplx(0.0), av.view());
    const ComplexMatrix e = multiply(wx, av, Op::trans);
    const ComplexMatrix fm = multiply(wx, vx, Op::trans);
    const PencilEigen eig = small_eig_pencil(e.view(), fm.view());

    // Projected model and its pole-residue directions.
    const Eigen::PartialPivLU<Eigen::MatrixXcd> flu(detail::to_eigen(fm.view()));
    ReducedModel model;
    model.Ar = detail::from_eigen(flu.solve(detail::to_eigen(e.view())));
    model.Br = detail::from_eigen(flu.solve(detail::to_eigen(multiply(wx, bh, Op::trans).view())));
    model.Cr = multiply(ch, vx);
    const Eigen::MatrixXcd x = detail::to_eigen(eig.right.view());
    const Eigen::MatrixXcd xinv_b = x.partialPivLu().solve(detail::to_eigen(model.Br.view()));
    const Eigen::MatrixXcd c_x = detail::to_eigen(model.Cr.view()) * x;

    InterpolationData next;
    next.b = ComplexMatrix(m, r);
    next.c = ComplexMatrix(p, r);
    for (index i = 0; i < r; ++i) {
      next.shifts.push_back(-eig.values[static_cast<std::size_t>(i)]);
      for (index k = 0; k < m; ++k) next.b(k, i) = xinv_b(i, k);
      for (index k = 0; k < p; ++k) next.c(k, i) = c_x(k, i);
    }
    next = detail::conjugate_closed(next);

    const double change = relative_hausdorff(cur.shifts, next.shifts);
    st.used = std::move(cur);
    st.V = std::move(vx);
    st.W = std::move(wx);
    res.model = std::move(model);
    st.history.push_back(next.shifts);
    st.shift_change.push_back(change);
    st.iteration = it;
    cur = std::move(next);
    if (!opt.fixed_iterations && change < opt.tol) {
      st.converged = true;
      break;
    }
  }
  st.current = std::move(cur);
  return res;
}

}  // namespace mshift
