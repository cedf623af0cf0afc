// SPDX-License-Identifier: Apache-2.0
#pragma once

// Slow, independent reference implementations for tests. Nothing here calls
// into the blocked or batched code paths; only the Matrix storage is shared.

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <mshift/core.hpp>
#include <mshift/dense.hpp>

namespace mshift::reference {

inline constexpr index max_order = 512;

struct OracleReport {
  double max_relative_error = 0.0;
  std::string worst_case_id;
  std::vector<double> residuals;

  void record(double err, const std::string& id) {
    residuals.push_back(err);
    if (worst_case_id.empty() || err > max_relative_error) {
      max_relative_error = err;
      worst_case_id = id;
    }
  }
};

/// Relative Frobenius distance ||x - y|| / ||y|| computed entrywise.
template <typename X, typename Y>
double relative_error(const X& x, const Y& y) {
  const auto a = cview(x);
  const auto b = cview(y);
  assert(a.rows == b.rows && a.cols == b.cols);
  double num = 0.0;
  double den = 0.0;
  for (index j = 0; j < a.cols; ++j)
    for (index i = 0; i < a.rows; ++i) {
      num += std::norm(a(i, j) - b(i, j));
      den += std::norm(b(i, j));
    }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

/**
 * @brief Solves (A - sigma I) X = B (or its transpose) by LU with partial
 * pivoting. Throws SingularError on an exactly zero pivot.
 */
inline ComplexMatrix lu_solve_shifted(const RealMatrix& a, cplx sigma, const ComplexMatrix& rhs,
                                      bool transposed = false) {
  const index n = a.rows();
  require_dims(a.cols() == n && rhs.rows() == n, "lu_solve_shifted: shape mismatch");
  require_dims(n <= max_order, "lu_solve_shifted: oracle capped at order 512");
  ComplexMatrix lu(n, n);
  for (index j = 0; j < n; ++j)
    for (index i = 0; i < n; ++i) lu(i, j) = transposed ? a(j, i) : a(i, j);
  for (index i = 0; i < n; ++i) lu(i, i) -= sigma;
  ComplexMatrix x(rhs);

  for (index k = 0; k < n; ++k) {
    index piv = k;
    for (index i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (lu(piv, k) == cplx{}) throw SingularError("lu_solve_shifted: singular matrix", k);
    if (piv != k) {
      for (index j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      for (index j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
    }
    for (index i = k + 1; i < n; ++i) {
      const cplx l = lu(i, k) / lu(k, k);
      lu(i, k) = l;
      for (index j = k + 1; j < n; ++j) lu(i, j) -= l * lu(k, j);
      for (index j = 0; j < x.cols(); ++j) x(i, j) -= l * x(k, j);
    }
  }
  for (index j = 0; j < x.cols(); ++j) {
    for (index i = n - 1; i >= 0; --i) {
      cplx acc = x(i, j);
      for (index l = i + 1; l < n; ++l) acc -= lu(i, l) * x(l, j);
      x(i, j) = acc / lu(i, i);
    }
  }
  return x;
}

/// C (sigma I - A)^{-1} B through lu_solve_shifted.
inline ComplexMatrix transfer_function(const RealMatrix& a, const RealMatrix& b, const RealMatrix& c, cplx sigma) {
  ComplexMatrix bc(b.rows(), b.cols());
  for (index j = 0; j < b.cols(); ++j)
    for (index i = 0; i < b.rows(); ++i) bc(i, j) = b(i, j);
  const ComplexMatrix x = lu_solve_shifted(a, sigma, bc);
  ComplexMatrix g(c.rows(), b.cols());
  for (index j = 0; j < g.cols(); ++j)
    for (index i = 0; i < g.rows(); ++i) {
      cplx acc{};
      for (index l = 0; l < a.rows(); ++l) acc += c(i, l) * x(l, j);
      g(i, j) = -acc;
    }
  return g;
}

/// 1-norm condition number of A - sigma I from an explicit inverse.
inline double condition_number(const RealMatrix& a, cplx sigma) {
  const index n = a.rows();
  ComplexMatrix id(n, n);
  for (index i = 0; i < n; ++i) id(i, i) = 1.0;
  const ComplexMatrix inv = lu_solve_shifted(a, sigma, id);
  auto norm1 = [n](auto&& at) {
    double best = 0.0;
    for (index j = 0; j < n; ++j) {
      double s = 0.0;
      for (index i = 0; i < n; ++i) s += std::abs(at(i, j));
      best = std::max(best, s);
    }
    return best;
  };
  const double na = norm1([&](index i, index j) { return cplx(a(i, j)) - (i == j ? sigma : cplx{}); });
  const double ni = norm1([&](index i, index j) { return inv(i, j); });
  return na * ni;
}

struct HessenbergReference {
  RealMatrix H;
  RealMatrix Q;
};

/// Column-by-column Householder reduction to m-Hessenberg form with explicit Q.
inline HessenbergReference reference_mhessenberg(const RealMatrix& a, index m) {
  const index n = a.rows();
  require_dims(a.cols() == n && n <= max_order, "reference_mhessenberg: square A up to order 512");
  HessenbergReference out{a, RealMatrix::identity(n)};
  RealMatrix& h = out.H;
  RealMatrix& q = out.Q;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (index j = 0; j + m + 1 < n; ++j) {
    const index r0 = j + m;
    const index len = n - r0;
    double norm2 = 0.0;
    for (index i = r0; i < n; ++i) norm2 += h(i, j) * h(i, j);
    const double tail2 = norm2 - h(r0, j) * h(r0, j);
    if (tail2 == 0.0) continue;
    const double alpha = h(r0, j);
    const double beta = alpha >= 0.0 ? -std::sqrt(norm2) : std::sqrt(norm2);
    // v = x - beta e1, reflector I - 2 v v^T / (v^T v)
    for (index i = 0; i < len; ++i) v[static_cast<std::size_t>(i)] = h(r0 + i, j);
    v[0] -= beta;
    double vv = 0.0;
    for (index i = 0; i < len; ++i) vv += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    const double scale = 2.0 / vv;
    for (index c = 0; c < n; ++c) {
      double d = 0.0;
      for (index i = 0; i < len; ++i) d += v[static_cast<std::size_t>(i)] * h(r0 + i, c);
      d *= scale;
      for (index i = 0; i < len; ++i) h(r0 + i, c) -= d * v[static_cast<std::size_t>(i)];
    }
    for (auto* mat : {&h, &q}) {
      for (index rr = 0; rr < n; ++rr) {
        double d = 0.0;
        for (index i = 0; i < len; ++i) d += (*mat)(rr, r0 + i) * v[static_cast<std::size_t>(i)];
        d *= scale;
        for (index i = 0; i < len; ++i) (*mat)(rr, r0 + i) -= d * v[static_cast<std::size_t>(i)];
      }
    }
    h(r0, j) = beta;
    for (index i = r0 + 1; i < n; ++i) h(i, j) = 0.0;
  }
  return out;
}

struct RqReference {
  ComplexMatrix R;  // nRows x nCols, zero left of the trailing triangle
  ComplexMatrix P;  // unitary nCols x nCols with Z = R P
};

/// RQ by sequential Givens rotations against the trailing diagonal, bottom row first.
inline RqReference reference_rq(const ComplexMatrix& z) {
  const index nr = z.rows();
  const index nc = z.cols();
  require_dims(nr <= nc, "reference_rq: need nRows <= nCols");
  const index d = nc - nr;
  RqReference out{z, ComplexMatrix(nc, nc)};
  ComplexMatrix& r = out.R;
  ComplexMatrix q(nc, nc);  // accumulated column operations, Z q = R
  for (index i = 0; i < nc; ++i) q(i, i) = 1.0;
  for (index row = nr - 1; row >= 0; --row) {
    const index piv = row + d;
    for (index col = 0; col < piv; ++col) {
      const cplx a = r(row, piv);
      const cplx b = r(row, col);
      if (b == cplx{}) continue;
      const double h = std::sqrt(std::norm(a) + std::norm(b));
      const cplx u11 = std::conj(a) / h;
      const cplx u12 = std::conj(b) / h;
      for (auto* mat : {&r, &q}) {
        for (index i = 0; i < mat->rows(); ++i) {
          const cplx xp = (*mat)(i, piv);
          const cplx xc = (*mat)(i, col);
          (*mat)(i, piv) = xp * u11 + xc * u12;
          (*mat)(i, col) = -xp * std::conj(u12) + xc * std::conj(u11);
        }
      }
      r(row, col) = 0.0;
    }
  }
  for (index j = 0; j < nc; ++j)
    for (index i = 0; i < nc; ++i) out.P(i, j) = std::conj(q(j, i));
  return out;
}

struct IrkaReference {
  std::vector<std::vector<cplx>> history;  // shifts after each iteration
  ComplexMatrix Ar;
  ComplexMatrix Br;
  ComplexMatrix Cr;
  std::vector<cplx> last_shifts;  // shifts the final bases were built from
  ComplexMatrix last_b;
  ComplexMatrix last_c;
};

/**
 * @brief IRKA in the original coordinates: dense LU per shift, modified
 * Gram-Schmidt, Eigen for the projected eigenproblem. No conjugate pairing.
 */
inline IrkaReference reference_irka(const RealMatrix& a, const RealMatrix& b, const RealMatrix& c,
                                    std::vector<cplx> shifts, ComplexMatrix bdir, ComplexMatrix cdir, index iters) {
  const index n = a.rows();
  const index m = b.cols();
  const index p = c.rows();
  const auto r = static_cast<index>(shifts.size());
  using EM = Eigen::MatrixXcd;
  EM ae(n, n), be(n, m), ce(p, n);
  for (index j = 0; j < n; ++j)
    for (index i = 0; i < n; ++i) ae(i, j) = a(i, j);
  for (index j = 0; j < m; ++j)
    for (index i = 0; i < n; ++i) be(i, j) = b(i, j);
  for (index j = 0; j < n; ++j)
    for (index i = 0; i < p; ++i) ce(i, j) = c(i, j);
  auto to_em = [](const ComplexMatrix& x) {
    EM e(x.rows(), x.cols());
    for (index j = 0; j < x.cols(); ++j)
      for (index i = 0; i < x.rows(); ++i) e(i, j) = x(i, j);
    return e;
  };
  auto to_cm = [](const EM& e) {
    ComplexMatrix x(e.rows(), e.cols());
    for (index j = 0; j < x.cols(); ++j)
      for (index i = 0; i < x.rows(); ++i) x(i, j) = e(i, j);
    return x;
  };
  auto mgs = [](EM& x) {
    for (index j = 0; j < x.cols(); ++j) {
      for (int pass = 0; pass < 2; ++pass)
        for (index i = 0; i < j; ++i) x.col(j) -= x.col(i) * x.col(i).dot(x.col(j));
      x.col(j).normalize();
    }
  };

  IrkaReference out;
  EM bd = to_em(bdir);
  EM cd = to_em(cdir);
  for (index it = 0; it < iters; ++it) {
    ComplexMatrix v(n, r), w(n, r);
    for (index i = 0; i < r; ++i) {
      const EM bv = be * bd.col(i);
      const EM cv = ce.transpose() * cd.col(i);
      const ComplexMatrix x = lu_solve_shifted(a, shifts[static_cast<std::size_t>(i)], to_cm(bv));
      const ComplexMatrix y = lu_solve_shifted(a, shifts[static_cast<std::size_t>(i)], to_cm(cv), true);
      for (index k = 0; k < n; ++k) {
        v(k, i) = x(k, 0);
        w(k, i) = y(k, 0);
      }
    }
    EM ve = to_em(v), we = to_em(w);
    mgs(ve);
    mgs(we);
    const EM e = we.transpose() * ae * ve;
    const EM f = we.transpose() * ve;
    const auto flu = f.partialPivLu();
    const EM ar = flu.solve(e);
    const EM br = flu.solve(we.transpose() * be);
    const EM cr = ce * ve;
    Eigen::ComplexEigenSolver<EM> es(ar, true);
    const EM x = es.eigenvectors();
    const EM xb = x.partialPivLu().solve(br);
    const EM cx = cr * x;

    out.last_shifts = shifts;
    out.last_b = to_cm(bd);
    out.last_c = to_cm(cd);
    out.Ar = to_cm(ar);
    out.Br = to_cm(br);
    out.Cr = to_cm(cr);
    for (index i = 0; i < r; ++i) {
      shifts[static_cast<std::size_t>(i)] = -es.eigenvalues()(i);
      bd.col(i) = xb.row(i).transpose().normalized();
      cd.col(i) = cx.col(i).normalized();
    }
    out.history.push_back(shifts);
  }
  return out;
}

}  // namespace mshift::reference
