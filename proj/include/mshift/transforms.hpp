// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <mshift/core.hpp>
#include <mshift/dense.hpp>

namespace mshift {

//
// ... Householder reflectors
//

/// H = I - tau * v * v^H with v(0) = 1 stored explicitly.
template <Scalar T>
struct Householder {
  std::vector<T> v;
  T tau{};
};

template <Scalar T>
struct HouseholderResult {
  Householder<T> reflector;
  T beta{};
};

/**
 * @brief Generates a reflector in place, LAPACK xLARFG style.
 *
 * On return x[0] holds beta and x[1:] holds the tail of v (v(0) = 1 is
 * implicit). H^H x = beta e1 with beta = -sign(re x0) * ||x||. A vector that
 * is already collapsed onto e1 gives tau = 0.
 */
template <Scalar T>
T make_householder_inplace(std::span<T> x, FlopCounter* flops = nullptr) {
  if (x.empty()) return T(0);
  const T alpha = x[0];
  double scale = 0.0;
  double ssq = 1.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    if (a == 0.0) continue;
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  const double xnorm = scale * std::sqrt(ssq);
  double alpha_imag = 0.0;
  if constexpr (is_complex_v<T>) alpha_imag = alpha.imag();
  if (xnorm == 0.0 && alpha_imag == 0.0) return T(0);

  const double norm = std::hypot(std::abs(alpha), xnorm);
  const double beta = real_part(alpha) >= 0.0 ? -norm : norm;
  const T tau = (T(beta) - alpha) / beta;
  const T scal = T(1) / (alpha - beta);
  for (std::size_t i = 1; i < x.size(); ++i) x[i] *= scal;
  x[0] = T(beta);
  add_flops(flops, (is_complex_v<T> ? 8 : 3) * static_cast<std::uint64_t>(x.size()));
  return tau;
}

template <Scalar T>
HouseholderResult<T> householder_vector(std::span<const T> x) {
  require_dims(!x.empty(), "householder_vector: empty input");
  std::vector<T> work(x.begin(), x.end());
  const T tau = make_householder_inplace(std::span<T>(work));
  HouseholderResult<T> out;
  out.beta = work[0];
  out.reflector.tau = tau;
  out.reflector.v = std::move(work);
  out.reflector.v[0] = T(1);
  if (tau == T(0)) std::fill(out.reflector.v.begin() + 1, out.reflector.v.end(), T(0));
  return out;
}

/// Dense I - tau v v^H.
template <Scalar T>
Matrix<T> form_householder(const Householder<T>& h) {
  const auto n = static_cast<index>(h.v.size());
  Matrix<T> q = Matrix<T>::identity(n);
  for (index j = 0; j < n; ++j)
    for (index i = 0; i < n; ++i) q(i, j) -= h.tau * h.v[i] * conj_if(h.v[j]);
  return q;
}

//
// ... Givens rotations
//

/**
 * @brief Plane rotation [c s; -conj(s) c] with real c >= 0.
 *
 * Maps (a, b) to (r, 0).
 */
struct GivensRotation {
  double c = 1.0;
  cplx s{};

  [[nodiscard]] bool is_identity() const noexcept { return c == 1.0 && s == cplx{}; }
};

struct GivensResult {
  GivensRotation rot;
  cplx r;
};

inline GivensResult givens(cplx a, cplx b) noexcept {
  if (b == cplx{}) return {{1.0, cplx{}}, a};
  const double abs_b = std::abs(b);
  if (a == cplx{}) return {{0.0, std::conj(b) / abs_b}, cplx{abs_b, 0.0}};
  const double abs_a = std::abs(a);
  const double norm = std::hypot(abs_a, abs_b);
  const cplx phase = a / abs_a;
  return {{abs_a / norm, phase * std::conj(b) / norm}, phase * norm};
}

/// Applies the rotation to the pair (x, y) elementwise: x <- c x + s y, y <- c y - conj(s) x.
inline void apply_givens(const GivensRotation& g, std::span<cplx> x, std::span<cplx> y) noexcept {
  const cplx sc = std::conj(g.s);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const cplx xi = x[i];
    const cplx yi = y[i];
    x[i] = g.c * xi + g.s * yi;
    y[i] = g.c * yi - sc * xi;
  }
}

//
// ... Block reflectors (compact WY)
//

enum class Side { left, right };

/**
 * @brief Q = I - V T V^T accumulated one reflector at a time.
 *
 * V is rows x capacity with explicit unit entries and zeros above them; T is
 * upper triangular with exact zeros below the diagonal. Y, when filled in by
 * the caller, holds A V T for the matrix the panel was taken from.
 */
struct BlockReflector {
  RealMatrix V;
  RealMatrix T;
  RealMatrix Y;
  index count = 0;

  BlockReflector() = default;
  BlockReflector(index rows, index capacity) : V(rows, capacity), T(capacity, capacity) {}

  [[nodiscard]] index rows() const noexcept { return V.rows(); }
  [[nodiscard]] ConstView<double> v() const noexcept { return V.block(0, 0, V.rows(), count); }
  [[nodiscard]] ConstView<double> t() const noexcept { return T.block(0, 0, count, count); }

  /**
   * Appends a reflector whose unit entry sits in row `pivot`; `tail` holds
   * rows pivot+1 .. rows-1. The new T column is -tau T V^T v, diagonal tau.
   */
  void append(index pivot, std::span<const double> tail, double tau, FlopCounter* flops = nullptr) {
    require_dims(count < V.cols(), "BlockReflector::append: capacity exceeded");
    require_dims(pivot >= 0 && pivot + 1 + static_cast<index>(tail.size()) == V.rows(),
                 "BlockReflector::append: tail length does not reach the last row");
    const index j = count;
    for (index i = 0; i < pivot; ++i) V(i, j) = 0.0;
    V(pivot, j) = 1.0;
    for (std::size_t i = 0; i < tail.size(); ++i) V(pivot + 1 + static_cast<index>(i), j) = tail[i];

    const index len = V.rows() - pivot;
    std::vector<double> w(static_cast<std::size_t>(j), 0.0);
    for (index k = 0; k < j; ++k) {
      double acc = 0.0;
      for (index i = pivot; i < V.rows(); ++i) acc += V(i, k) * V(i, j);
      w[static_cast<std::size_t>(k)] = acc;
    }
    for (index r = 0; r < j; ++r) {
      double acc = 0.0;
      for (index k = r; k < j; ++k) acc += T(r, k) * w[static_cast<std::size_t>(k)];
      T(r, j) = -tau * acc;
    }
    for (index r = j + 1; r < T.rows(); ++r) T(r, j) = 0.0;
    T(j, j) = tau;
    ++count;
    add_flops(flops, static_cast<std::uint64_t>(2 * j * len + j * j));
  }
};

/// Dense I - V T V^T.
inline RealMatrix form_q(const BlockReflector& q) {
  const index n = q.rows();
  RealMatrix out = RealMatrix::identity(n);
  if (q.count == 0) return out;
  RealMatrix vt = multiply(q.v(), q.t());
  gemm(Op::none, Op::trans, -1.0, vt.view(), q.v(), 1.0, out.view());
  return out;
}

/**
 * @brief Applies a block reflector to M in place.
 *
 * left:  M <- (I - V T^T V^T) M   (that is Q^T M)
 * right: M <- M (I - V T V^T)     (that is M Q)
 */
inline void apply_block_reflector(Side side, ConstView<double> v, ConstView<double> t, MatrixView<double> m,
                                  FlopCounter* flops = nullptr, WorkerPool* pool = nullptr) {
  const index k = v.cols;
  require_dims(t.rows == k && t.cols == k, "apply_block_reflector: T must be k x k");
  if (side == Side::left) {
    require_dims(v.rows == m.rows, "apply_block_reflector: V rows must match M rows");
  } else {
    require_dims(v.rows == m.cols, "apply_block_reflector: V rows must match M columns");
  }
  if (k == 0 || m.empty()) return;
  if (side == Side::left) {
    RealMatrix w(k, m.cols);
    gemm(Op::trans, Op::none, 1.0, v, ConstView<double>(m), 0.0, w.view(), flops, pool);
    RealMatrix tw(k, m.cols);
    gemm(Op::trans, Op::none, 1.0, t, w.view(), 0.0, tw.view(), flops, pool);
    gemm(Op::none, Op::none, -1.0, v, tw.view(), 1.0, m, flops, pool);
  } else {
    RealMatrix w(m.rows, k);
    gemm(Op::none, Op::none, 1.0, ConstView<double>(m), v, 0.0, w.view(), flops, pool);
    RealMatrix wt(m.rows, k);
    gemm(Op::none, Op::none, 1.0, w.view(), t, 0.0, wt.view(), flops, pool);
    gemm(Op::none, Op::trans, -1.0, wt.view(), v, 1.0, m, flops, pool);
  }
}

inline void apply_block_reflector(Side side, const BlockReflector& q, MatrixView<double> m,
                                  FlopCounter* flops = nullptr, WorkerPool* pool = nullptr) {
  apply_block_reflector(side, q.v(), q.t(), m, flops, pool);
}

}  // namespace mshift
