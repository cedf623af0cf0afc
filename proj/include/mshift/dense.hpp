// SPDX-License-Identifier: Apache-2.0
#pragma once

//
// ... Standard header files
//
#include <algorithm>
#include <cassert>
#include <cmath>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

//
// ... mshift header files
//
#include <mshift/core.hpp>
#include <mshift/flops.hpp>
#include <mshift/worker_pool.hpp>

namespace mshift {

/**
 * @brief Non-owning column-major view with an explicit leading dimension.
 *
 * Element (i, j) lives at data[i + j * ld]. Indices are zero-based; the
 * sub-block arithmetic mirrors the usual A(i:j, k:l) slicing.
 */
template <typename T>
struct MatrixView {
  using value_type = std::remove_const_t<T>;
  T* data = nullptr;
  index rows = 0;
  index cols = 0;
  index ld = 1;

  constexpr T& operator()(index i, index j) const noexcept {
    assert(i >= 0 && i < rows && j >= 0 && j < cols);
    return data[i + j * ld];
  }

  [[nodiscard]] constexpr MatrixView block(index i, index j, index r, index c) const noexcept {
    assert(i >= 0 && j >= 0 && r >= 0 && c >= 0 && i + r <= rows && j + c <= cols);
    return {data + i + j * ld, r, c, std::max<index>(ld, 1)};
  }
  [[nodiscard]] constexpr MatrixView columns(index j, index c) const noexcept { return block(0, j, rows, c); }
  [[nodiscard]] constexpr MatrixView rows_range(index i, index r) const noexcept { return block(i, 0, r, cols); }
  [[nodiscard]] constexpr std::span<T> column(index j) const noexcept { return {data + j * ld, static_cast<std::size_t>(rows)}; }
  [[nodiscard]] constexpr bool empty() const noexcept { return rows == 0 || cols == 0; }

  // NOLINTNEXTLINE(google-explicit-constructor)
  constexpr operator MatrixView<const T>() const noexcept { return {data, rows, cols, ld}; }
};

template <typename T>
using ConstView = MatrixView<const T>;

/// Owning column-major dense matrix (ld == rows).
template <Scalar T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(index rows, index cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols)) {
    require_dims(rows >= 0 && cols >= 0, "Matrix: negative dimension");
  }
  Matrix(index rows, index cols, T fill) : Matrix(rows, cols) { std::fill(data_.begin(), data_.end(), fill); }

  explicit Matrix(ConstView<T> v) : Matrix(v.rows, v.cols) {
    for (index j = 0; j < cols_; ++j)
      for (index i = 0; i < rows_; ++i) (*this)(i, j) = v(i, j);
  }

  static Matrix identity(index n) {
    Matrix m(n, n);
    for (index i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  [[nodiscard]] index rows() const noexcept { return rows_; }
  [[nodiscard]] index cols() const noexcept { return cols_; }
  [[nodiscard]] index ld() const noexcept { return std::max<index>(rows_, 1); }
  [[nodiscard]] T* data() noexcept { return data_.data(); }
  [[nodiscard]] const T* data() const noexcept { return data_.data(); }
  [[nodiscard]] std::span<T> values() noexcept { return data_; }
  [[nodiscard]] std::span<const T> values() const noexcept { return data_; }

  T& operator()(index i, index j) noexcept {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return data_[static_cast<std::size_t>(i + j * rows_)];
  }
  const T& operator()(index i, index j) const noexcept {
    assert(i >= 0 && i < rows_ && j >= 0 && j < cols_);
    return data_[static_cast<std::size_t>(i + j * rows_)];
  }

  [[nodiscard]] MatrixView<T> view() noexcept { return {data_.data(), rows_, cols_, ld()}; }
  [[nodiscard]] ConstView<T> view() const noexcept { return {data_.data(), rows_, cols_, ld()}; }
  [[nodiscard]] MatrixView<T> block(index i, index j, index r, index c) noexcept { return view().block(i, j, r, c); }
  [[nodiscard]] ConstView<T> block(index i, index j, index r, index c) const noexcept { return view().block(i, j, r, c); }

  // NOLINTNEXTLINE(google-explicit-constructor)
  operator MatrixView<T>() noexcept { return view(); }
  // NOLINTNEXTLINE(google-explicit-constructor)
  operator ConstView<T>() const noexcept { return view(); }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  index rows_ = 0;
  index cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<cplx>;

// Uniform access to owning matrices and views in the generic helpers below.
template <Scalar T>
ConstView<T> cview(const Matrix<T>& m) noexcept {
  return m.view();
}
template <typename T>
ConstView<std::remove_const_t<T>> cview(MatrixView<T> v) noexcept {
  return {v.data, v.rows, v.cols, v.ld};
}
template <Scalar T>
MatrixView<T> mview(Matrix<T>& m) noexcept {
  return m.view();
}
template <typename T>
MatrixView<T> mview(MatrixView<T> v) noexcept {
  return v;
}

template <typename X>
using scalar_t = typename decltype(cview(std::declval<const X&>()))::value_type;

//
// ... Elementwise helpers
//

template <typename S, typename D>
void copy(const S& src_in, D&& dst_in) {
  const auto src = cview(src_in);
  const auto dst = mview(dst_in);
  require_dims(src.rows == dst.rows && src.cols == dst.cols, "copy: shape mismatch");
  for (index j = 0; j < src.cols; ++j)
    for (index i = 0; i < src.rows; ++i) dst(i, j) = src(i, j);
}

template <typename T>
void fill(MatrixView<T> dst, T value) {
  for (index j = 0; j < dst.cols; ++j)
    for (index i = 0; i < dst.rows; ++i) dst(i, j) = value;
}

inline ComplexMatrix to_complex(ConstView<double> a) {
  ComplexMatrix out(a.rows, a.cols);
  copy(a, out.view());
  return out;
}

template <typename X, typename T = scalar_t<X>>
Matrix<T> transpose(const X& x) {
  const ConstView<T> a = cview(x);
  Matrix<T> out(a.cols, a.rows);
  for (index j = 0; j < a.cols; ++j)
    for (index i = 0; i < a.rows; ++i) out(j, i) = a(i, j);
  return out;
}

template <typename X, typename T = scalar_t<X>>
Matrix<T> adjoint(const X& x) {
  const ConstView<T> a = cview(x);
  Matrix<T> out(a.cols, a.rows);
  for (index j = 0; j < a.cols; ++j)
    for (index i = 0; i < a.rows; ++i) out(j, i) = conj_if(a(i, j));
  return out;
}

template <typename X>
double frobenius_norm(const X& x) {
  using T = scalar_t<X>;
  const ConstView<T> a = cview(x);
  // Scaled sum of squares, as in xNRM2, to avoid overflow.
  double scale = 0.0;
  double ssq = 1.0;
  auto accumulate = [&](double x) {
    if (x == 0.0) return;
    const double ax = std::abs(x);
    if (scale < ax) {
      ssq = 1.0 + ssq * (scale / ax) * (scale / ax);
      scale = ax;
    } else {
      ssq += (ax / scale) * (ax / scale);
    }
  };
  for (index j = 0; j < a.cols; ++j) {
    for (index i = 0; i < a.rows; ++i) {
      if constexpr (is_complex_v<T>) {
        accumulate(a(i, j).real());
        accumulate(a(i, j).imag());
      } else {
        accumulate(a(i, j));
      }
    }
  }
  return scale * std::sqrt(ssq);
}

template <typename X>
double max_abs(const X& x) {
  const auto a = cview(x);
  double m = 0.0;
  for (index j = 0; j < a.cols; ++j)
    for (index i = 0; i < a.rows; ++i) m = std::max(m, std::abs(a(i, j)));
  return m;
}

/// max |a - b| entrywise.
template <typename X, typename Y>
double max_abs_diff(const X& x, const Y& y) {
  const auto a = cview(x);
  const auto b = cview(y);
  require_dims(a.rows == b.rows && a.cols == b.cols, "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (index j = 0; j < a.cols; ++j)
    for (index i = 0; i < a.rows; ++i) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

template <typename X, typename Y, typename T = scalar_t<X>>
Matrix<T> subtract(const X& x, const Y& y) {
  const ConstView<T> a = cview(x);
  const ConstView<T> b = cview(y);
  require_dims(a.rows == b.rows && a.cols == b.cols, "subtract: shape mismatch");
  Matrix<T> out(a.rows, a.cols);
  for (index j = 0; j < a.cols; ++j)
    for (index i = 0; i < a.rows; ++i) out(i, j) = a(i, j) - b(i, j);
  return out;
}

//
// ... Multiply-accumulate
//

enum class Op { none, trans, adjoint };

namespace detail {

template <Scalar T>
constexpr T op_elem(ConstView<T> a, Op op, index i, index j) noexcept {
  switch (op) {
    case Op::none:
      return a(i, j);
    case Op::trans:
      return a(j, i);
    case Op::adjoint:
      return conj_if(a(j, i));
  }
  return T{};
}

constexpr index op_rows(index rows, index cols, Op op) noexcept { return op == Op::none ? rows : cols; }
constexpr index op_cols(index rows, index cols, Op op) noexcept { return op == Op::none ? cols : rows; }

template <Scalar T>
constexpr std::uint64_t madd_flops() noexcept {
  return is_complex_v<T> ? 8 : 2;
}

// Computes columns [j0, j1) of C. Every element is formed by the same
// sequence of operations regardless of how columns are split, so results do
// not depend on the worker count.
template <Scalar T>
void gemm_columns(Op opx, Op opy, T alpha, ConstView<T> x, ConstView<T> y, T beta, MatrixView<T> z, index j0,
                  index j1) {
  const index m = z.rows;
  const index k = op_cols(x.rows, x.cols, opx);
  for (index j = j0; j < j1; ++j) {
    T* zc = z.data + j * z.ld;
    if (beta == T(0)) {
      std::fill(zc, zc + m, T(0));
    } else if (beta != T(1)) {
      for (index i = 0; i < m; ++i) zc[i] *= beta;
    }
    if (alpha == T(0)) continue;
    if (opx == Op::none) {
      // axpy form: contiguous columns of X.
      for (index l = 0; l < k; ++l) {
        const T b = alpha * op_elem(y, opy, l, j);
        const T* xc = x.data + l * x.ld;
        for (index i = 0; i < m; ++i) zc[i] += xc[i] * b;
      }
    } else {
      // dot form: contiguous columns of X^T.
      for (index i = 0; i < m; ++i) {
        const T* xc = x.data + i * x.ld;
        T acc{};
        if (opx == Op::trans) {
          for (index l = 0; l < k; ++l) acc += xc[l] * op_elem(y, opy, l, j);
        } else {
          for (index l = 0; l < k; ++l) acc += conj_if(xc[l]) * op_elem(y, opy, l, j);
        }
        zc[i] += alpha * acc;
      }
    }
  }
}

}  // namespace detail

/**
 * @brief Z <- alpha * op(X) * op(Y) + beta * Z.
 *
 * Deterministic: each output column is produced by a fixed operation
 * sequence, so splitting columns across a pool is bitwise reproducible.
 */
template <Scalar T>
void gemm(Op opx, Op opy, T alpha, std::type_identity_t<ConstView<T>> x, std::type_identity_t<ConstView<T>> y,
          std::type_identity_t<T> beta, std::type_identity_t<MatrixView<T>> z,
          FlopCounter* flops = nullptr, WorkerPool* pool = nullptr) {
  const index m = detail::op_rows(x.rows, x.cols, opx);
  const index k = detail::op_cols(x.rows, x.cols, opx);
  const index ky = detail::op_rows(y.rows, y.cols, opy);
  const index n = detail::op_cols(y.rows, y.cols, opy);
  require_dims(k == ky && z.rows == m && z.cols == n, "gemm: operand shapes do not conform");
  if (m == 0 || n == 0) return;
  add_flops(flops, detail::madd_flops<T>() * static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(n) *
                       static_cast<std::uint64_t>(k));
  constexpr index min_cols_per_task = 4;
  if (pool == nullptr || pool->size() == 1 || n < 2 * min_cols_per_task || m * k < 4096) {
    detail::gemm_columns(opx, opy, alpha, x, y, beta, z, 0, n);
    return;
  }
  const index parts = std::min<index>(static_cast<index>(pool->size()) * 2, n / min_cols_per_task);
  pool->parallel_for(static_cast<std::size_t>(parts), [&](std::size_t p) {
    const Range r = split_range(n, parts, static_cast<index>(p));
    detail::gemm_columns(opx, opy, alpha, x, y, beta, z, r.begin, r.end);
  });
}

/// gemm_acc: Z <- alpha * X * Y + beta * Z (no transposition).
template <Scalar T>
void gemm_acc(T alpha, std::type_identity_t<ConstView<T>> x, std::type_identity_t<ConstView<T>> y,
              std::type_identity_t<T> beta, std::type_identity_t<MatrixView<T>> z, FlopCounter* flops = nullptr,
              WorkerPool* pool = nullptr) {
  gemm(Op::none, Op::none, alpha, x, y, beta, z, flops, pool);
}

template <typename X, typename Y, typename T = scalar_t<X>>
Matrix<T> multiply(const X& xin, const Y& yin, Op opx = Op::none, Op opy = Op::none) {
  const ConstView<T> x = cview(xin);
  const ConstView<T> y = cview(yin);
  Matrix<T> z(detail::op_rows(x.rows, x.cols, opx), detail::op_cols(y.rows, y.cols, opy));
  gemm(opx, opy, T(1), x, y, T(0), z.view());
  return z;
}

/**
 * @brief Solves R X = B for upper triangular R by back substitution.
 *
 * Throws SingularError naming the first zero diagonal entry found (scanning
 * from the bottom, in solve order).
 */
template <typename X, typename Y, typename T = scalar_t<X>>
Matrix<T> trsm_upper(const X& rin, const Y& bin, FlopCounter* flops = nullptr) {
  const ConstView<T> r = cview(rin);
  const ConstView<T> b = cview(bin);
  require_dims(r.rows == r.cols, "trsm_upper: R must be square");
  require_dims(b.rows == r.rows, "trsm_upper: B rows must match R");
  const index n = r.rows;
  Matrix<T> x(b);
  for (index i = n - 1; i >= 0; --i) {
    if (r(i, i) == T(0)) throw SingularError("trsm_upper: zero diagonal entry", i);
  }
  for (index j = 0; j < x.cols(); ++j) {
    for (index i = n - 1; i >= 0; --i) {
      x(i, j) /= r(i, i);
      const T xi = x(i, j);
      for (index l = 0; l < i; ++l) x(l, j) -= r(l, i) * xi;
    }
  }
  add_flops(flops, detail::madd_flops<T>() / 2 * static_cast<std::uint64_t>(n * n * x.cols()));
  return x;
}

}  // namespace mshift
